#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "trigan/data/synthetic.hpp"

namespace trigan::testing {

namespace fs = std::filesystem;

NetworkSpec tiny_spec(Role role, std::size_t num_classes) {
    NetworkSpec spec;
    spec.role = role;
    spec.image_size = 32;
    spec.latent_dim = 8;
    spec.base_width = 8;
    spec.num_classes = num_classes;
    return spec;
}

Player make_player(const NetworkSpec& spec, std::uint64_t seed) {
    Player p{build_network(spec), AdamState{}};
    init_weights(p.net, seed);
    return p;
}

Player clone_player(const Player& src) {
    Player p{build_network(src.net.spec()), src.optimizer};
    auto copy = [](std::span<const NamedTensor> from, std::span<const NamedTensor> to) {
        for (std::size_t i = 0; i < from.size(); ++i) {
            const auto v = from[i].tensor.values();
            Tensor dst = to[i].tensor;
            std::copy(v.begin(), v.end(), dst.values().begin());
        }
    };
    copy(src.net.parameters(), p.net.parameters());
    copy(src.net.buffers(), p.net.buffers());
    return p;
}

Snapshot snapshot(const Network& net) {
    Snapshot s;
    for (const auto& p : net.parameters()) s.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
    for (const auto& b : net.buffers()) s.emplace_back(b.tensor.values().begin(), b.tensor.values().end());
    return s;
}

Snapshot parameter_snapshot(const Network& net) {
    Snapshot s = snapshot(net);
    s.resize(net.parameters().size());
    return s;
}

LabeledBatch synthetic_batch(std::size_t size, std::uint64_t seed, std::size_t image_size) {
    SyntheticSpec spec;
    spec.image_size = image_size;
    spec.n_per_class = size / 2;
    spec.seed = seed;
    const Dataset ds = make_synthetic(spec);
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    return make_batch(ds, idx);
}

ExperimentConfig tiny_config(TrainerKind trainer) {
    ExperimentConfig c;
    c.trainer = trainer;
    c.image_size = 32;
    c.latent_dim = 8;
    c.base_width = 8;
    c.epochs = 2;
    c.batch_size = 10;
    c.n_train = 40;
    c.n_val = 40;
    c.sample_every = 1;
    c.seed = 3;
    return c;
}

ScratchDir::ScratchDir(const std::string& name) : path_(fs::temp_directory_path() / ("trigan_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
}

ScratchDir::~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace trigan::testing
