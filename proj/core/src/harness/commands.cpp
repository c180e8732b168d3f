#include "trigan/harness/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "trigan/common/random.hpp"
#include "trigan/data/image_io.hpp"
#include "trigan/data/synthetic.hpp"
#include "trigan/harness/config_io.hpp"
#include "trigan/harness/sweep.hpp"
#include "trigan/nets/checkpoint.hpp"
#include "trigan/training/trainers.hpp"

#ifndef TRIGAN_VERSION
#define TRIGAN_VERSION "0.0.0"
#endif
#ifndef TRIGAN_GIT_REV
#define TRIGAN_GIT_REV ""
#endif

namespace trigan {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return hash_string(bytes.str());
}

}  // namespace

std::string tool_version() {
    const std::string rev = TRIGAN_GIT_REV;
    return rev.empty() ? std::string(TRIGAN_VERSION) : std::string(TRIGAN_VERSION) + "+" + rev;
}

fs::path command_dir(const ExperimentConfig& config, std::string_view command) {
    return config.out_dir / config_hash(config, command);
}

void write_run_record(const fs::path& path, const ExperimentConfig& config, const std::string& hash,
                      const RunResult& result) {
    json rows = json::array();
    for (const MetricsRow& r : result.rows) {
        rows.push_back({{"epoch", r.epoch},
                        {"split", r.split},
                        {"l_s", optional_number(r.l_s)},
                        {"l_u", optional_number(r.l_u)},
                        {"l_kl", optional_number(r.l_kl)},
                        {"l_c_total", optional_number(r.l_c_total)},
                        {"l_d_real", optional_number(r.l_d_real)},
                        {"l_d_fake", optional_number(r.l_d_fake)},
                        {"l_gen_adv", optional_number(r.l_gen_adv)},
                        {"l_cu", optional_number(r.l_cu)},
                        {"l_g_total", optional_number(r.l_g_total)},
                        {"accuracy", optional_number(r.accuracy)},
                        {"accepted_fraction", optional_number(r.accepted_fraction)}});
    }
    json record = {{"config_hash", hash},
                   {"version", tool_version()},
                   {"trainer", std::string(trainer_name(config.trainer))},
                   {"seed", config.seed},
                   {"initial_accuracy", result.initial_accuracy},
                   {"final_accuracy", result.final_accuracy},
                   {"best_accuracy", result.best_accuracy},
                   {"best_epoch", result.best_epoch},
                   {"steps", result.steps},
                   {"wall_seconds", result.wall_seconds},
                   {"epochs", rows}};
    write_text(path, record.dump(2) + "\n");
}

int cmd_train(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    try {
        config.validate();
    } catch (const std::exception& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return 2;
    }
    const std::string hash = config_hash(config, "train");
    const fs::path dir = config.out_dir / hash;
    try {
        fs::create_directories(dir);
        write_text(dir / "config.json", config_to_json(config) + "\n");
        const RunResult result = train_run(config, dir);
        write_run_record(dir / "run.json", config, hash, result);
        out << "trainer " << trainer_name(config.trainer) << " seed " << config.seed << ": final_acc "
            << result.final_accuracy << " best_acc " << result.best_accuracy << " (epoch " << result.best_epoch
            << ")\n"
            << "outputs: " << dir.string() << '\n';
        return 0;
    } catch (const TrainingAborted& e) {
        err << "error: training aborted in " << e.component() << ": " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_sweep(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    try {
        config.validate();
    } catch (const std::exception& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return 2;
    }
    const fs::path dir = command_dir(config, "sweep");
    try {
        fs::create_directories(dir);
        write_text(dir / "config.json", config_to_json(config) + "\n");
        const SweepOutcome outcome = run_sweep(config, dir, &err);
        out << format_table(outcome.rows) << "outputs: " << dir.string() << '\n';
        if (outcome.failures > 0) {
            err << "error: " << outcome.failures << " of " << outcome.results.size() << " cells failed\n";
            return 4;
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err) {
    if (options.count == 0) {
        err << "error: count must be at least 1\n";
        return 2;
    }
    try {
        Network generator = load_checkpoint(options.checkpoint, Role::generator);
        const std::string hash = hash_string("generate\n" + file_hash(options.checkpoint) + '\n' +
                                             std::to_string(options.count) + '\n' + std::to_string(options.seed));
        const fs::path dir = options.out_dir / hash;
        fs::create_directories(dir);
        const std::size_t size = generator.spec().image_size;
        const std::size_t plane = size * size;
        Rng rng(derive_seed(options.seed, Stream::samples));
        std::vector<double> first_grid;
        constexpr std::size_t kChunk = 64;
        for (std::size_t start = 0; start < options.count; start += kChunk) {
            const std::size_t n = std::min(kChunk, options.count - start);
            const Tensor z = sample_latent(n, generator.spec().latent_dim, rng);
            Graph g;
            const Tensor images = generator.forward(g, z, ForwardMode::eval);
            if (start == 0) first_grid = montage(images, 8);
            const auto v = images.values();
            for (std::size_t k = 0; k < n; ++k) {
                char name[32];
                std::snprintf(name, sizeof(name), "sample_%04zu.pgm", start + k);
                write_pgm(dir / name, v.subspan(k * plane, plane), size, size);
            }
        }
        write_pgm(dir / "montage.pgm", first_grid, 8 * size, 8 * size);
        out << "wrote " << options.count << " samples and montage.pgm to " << dir.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
    try {
        Network classifier = load_checkpoint(options.checkpoint, Role::classifier);
        ExperimentConfig cfg = options.data;
        cfg.image_size = classifier.spec().image_size;
        Dataset val;
        if (cfg.data_dir) {
            val = load_directory_splits(cfg).val;
        } else {
            if (cfg.n_val < 2 || cfg.n_val % 2 != 0) throw std::invalid_argument("n_val must be a positive even number");
            SyntheticSpec spec;
            spec.image_size = cfg.image_size;
            spec.n_per_class = cfg.n_val / 2;
            spec.seed = derive_seed(cfg.seed, Stream::validation_data);
            val = make_synthetic(spec);
        }
        if (val.num_classes() > classifier.spec().num_classes) {
            throw std::invalid_argument("checkpoint predicts " + std::to_string(classifier.spec().num_classes) +
                                        " classes but the data has " + std::to_string(val.num_classes()));
        }
        const double accuracy = evaluate(classifier, val, val.num_classes());
        const std::string hash = config_hash(cfg, "eval:" + file_hash(options.checkpoint));
        const fs::path dir = cfg.out_dir / hash;
        fs::create_directories(dir);
        const json record = {{"checkpoint", options.checkpoint.generic_string()},
                             {"samples", val.size()},
                             {"accuracy", accuracy},
                             {"version", tool_version()}};
        write_text(dir / "eval.json", record.dump(2) + "\n");
        out << "accuracy " << accuracy << " on " << val.size() << " samples\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace trigan
