#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "trigan/autodiff/ops.hpp"
#include "trigan/nets/checkpoint.hpp"
#include "trigan/nets/network.hpp"
#include "trigan/training/trainers.hpp"

namespace trigan {
namespace {

namespace fs = std::filesystem;

NetworkSpec small(Role role) { return {role, 32, 1, 8, 16, 2}; }

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "trigan_nets_test";
    fs::create_directories(dir);
    return dir / name;
}

TEST(NetworkSpec, ValidatesFields) {
    EXPECT_NO_THROW(small(Role::classifier).validate());
    NetworkSpec bad = small(Role::classifier);
    bad.image_size = 48;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad.image_size = 16;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = small(Role::classifier);
    bad.num_classes = 1;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_EQ(small(Role::generator).stages(), 3u);
    EXPECT_EQ(small(Role::generator).top_width(), 64u);
}

TEST(Network, OutputShapesAndRanges) {
    Network g = build_generator(small(Role::generator));
    Network d = build_discriminator(small(Role::discriminator));
    Network c = build_classifier(small(Role::classifier));
    init_weights(g, 1);
    init_weights(d, 2);
    init_weights(c, 3);
    Graph graph;
    std::mt19937_64 rng(4);
    const Tensor z = sample_latent(3, 8, rng);
    const Tensor x = g.forward(graph, z);
    EXPECT_EQ(x.shape(), (Shape{3, 1, 32, 32}));
    for (double v : x.values()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
    const Tensor p = d.forward(graph, x);
    EXPECT_EQ(p.shape(), (Shape{3}));
    for (double v : p.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_EQ(c.forward(graph, x).shape(), (Shape{3, 2}));
}

TEST(Network, RejectsWrongInputShape) {
    Network c = build_classifier(small(Role::classifier));
    Graph g;
    EXPECT_THROW(c.forward(g, Tensor::zeros({2, 1, 64, 64})), ShapeError);
    Network gen = build_generator(small(Role::generator));
    EXPECT_THROW(gen.forward(g, Tensor::zeros({2, 9})), ShapeError);
}

TEST(Network, DiscriminatorParameterCount) {
    // conv1 16*1*16+16, conv2 32*16*16, bn2 2*32, conv3 64*32*16, bn3 2*64, head 64*16+1
    EXPECT_EQ(build_discriminator(small(Role::discriminator)).parameter_count(), 42449u);
}

TEST(Network, ParameterNamesAreUniqueAndStable) {
    Network d = build_discriminator(small(Role::discriminator));
    std::vector<std::string> names;
    for (const auto& p : d.parameters()) names.push_back(p.name);
    const std::vector<std::string> expected{"conv1.weight", "conv1.bias", "conv2.weight", "bn2.gamma", "bn2.beta",
                                            "conv3.weight", "bn3.gamma", "bn3.beta", "head.weight", "head.bias"};
    EXPECT_EQ(names, expected);
    EXPECT_EQ(d.buffers().size(), 4u);
}

TEST(Network, ClassifierSharesTheDiscriminatorTrunk) {
    Network d = build_discriminator(small(Role::discriminator));
    Network c = build_classifier(small(Role::classifier));
    const auto dp = d.parameters(), cp = c.parameters();
    ASSERT_EQ(dp.size(), cp.size());
    for (std::size_t i = 0; i + 2 < dp.size(); ++i) {
        EXPECT_EQ(dp[i].name, cp[i].name);
        EXPECT_EQ(dp[i].tensor.shape(), cp[i].tensor.shape()) << dp[i].name;
    }
    EXPECT_EQ(cp[cp.size() - 2].tensor.shape(), (Shape{2, 64, 4, 4}));
}

TEST(Network, ClassifierProbabilitiesSumToOne) {
    Network c = build_classifier(small(Role::classifier));
    init_weights(c, 8);
    Graph g;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor x = Tensor::zeros({4, 1, 32, 32});
    for (double& v : x.values()) v = u(rng);
    const Tensor p = ops::softmax(g, c.forward(g, x));
    for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(p.at(2 * r) + p.at(2 * r + 1), 1.0, 1e-15);
}

TEST(Network, InitializationStatistics) {
    NetworkSpec spec = small(Role::discriminator);
    spec.base_width = 32;
    Network d = build_discriminator(spec);
    init_weights(d, 9);
    for (const auto& p : d.parameters()) {
        auto v = p.tensor.values();
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (p.name.ends_with(".bias") || p.name.ends_with(".beta")) {
            for (double x : v) EXPECT_EQ(x, 0.0);
        } else if (p.name.ends_with(".gamma")) {
            EXPECT_NEAR(mean, 1.0, 0.02);
        } else if (v.size() > 1000) {
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            EXPECT_NEAR(std::sqrt(var / static_cast<double>(v.size())), 0.02, 0.002) << p.name;
        }
    }
}

TEST(Network, InitIsDeterministicPerSeed) {
    Network a = build_classifier(small(Role::classifier));
    Network b = build_classifier(small(Role::classifier));
    init_weights(a, 5);
    init_weights(b, 5);
    for (std::size_t i = 0; i < a.parameters().size(); ++i) {
        const auto va = a.parameters()[i].tensor.values(), vb = b.parameters()[i].tensor.values();
        EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
    }
}

TEST(Network, FreezeGuardRestoresTrainability) {
    Network c = build_classifier(small(Role::classifier));
    {
        FreezeGuard guard{&c};
        EXPECT_FALSE(c.trainable());
        for (const auto& p : c.parameters()) EXPECT_FALSE(p.tensor.requires_grad());
    }
    EXPECT_TRUE(c.trainable());
    for (const auto& p : c.parameters()) EXPECT_TRUE(p.tensor.requires_grad());
}

TEST(Checkpoint, RoundTripsAllTensors) {
    Network c = build_classifier(small(Role::classifier));
    init_weights(c, 11);
    Tensor(c.buffers()[0].tensor).values()[0] = 0.25;
    const fs::path path = temp_path("c.ckpt");
    save_checkpoint(c, path);
    Network back = load_checkpoint(path, Role::classifier);
    EXPECT_EQ(back.spec(), c.spec());
    for (std::size_t i = 0; i < c.parameters().size(); ++i) {
        const auto a = c.parameters()[i].tensor.values(), b = back.parameters()[i].tensor.values();
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
    EXPECT_EQ(back.buffers()[0].tensor.at(0), 0.25);

    std::ifstream in(path, std::ios::binary);
    char magic[6];
    in.read(magic, 6);
    EXPECT_EQ(std::string(magic, 6), "3NGAN1");
}

TEST(Checkpoint, RejectsRoleMismatchTruncationAndGarbage) {
    Network g = build_generator(small(Role::generator));
    const fs::path path = temp_path("g.ckpt");
    save_checkpoint(g, path);
    EXPECT_THROW(load_checkpoint(path, Role::classifier), CheckpointError);
    EXPECT_NO_THROW(load_checkpoint(path));

    const auto size = fs::file_size(path);
    const fs::path cut = temp_path("cut.ckpt");
    fs::copy_file(path, cut, fs::copy_options::overwrite_existing);
    fs::resize_file(cut, size - 5);
    EXPECT_THROW(load_checkpoint(cut), CheckpointError);

    const fs::path junk = temp_path("junk.ckpt");
    std::ofstream(junk) << "not a checkpoint at all";
    EXPECT_THROW(load_checkpoint(junk), CheckpointError);
    EXPECT_THROW(load_checkpoint(temp_path("missing.ckpt")), CheckpointError);
}

}  // namespace
}  // namespace trigan
