#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "trigan/nets/checkpoint.hpp"
#include "trigan/training/run.hpp"

namespace trigan {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::ScratchDir;
using testing::tiny_config;

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::size_t filled_cells(const std::string& row) {
    std::size_t n = 0;
    std::istringstream in(row);
    for (std::string cell; std::getline(in, cell, ',');) n += cell.empty() ? 0 : 1;
    return n;
}

TEST(Metrics, HeaderAndEmptyCells) {
    EXPECT_EQ(metrics_header(),
              "epoch,split,l_s,l_u,l_kl,l_c_total,l_d_real,l_d_fake,l_gen_adv,l_cu,l_g_total,accuracy,"
              "accepted_fraction,d_real_mean,d_fake_mean,wall_ms");
    MetricsRow r;
    r.epoch = 3;
    r.split = "val";
    r.accuracy = 0.5;
    EXPECT_EQ(format_metrics_row(r), "3,val,,,,,,,,,,0.5,,,,");
    r.l_s = 0.1;
    EXPECT_EQ(format_metrics_row(r), "3,val,0.1,,,,,,,,,0.5,,,,");
}

TEST(Config, ValidateNamesTheField) {
    ExperimentConfig c = tiny_config(TrainerKind::tri_gan);
    EXPECT_NO_THROW(c.validate());
    auto message = [](const ExperimentConfig& bad) {
        try {
            bad.validate();
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    ExperimentConfig bad = c;
    bad.weights.tau = 1.5;
    EXPECT_NE(message(bad).find("tau"), std::string::npos);
    bad = c;
    bad.batch_size = 0;
    EXPECT_NE(message(bad).find("batch_size"), std::string::npos);
    bad = c;
    bad.n_train = 5;
    EXPECT_NE(message(bad).find("n_train"), std::string::npos);
    bad = c;
    bad.image_size = 40;
    EXPECT_FALSE(message(bad).empty());
    bad = c;
    bad.optimizer.lr = -1.0;
    EXPECT_NE(message(bad).find("lr"), std::string::npos);
}

TEST(TrainRun, ZeroEpochsWritesHeaderAndInitialAccuracy) {
    ScratchDir dir("run_zero");
    ExperimentConfig c = tiny_config(TrainerKind::tri_gan);
    c.epochs = 0;
    const RunResult r = train_run(c, dir.path());
    EXPECT_EQ(read_file(dir.path() / "metrics.csv"), metrics_header() + "\n");
    EXPECT_EQ(r.steps, 0u);
    EXPECT_TRUE(r.rows.empty());
    EXPECT_EQ(r.final_accuracy, r.initial_accuracy);
    EXPECT_EQ(r.best_epoch, 0u);
    EXPECT_TRUE(fs::exists(dir.path() / "classifier.ckpt"));
    EXPECT_TRUE(fs::exists(dir.path() / "samples" / "final.pgm"));
}

TEST(TrainRun, EpochAccountingAndOutputs) {
    ScratchDir dir("run_outputs");
    ExperimentConfig c = tiny_config(TrainerKind::tri_gan);
    const RunResult r = train_run(c, dir.path());
    EXPECT_EQ(r.steps, 2u * (40u / 10u));
    const auto rows = lines(read_file(dir.path() / "metrics.csv"));
    ASSERT_EQ(rows.size(), 1u + 2u * c.epochs);
    EXPECT_EQ(rows[1].substr(0, 8), "1,train,");
    EXPECT_EQ(rows[2].substr(0, 6), "1,val,");
    for (const char* f : {"classifier.ckpt", "generator.ckpt", "discriminator.ckpt", "samples/epoch_0001.pgm",
                          "samples/epoch_0002.pgm", "samples/final.pgm"}) {
        EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
    }
    EXPECT_EQ(load_checkpoint(dir.path() / "generator.ckpt").role(), Role::generator);
    EXPECT_EQ(fs::file_size(dir.path() / "samples" / "final.pgm"), std::string("P5\n256 256\n255\n").size() + 65536);
}

TEST(TrainRun, IdenticalConfigsGiveIdenticalBytes) {
    ScratchDir a("run_det_a"), b("run_det_b");
    const ExperimentConfig c = tiny_config(TrainerKind::tri_gan);
    train_run(c, a.path());
    train_run(c, b.path());
    for (const char* f : {"metrics.csv", "classifier.ckpt", "generator.ckpt", "discriminator.ckpt",
                          "samples/final.pgm"}) {
        EXPECT_EQ(read_file(a.path() / f), read_file(b.path() / f)) << f;
    }
}

TEST(TrainRun, PopulatedColumnsGrowWithTrainerCapability) {
    std::vector<std::size_t> filled;
    for (TrainerKind k : {TrainerKind::vanilla, TrainerKind::multitask_d, TrainerKind::ecgan, TrainerKind::tri_gan}) {
        ScratchDir dir("run_cols");
        ExperimentConfig c = tiny_config(k);
        c.epochs = 1;
        train_run(c, dir.path());
        const auto rows = lines(read_file(dir.path() / "metrics.csv"));
        ASSERT_EQ(rows.size(), 3u);
        filled.push_back(filled_cells(rows[1]));
        EXPECT_EQ(filled_cells(rows[2]), 3u);
        EXPECT_EQ(fs::exists(dir.path() / "generator.ckpt"), k != TrainerKind::vanilla);
        EXPECT_EQ(fs::exists(dir.path() / "discriminator.ckpt"),
                  k == TrainerKind::ecgan || k == TrainerKind::tri_gan);
    }
    EXPECT_EQ(filled, (std::vector<std::size_t>{5, 11, 13, 15}));
}

TEST(TrainRun, WallTimeOnlyWhenRequested) {
    ScratchDir dir("run_wall");
    ExperimentConfig c = tiny_config(TrainerKind::vanilla);
    c.epochs = 1;
    c.record_wall_time = true;
    train_run(c, dir.path());
    const auto rows = lines(read_file(dir.path() / "metrics.csv"));
    EXPECT_NE(rows[1].back(), ',');
    EXPECT_EQ(rows[2].back(), ',');
}

TEST(RunData, SyntheticSplitsAreBalancedAndDisjointStreams) {
    ExperimentConfig c = tiny_config(TrainerKind::vanilla);
    const RunData d = load_run_data(c);
    EXPECT_EQ(d.train.size(), 40u);
    EXPECT_EQ(d.val.size(), 40u);
    EXPECT_EQ(d.train.count_label(0), 20u);
    const auto a = d.train.images.values(), b = d.val.images.values();
    EXPECT_FALSE(std::equal(a.begin(), a.end(), b.begin()));
}

}  // namespace
}  // namespace trigan
