#include "trigan/training/run.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "trigan/common/random.hpp"
#include "trigan/data/image_io.hpp"
#include "trigan/data/synthetic.hpp"
#include "trigan/nets/checkpoint.hpp"
#include "trigan/nets/network.hpp"

namespace trigan {

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    weights.validate();
    if (!(optimizer.lr > 0.0) || !std::isfinite(optimizer.lr)) fail("lr must be finite and > 0");
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
    if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
    if (!(optimizer.eps > 0.0) || !std::isfinite(optimizer.eps)) fail("eps must be finite and > 0");
    if (batch_size == 0) fail("batch_size must be at least 1");
    if (latent_dim == 0) fail("latent_dim must be at least 1");
    if (base_width == 0) fail("base_width must be at least 1");
    if (n_train < batch_size) {
        fail("n_train (" + std::to_string(n_train) + ") must be at least batch_size (" + std::to_string(batch_size) +
             ")");
    }
    if (!data_dir && n_train % 2 != 0) fail("n_train must be even for the two-class synthetic data");
    if (!data_dir && (n_val < 2 || n_val % 2 != 0)) fail("n_val must be a positive even number");
    if (val_dir && !data_dir) fail("val_dir requires data_dir");
    NetworkSpec probe{Role::classifier, image_size, 1, latent_dim, base_width, 2};
    probe.validate();
    if (trainers.empty()) fail("trainers must list at least one trainer");
    if (train_sizes.empty()) fail("train_sizes must list at least one size");
    for (std::size_t n : train_sizes) {
        if (n < batch_size) fail("train size " + std::to_string(n) + " is smaller than batch_size");
        if (!data_dir && n % 2 != 0) fail("train size " + std::to_string(n) + " must be even for synthetic data");
    }
    if (repeats == 0) fail("repeats must be at least 1");
    for (const auto* grid : {&tau_grid, &alpha_grid, &lambda_grid}) {
        for (double v : *grid) {
            LossWeights probe_weights = weights;
            if (grid == &tau_grid) probe_weights.tau = v;
            if (grid == &alpha_grid) probe_weights.alpha = v;
            if (grid == &lambda_grid) probe_weights.lambda = v;
            probe_weights.validate();
        }
    }
    if (jobs == 0) fail("jobs must be at least 1");
}

namespace {

namespace fs = std::filesystem;

std::optional<fs::path> first_dir(const fs::path& root, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        if (fs::is_directory(root / n)) return root / n;
    }
    return std::nullopt;
}

}  // namespace

RunData load_run_data(const ExperimentConfig& config) {
    RunData out;
    if (!config.data_dir) {
        SyntheticSpec train_spec;
        train_spec.image_size = config.image_size;
        train_spec.n_per_class = config.n_train / 2;
        train_spec.seed = derive_seed(config.seed, Stream::data);
        out.train = make_synthetic(train_spec);
        SyntheticSpec val_spec = train_spec;
        val_spec.n_per_class = config.n_val / 2;
        val_spec.seed = derive_seed(config.seed, Stream::validation_data);
        out.val = make_synthetic(val_spec);
        return out;
    }
    DirectorySplits splits = load_directory_splits(config);
    out.train = subsample_balanced(splits.pool, config.n_train, config.seed);
    out.val = std::move(splits.val);
    return out;
}

DirectorySplits load_directory_splits(const ExperimentConfig& config) {
    if (!config.data_dir) throw std::invalid_argument("no data_dir configured");
    fs::path train_root = *config.data_dir, val_root;
    if (config.val_dir) {
        val_root = *config.val_dir;
    } else {
        const auto train_split = first_dir(*config.data_dir, {"train"});
        const auto val_split = first_dir(*config.data_dir, {"test", "val"});
        if (!train_split || !val_split) {
            throw std::invalid_argument("data_dir " + config.data_dir->string() +
                                        " needs train/ and test/ subdirectories, or pass val_dir");
        }
        train_root = *train_split;
        val_root = *val_split;
    }
    DirectorySplits out{load_image_dir(train_root, config.image_size), load_image_dir(val_root, config.image_size)};
    if (out.val.class_names != out.pool.class_names) {
        throw std::invalid_argument("validation classes differ from training classes");
    }
    return out;
}

namespace {

const char* const kColumns[] = {"epoch",    "split",       "l_s",         "l_u",        "l_kl",
                                "l_c_total", "l_d_real",   "l_d_fake",    "l_gen_adv",  "l_cu",
                                "l_g_total", "accuracy",   "accepted_fraction", "d_real_mean", "d_fake_mean",
                                "wall_ms"};

void append_number(std::string& out, const std::optional<double>& v) {
    out += ',';
    if (!v) return;
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), *v);
    out.append(buf, res.ptr);
}

/// Running sums over the steps of one epoch.
struct EpochAccumulator {
    LossReport sum;
    double accuracy = 0.0, d_real = 0.0, d_fake = 0.0;
    std::size_t steps = 0;

    void add(const StepMetrics& m) {
        const LossReport& r = m.losses;
        sum.l_s += r.l_s;
        sum.l_u += r.l_u;
        sum.l_kl += r.l_kl;
        sum.l_c_total += r.l_c_total;
        sum.l_d_real += r.l_d_real;
        sum.l_d_fake += r.l_d_fake;
        sum.l_gen_adv += r.l_gen_adv;
        sum.l_cu += r.l_cu;
        sum.l_g_total += r.l_g_total;
        sum.accepted_fraction += r.accepted_fraction;
        accuracy += m.train_accuracy;
        d_real += m.d_real_mean;
        d_fake += m.d_fake_mean;
        ++steps;
    }

    MetricsRow row(std::size_t epoch, TrainerKind kind) const {
        const double n = static_cast<double>(steps);
        MetricsRow r;
        r.epoch = epoch;
        r.split = "train";
        r.l_s = sum.l_s / n;
        r.l_c_total = sum.l_c_total / n;
        r.accuracy = accuracy / n;
        if (kind == TrainerKind::vanilla) return r;
        r.l_d_real = sum.l_d_real / n;
        r.l_d_fake = sum.l_d_fake / n;
        r.l_gen_adv = sum.l_gen_adv / n;
        r.l_g_total = sum.l_g_total / n;
        r.d_real_mean = d_real / n;
        r.d_fake_mean = d_fake / n;
        if (kind == TrainerKind::multitask_d) return r;
        r.l_u = sum.l_u / n;
        r.accepted_fraction = sum.accepted_fraction / n;
        if (kind == TrainerKind::ecgan) return r;
        r.l_kl = sum.l_kl / n;
        r.l_cu = sum.l_cu / n;
        return r;
    }
};

void write_samples(Network& generator, const Tensor& z, const fs::path& path) {
    Graph g;
    const Tensor images = generator.forward(g, z, ForwardMode::eval);
    const std::size_t size = generator.spec().image_size;
    write_pgm(path, montage(images, 8), 8 * size, 8 * size);
}

}  // namespace

std::string metrics_header() {
    std::string out;
    for (const char* c : kColumns) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

std::string format_metrics_row(const MetricsRow& r) {
    std::string out = std::to_string(r.epoch) + ',' + r.split;
    for (const auto* v : {&r.l_s, &r.l_u, &r.l_kl, &r.l_c_total, &r.l_d_real, &r.l_d_fake, &r.l_gen_adv, &r.l_cu,
                          &r.l_g_total, &r.accuracy, &r.accepted_fraction, &r.d_real_mean, &r.d_fake_mean,
                          &r.wall_ms}) {
        append_number(out, *v);
    }
    return out;
}

RunResult train_run(const ExperimentConfig& config, const fs::path& run_dir) {
    config.validate();
    return train_run(config, load_run_data(config), run_dir);
}

RunResult train_run(const ExperimentConfig& config, const RunData& data, const fs::path& run_dir) {
    config.validate();
    data.train.validate();
    data.val.validate();
    const auto started = std::chrono::steady_clock::now();
    const TrainerKind kind = config.trainer;
    const std::size_t classes = data.train.num_classes();
    const std::uint64_t seed = config.seed;

    NetworkSpec spec;
    spec.image_size = config.image_size;
    spec.latent_dim = config.latent_dim;
    spec.base_width = config.base_width;
    spec.num_classes = kind == TrainerKind::multitask_d ? classes + 1 : classes;

    spec.role = Role::classifier;
    Player classifier{build_network(spec), AdamState{config.optimizer, 0, {}, {}}};
    init_weights(classifier.net, derive_seed(seed, Stream::classifier_init));

    std::optional<Player> generator, discriminator;
    if (uses_generator(kind)) {
        spec.role = Role::generator;
        generator.emplace(Player{build_network(spec), AdamState{config.optimizer, 0, {}, {}}});
        init_weights(generator->net, derive_seed(seed, Stream::generator_init));
    }
    if (kind == TrainerKind::ecgan || kind == TrainerKind::tri_gan) {
        spec.role = Role::discriminator;
        discriminator.emplace(Player{build_network(spec), AdamState{config.optimizer, 0, {}, {}}});
        init_weights(discriminator->net, derive_seed(seed, Stream::discriminator_init));
    }

    Rng latent_rng(derive_seed(seed, Stream::latent));
    Tensor sample_z;
    if (generator) {
        Rng sample_rng(derive_seed(seed, Stream::samples));
        sample_z = sample_latent(64, config.latent_dim, sample_rng);
    }
    StepOptions step_options;
    step_options.kl_direction = config.kl_direction;
    step_options.order = config.update_order;

    fs::create_directories(run_dir);
    std::ofstream metrics(run_dir / "metrics.csv", std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write " + (run_dir / "metrics.csv").string());
    metrics << metrics_header() << '\n' << std::flush;

    RunResult result;
    result.initial_accuracy = evaluate(classifier.net, data.val, classes);
    result.final_accuracy = result.initial_accuracy;
    result.best_accuracy = result.initial_accuracy;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        EpochAccumulator acc;
        BatchStream stream = batch_iter(data.train, config.batch_size, seed, epoch);
        while (auto batch = stream.next()) {
            StepMetrics m;
            switch (kind) {
                case TrainerKind::vanilla: m = vanilla_step(*batch, classifier); break;
                case TrainerKind::multitask_d: m = multitask_step(*batch, *generator, classifier, latent_rng); break;
                case TrainerKind::ecgan:
                    m = ecgan_step(*batch, *generator, *discriminator, classifier, config.weights, step_options,
                                   latent_rng);
                    break;
                case TrainerKind::tri_gan:
                    m = tri_gan_step(*batch, *generator, *discriminator, classifier, config.weights, step_options,
                                     latent_rng);
                    break;
            }
            acc.add(m);
        }
        result.steps += acc.steps;

        const double val_accuracy = evaluate(classifier.net, data.val, classes);
        MetricsRow train_row = acc.row(epoch, kind);
        MetricsRow val_row;
        val_row.epoch = epoch;
        val_row.split = "val";
        val_row.accuracy = val_accuracy;
        if (config.record_wall_time) {
            const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - epoch_start;
            train_row.wall_ms = ms.count();
        }
        metrics << format_metrics_row(train_row) << '\n' << format_metrics_row(val_row) << '\n' << std::flush;
        result.rows.push_back(std::move(train_row));
        result.rows.push_back(std::move(val_row));

        result.final_accuracy = val_accuracy;
        if (val_accuracy > result.best_accuracy) {
            result.best_accuracy = val_accuracy;
            result.best_epoch = epoch;
        }
        if (generator && config.sample_every != 0 && epoch % config.sample_every == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%04zu.pgm", epoch);
            write_samples(generator->net, sample_z, run_dir / "samples" / name);
        }
    }

    save_checkpoint(classifier.net, run_dir / "classifier.ckpt");
    if (generator) {
        save_checkpoint(generator->net, run_dir / "generator.ckpt");
        write_samples(generator->net, sample_z, run_dir / "samples" / "final.pgm");
    }
    if (discriminator) save_checkpoint(discriminator->net, run_dir / "discriminator.ckpt");

    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    result.wall_seconds = elapsed.count();
    return result;
}

}  // namespace trigan
