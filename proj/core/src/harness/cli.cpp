#include "trigan/harness/cli.hpp"

#include <algorithm>
#include <functional>
#include <iostream>
#include <memory>

#include "CLI11.hpp"

#include "trigan/harness/commands.hpp"
#include "trigan/harness/config_io.hpp"

namespace trigan {
namespace {

/// Flag values are applied only when the flag was given, after the config
/// file, so they win over it.
class Overrides {
public:
    template <typename T, typename Apply>
    CLI::Option* add(CLI::App* app, const std::string& names, const std::string& help, Apply apply) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(names, *value, help);
        appliers_.push_back([opt, value, apply](ExperimentConfig& c) {
            if (opt->count() > 0) apply(c, *value);
        });
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& names, const std::string& help,
                      std::function<void(ExperimentConfig&)> apply) {
        CLI::Option* opt = app->add_flag(names, help);
        appliers_.push_back([opt, apply](ExperimentConfig& c) {
            if (opt->count() > 0) apply(c);
        });
        return opt;
    }

    void apply(ExperimentConfig& c) const {
        for (const auto& f : appliers_) f(c);
    }

private:
    std::vector<std::function<void(ExperimentConfig&)>> appliers_;
};

void add_data_flags(CLI::App* app, Overrides& o) {
    o.flag(app, "--synthetic", "Use the built-in synthetic dataset (clears data_dir)", [](ExperimentConfig& c) {
        c.data_dir.reset();
        c.val_dir.reset();
    });
    o.add<std::string>(app, "--data-dir", "Image root with train/ and test/ splits, or the training pool",
                       [](ExperimentConfig& c, const std::string& v) { c.data_dir = v; });
    o.add<std::string>(app, "--val-dir", "Validation image root",
                       [](ExperimentConfig& c, const std::string& v) { c.val_dir = v; });
    o.add<std::size_t>(app, "--n-val", "Synthetic validation size",
                       [](ExperimentConfig& c, std::size_t v) { c.n_val = v; });
    o.add<std::uint64_t>(app, "--seed", "Master seed", [](ExperimentConfig& c, std::uint64_t v) { c.seed = v; });
    o.add<std::size_t>(app, "--image-size", "Image side length (power of two, 32-256)",
                       [](ExperimentConfig& c, std::size_t v) { c.image_size = v; });
    o.add<std::string>(app, "--out-dir", "Output root (default $TRIGAN_OUT or runs)",
                       [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; });
}

void add_training_flags(CLI::App* app, Overrides& o) {
    add_data_flags(app, o);
    o.add<std::size_t>(app, "--epochs", "Training epochs", [](ExperimentConfig& c, std::size_t v) { c.epochs = v; });
    o.add<std::size_t>(app, "--batch-size", "Minibatch size",
                       [](ExperimentConfig& c, std::size_t v) { c.batch_size = v; });
    o.add<std::size_t>(app, "--latent-dim", "Generator latent size",
                       [](ExperimentConfig& c, std::size_t v) { c.latent_dim = v; });
    o.add<std::size_t>(app, "--base-width", "Channel width of the first/last convolution",
                       [](ExperimentConfig& c, std::size_t v) { c.base_width = v; });
    o.add<double>(app, "--tau", "Pseudo-label confidence threshold",
                  [](ExperimentConfig& c, double v) { c.weights.tau = v; });
    o.add<double>(app, "--alpha", "KL consistency weight", [](ExperimentConfig& c, double v) { c.weights.alpha = v; });
    o.add<double>(app, "--lambda", "Pseudo-label loss weight",
                  [](ExperimentConfig& c, double v) { c.weights.lambda = v; });
    o.add<double>(app, "--lr", "Adam learning rate", [](ExperimentConfig& c, double v) { c.optimizer.lr = v; });
    o.add<double>(app, "--beta1", "Adam beta1", [](ExperimentConfig& c, double v) { c.optimizer.beta1 = v; });
    o.add<double>(app, "--beta2", "Adam beta2", [](ExperimentConfig& c, double v) { c.optimizer.beta2 = v; });
    o.add<double>(app, "--eps", "Adam epsilon", [](ExperimentConfig& c, double v) { c.optimizer.eps = v; });
    o.add<std::string>(app, "--kl-direction", "real-to-fake or fake-to-real",
                       [](ExperimentConfig& c, const std::string& v) { c.kl_direction = parse_kl_direction(v); });
    o.add<std::string>(app, "--update-order", "Permutation of D, G, C (default DGC)",
                       [](ExperimentConfig& c, const std::string& v) { c.update_order = parse_update_order(v); });
    o.add<std::size_t>(app, "--sample-every", "Sample grid interval in epochs (0: final only)",
                       [](ExperimentConfig& c, std::size_t v) { c.sample_every = v; });
    o.flag(app, "--record-wall-time", "Fill the wall_ms metrics column",
           [](ExperimentConfig& c) { c.record_wall_time = true; });
    o.add<std::size_t>(app, "--jobs", "Concurrent sweep cells", [](ExperimentConfig& c, std::size_t v) { c.jobs = v; });
}

template <typename T, typename F>
std::vector<T> map_all(const std::vector<std::string>& items, F&& f) {
    std::vector<T> out;
    for (const auto& s : items) out.push_back(f(s));
    return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Three-network GAN training and experiment harness", "trigan"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());

    std::string config_path;
    bool dry_run = false;
    Overrides train_o, sweep_o, eval_o;

    CLI::App* train = app.add_subcommand("train", "Train one classifier");
    train->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    train->add_flag("--dry-run", dry_run, "Print the resolved configuration and its hash, then exit");
    train_o.add<std::string>(train, "--algo,--trainer", "vanilla | multitask | ecgan | 3ngan",
                             [](ExperimentConfig& c, const std::string& v) { c.trainer = parse_trainer(v); });
    train_o.add<std::size_t>(train, "--n-train", "Training set size",
                             [](ExperimentConfig& c, std::size_t v) { c.n_train = v; });
    add_training_flags(train, train_o);

    CLI::App* sweep = app.add_subcommand("sweep", "Run the trainer x size x repeat grid");
    sweep->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sweep->add_flag("--dry-run", dry_run, "Print the resolved configuration and its hash, then exit");
    sweep_o.add<std::vector<std::string>>(sweep, "--trainers", "Comma-separated trainer list",
                                          [](ExperimentConfig& c, const std::vector<std::string>& v) {
                                              c.trainers = map_all<TrainerKind>(v, [](const std::string& s) {
                                                  return parse_trainer(s);
                                              });
                                          })
        ->delimiter(',');
    sweep_o.add<std::vector<std::size_t>>(sweep, "--sizes,--train-sizes", "Comma-separated training sizes",
                                          [](ExperimentConfig& c, const std::vector<std::size_t>& v) {
                                              c.train_sizes = v;
                                          })
        ->delimiter(',');
    sweep_o.add<std::size_t>(sweep, "--repeats", "Repeats per cell",
                             [](ExperimentConfig& c, std::size_t v) { c.repeats = v; });
    sweep_o.add<std::vector<double>>(sweep, "--tau-grid", "Comma-separated tau values",
                                     [](ExperimentConfig& c, const std::vector<double>& v) { c.tau_grid = v; })
        ->delimiter(',');
    sweep_o.add<std::vector<double>>(sweep, "--alpha-grid", "Comma-separated alpha values",
                                     [](ExperimentConfig& c, const std::vector<double>& v) { c.alpha_grid = v; })
        ->delimiter(',');
    sweep_o.add<std::vector<double>>(sweep, "--lambda-grid", "Comma-separated lambda values",
                                     [](ExperimentConfig& c, const std::vector<double>& v) { c.lambda_grid = v; })
        ->delimiter(',');
    add_training_flags(sweep, sweep_o);

    GenerateOptions gen_options;
    gen_options.out_dir = default_out_root();
    CLI::App* generate = app.add_subcommand("generate", "Write generator samples as PGM images");
    generate->add_option("--checkpoint", gen_options.checkpoint, "Generator checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    generate->add_option("--count", gen_options.count, "Number of images")->capture_default_str();
    generate->add_option("--seed", gen_options.seed, "Latent seed")->capture_default_str();
    generate->add_option("--out-dir", gen_options.out_dir, "Output root (default $TRIGAN_OUT or runs)");

    std::string eval_checkpoint;
    CLI::App* eval = app.add_subcommand("eval", "Accuracy of a classifier checkpoint on a validation split");
    eval->add_option("--checkpoint", eval_checkpoint, "Classifier checkpoint")->required()->check(CLI::ExistingFile);
    eval->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    add_data_flags(eval, eval_o);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    auto resolve = [&](const Overrides& o) {
        ExperimentConfig c = default_config();
        if (!config_path.empty()) c = load_config_file(config_path, c);
        o.apply(c);
        return c;
    };

    try {
        if (train->parsed() || sweep->parsed()) {
            const bool is_train = train->parsed();
            const ExperimentConfig config = resolve(is_train ? train_o : sweep_o);
            if (dry_run) {
                config.validate();
                out << config_to_json(config) << "\nhash " << config_hash(config, is_train ? "train" : "sweep")
                    << '\n';
                return 0;
            }
            return is_train ? cmd_train(config, out, err) : cmd_sweep(config, out, err);
        }
        if (generate->parsed()) return cmd_generate(gen_options, out, err);
        if (eval->parsed()) return cmd_eval({eval_checkpoint, resolve(eval_o)}, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace trigan
