#include "trigan/harness/config_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "trigan/common/random.hpp"

namespace trigan {
namespace {

using json = nlohmann::json;

json trainers_json(const std::vector<TrainerKind>& kinds) {
    json out = json::array();
    for (TrainerKind k : kinds) out.push_back(std::string(trainer_name(k)));
    return out;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["trainer"] = std::string(trainer_name(c.trainer));
    j["tau"] = c.weights.tau;
    j["alpha"] = c.weights.alpha;
    j["lambda"] = c.weights.lambda;
    j["lr"] = c.optimizer.lr;
    j["beta1"] = c.optimizer.beta1;
    j["beta2"] = c.optimizer.beta2;
    j["eps"] = c.optimizer.eps;
    j["kl_direction"] = std::string(kl_direction_name(c.kl_direction));
    j["update_order"] = update_order_string(c.update_order);
    j["image_size"] = c.image_size;
    j["latent_dim"] = c.latent_dim;
    j["base_width"] = c.base_width;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["n_train"] = c.n_train;
    j["seed"] = c.seed;
    j["data_dir"] = c.data_dir ? json(c.data_dir->generic_string()) : json(nullptr);
    j["val_dir"] = c.val_dir ? json(c.val_dir->generic_string()) : json(nullptr);
    j["n_val"] = c.n_val;
    j["sample_every"] = c.sample_every;
    j["record_wall_time"] = c.record_wall_time;
    j["trainers"] = trainers_json(c.trainers);
    j["train_sizes"] = c.train_sizes;
    j["repeats"] = c.repeats;
    j["tau_grid"] = c.tau_grid;
    j["alpha_grid"] = c.alpha_grid;
    j["lambda_grid"] = c.lambda_grid;
    j["jobs"] = c.jobs;
    j["out_dir"] = c.out_dir.generic_string();
    return j;
}

[[noreturn]] void bad_field(const std::string& key, const std::string& why) {
    throw std::invalid_argument("config field '" + key + "': " + why);
}

std::size_t as_size(const std::string& key, const json& v) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer()) bad_field(key, "must not be negative");
    bad_field(key, "expected a non-negative integer");
}

double as_double(const std::string& key, const json& v) {
    if (!v.is_number()) bad_field(key, "expected a number");
    return v.get<double>();
}

std::string as_string(const std::string& key, const json& v) {
    if (!v.is_string()) bad_field(key, "expected a string");
    return v.get<std::string>();
}

template <typename T, typename F>
std::vector<T> as_list(const std::string& key, const json& v, F&& element) {
    if (!v.is_array()) bad_field(key, "expected an array");
    std::vector<T> out;
    for (const json& e : v) out.push_back(element(key, e));
    return out;
}

std::optional<std::filesystem::path> as_optional_path(const std::string& key, const json& v) {
    if (v.is_null()) return std::nullopt;
    return std::filesystem::path(as_string(key, v));
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"trainer", [](auto& c, auto& k, auto& v) { c.trainer = parse_trainer(as_string(k, v)); }},
        {"tau", [](auto& c, auto& k, auto& v) { c.weights.tau = as_double(k, v); }},
        {"alpha", [](auto& c, auto& k, auto& v) { c.weights.alpha = as_double(k, v); }},
        {"lambda", [](auto& c, auto& k, auto& v) { c.weights.lambda = as_double(k, v); }},
        {"lr", [](auto& c, auto& k, auto& v) { c.optimizer.lr = as_double(k, v); }},
        {"beta1", [](auto& c, auto& k, auto& v) { c.optimizer.beta1 = as_double(k, v); }},
        {"beta2", [](auto& c, auto& k, auto& v) { c.optimizer.beta2 = as_double(k, v); }},
        {"eps", [](auto& c, auto& k, auto& v) { c.optimizer.eps = as_double(k, v); }},
        {"kl_direction", [](auto& c, auto& k, auto& v) { c.kl_direction = parse_kl_direction(as_string(k, v)); }},
        {"update_order", [](auto& c, auto& k, auto& v) { c.update_order = parse_update_order(as_string(k, v)); }},
        {"image_size", [](auto& c, auto& k, auto& v) { c.image_size = as_size(k, v); }},
        {"latent_dim", [](auto& c, auto& k, auto& v) { c.latent_dim = as_size(k, v); }},
        {"base_width", [](auto& c, auto& k, auto& v) { c.base_width = as_size(k, v); }},
        {"epochs", [](auto& c, auto& k, auto& v) { c.epochs = as_size(k, v); }},
        {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = as_size(k, v); }},
        {"n_train", [](auto& c, auto& k, auto& v) { c.n_train = as_size(k, v); }},
        {"seed", [](auto& c, auto& k, auto& v) { c.seed = as_size(k, v); }},
        {"data_dir", [](auto& c, auto& k, auto& v) { c.data_dir = as_optional_path(k, v); }},
        {"val_dir", [](auto& c, auto& k, auto& v) { c.val_dir = as_optional_path(k, v); }},
        {"n_val", [](auto& c, auto& k, auto& v) { c.n_val = as_size(k, v); }},
        {"sample_every", [](auto& c, auto& k, auto& v) { c.sample_every = as_size(k, v); }},
        {"record_wall_time",
         [](auto& c, auto& k, auto& v) {
             if (!v.is_boolean()) bad_field(k, "expected true or false");
             c.record_wall_time = v.template get<bool>();
         }},
        {"trainers",
         [](auto& c, auto& k, auto& v) {
             c.trainers = as_list<TrainerKind>(k, v, [](auto& kk, auto& e) { return parse_trainer(as_string(kk, e)); });
         }},
        {"train_sizes", [](auto& c, auto& k, auto& v) { c.train_sizes = as_list<std::size_t>(k, v, as_size); }},
        {"repeats", [](auto& c, auto& k, auto& v) { c.repeats = as_size(k, v); }},
        {"tau_grid", [](auto& c, auto& k, auto& v) { c.tau_grid = as_list<double>(k, v, as_double); }},
        {"alpha_grid", [](auto& c, auto& k, auto& v) { c.alpha_grid = as_list<double>(k, v, as_double); }},
        {"lambda_grid", [](auto& c, auto& k, auto& v) { c.lambda_grid = as_list<double>(k, v, as_double); }},
        {"jobs", [](auto& c, auto& k, auto& v) { c.jobs = as_size(k, v); }},
        {"out_dir", [](auto& c, auto& k, auto& v) { c.out_dir = as_string(k, v); }},
    };
    return table;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config, int indent) { return to_json(config).dump(indent); }

ExperimentConfig apply_config_json(std::string_view text, ExperimentConfig base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        const auto it = setters().find(key);
        if (it == setters().end()) throw std::invalid_argument("unknown config field '" + key + "'");
        try {
            it->second(base, key, value);
        } catch (const std::invalid_argument& e) {
            const std::string msg = e.what();
            if (msg.rfind("config field", 0) == 0) throw;
            bad_field(key, msg);
        }
    }
    return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return apply_config_json(text.str(), std::move(base));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

std::filesystem::path default_out_root() {
    const char* env = std::getenv("TRIGAN_OUT");
    return env != nullptr && *env != '\0' ? std::filesystem::path(env) : std::filesystem::path("runs");
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.out_dir = default_out_root();
    return c;
}

std::string hash_string(std::string_view text) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(text));
    return buf;
}

std::string config_hash(const ExperimentConfig& config, std::string_view command) {
    json j = to_json(config);
    j.erase("out_dir");
    j.erase("jobs");
    if (command == "train") {
        for (const char* k : {"trainers", "train_sizes", "repeats", "tau_grid", "alpha_grid", "lambda_grid"}) j.erase(k);
    } else if (command == "sweep") {
        for (const char* k : {"trainer", "n_train"}) j.erase(k);
    }
    return hash_string(std::string(command) + '\n' + j.dump());
}

}  // namespace trigan
