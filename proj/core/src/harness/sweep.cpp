#include "trigan/harness/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "trigan/data/dataset.hpp"
#include "trigan/training/run.hpp"

namespace trigan {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("bad number '" + std::string(s) + "' in summary");
    }
    return v;
}

std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("bad integer '" + std::string(s) + "' in summary");
    }
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) return out;
        start = comma + 1;
    }
}

std::string sanitize(std::string text) {
    std::replace_if(text.begin(), text.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ' ');
    return text;
}

std::vector<double> grid_or(const std::vector<double>& grid, double fallback) {
    return grid.empty() ? std::vector<double>{fallback} : grid;
}

bool same_group(const AggregateRow& row, const SweepCell& cell) {
    return row.trainer == cell.trainer && row.weights == cell.weights && row.size == cell.size;
}

}  // namespace

std::string SweepCell::name() const {
    std::string out = std::string(trainer_name(trainer)) + "-n" + std::to_string(size) + "-r" + std::to_string(repeat);
    out += "-t" + num(weights.tau) + "-a" + num(weights.alpha) + "-l" + num(weights.lambda);
    return out;
}

std::vector<SweepCell> sweep_grid(const ExperimentConfig& config) {
    std::vector<SweepCell> cells;
    for (TrainerKind trainer : config.trainers) {
        for (double tau : grid_or(config.tau_grid, config.weights.tau)) {
            for (double alpha : grid_or(config.alpha_grid, config.weights.alpha)) {
                for (double lambda : grid_or(config.lambda_grid, config.weights.lambda)) {
                    for (std::size_t size : config.train_sizes) {
                        for (std::size_t k = 0; k < config.repeats; ++k) {
                            cells.push_back({trainer, {tau, alpha, lambda}, size, k, config.seed + k});
                        }
                    }
                }
            }
        }
    }
    return cells;
}

std::vector<AggregateRow> aggregate(const std::vector<CellResult>& results) {
    std::vector<AggregateRow> rows;
    std::vector<std::vector<CellResult>> groups;
    for (const CellResult& r : results) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& row) { return same_group(row, r.cell); });
        if (it == rows.end()) {
            rows.push_back({r.cell.trainer, r.cell.weights, r.cell.size});
            groups.emplace_back();
            it = rows.end() - 1;
        }
        if (r.ok) groups[static_cast<std::size_t>(it - rows.begin())].push_back(r);
    }
    for (std::size_t g = 0; g < rows.size(); ++g) {
        const auto& members = groups[g];
        AggregateRow& row = rows[g];
        row.n = members.size();
        if (row.n == 0) continue;
        const double n = static_cast<double>(row.n);
        double sum = 0.0, best_sum = 0.0;
        std::vector<double> finals;
        for (const CellResult& r : members) {
            sum += r.final_acc;
            best_sum += r.best_acc;
            finals.push_back(r.final_acc);
        }
        row.mean = sum / n;
        row.best_mean = best_sum / n;
        if (row.n > 1) {
            double ss = 0.0;
            for (double v : finals) ss += (v - row.mean) * (v - row.mean);
            row.std = std::sqrt(ss / (n - 1.0));
        }
        std::sort(finals.begin(), finals.end());
        const std::size_t mid = finals.size() / 2;
        row.median = finals.size() % 2 == 1 ? finals[mid] : 0.5 * (finals[mid - 1] + finals[mid]);
    }
    return rows;
}

std::string format_summary_csv(const std::vector<CellResult>& results) {
    std::string out = "trainer,tau,alpha,lambda,size,repeat,seed,final_acc,best_acc,status,error\n";
    for (const CellResult& r : results) {
        const SweepCell& c = r.cell;
        out += std::string(trainer_name(c.trainer)) + ',' + num(c.weights.tau) + ',' + num(c.weights.alpha) + ',' +
               num(c.weights.lambda) + ',' + std::to_string(c.size) + ',' + std::to_string(c.repeat) + ',' +
               std::to_string(c.seed) + ',';
        if (r.ok) {
            out += num(r.final_acc) + ',' + num(r.best_acc) + ",ok,\n";
        } else {
            out += ",,failed," + sanitize(r.error) + '\n';
        }
    }
    return out;
}

std::string format_aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "trainer,tau,alpha,lambda,size,n,mean_final_acc,std_final_acc,median_final_acc,mean_best_acc\n";
    for (const AggregateRow& r : rows) {
        out += std::string(trainer_name(r.trainer)) + ',' + num(r.weights.tau) + ',' + num(r.weights.alpha) + ',' +
               num(r.weights.lambda) + ',' + std::to_string(r.size) + ',' + std::to_string(r.n) + ',';
        if (r.n == 0) {
            out += ",,,\n";
        } else {
            out += num(r.mean) + ',' + num(r.std) + ',' + num(r.median) + ',' + num(r.best_mean) + '\n';
        }
    }
    return out;
}

std::string format_table(const std::vector<AggregateRow>& rows) {
    std::vector<LossWeights> settings;
    std::vector<TrainerKind> trainers;
    std::vector<std::size_t> sizes;
    for (const AggregateRow& r : rows) {
        if (std::find(settings.begin(), settings.end(), r.weights) == settings.end()) settings.push_back(r.weights);
        if (std::find(trainers.begin(), trainers.end(), r.trainer) == trainers.end()) trainers.push_back(r.trainer);
        if (std::find(sizes.begin(), sizes.end(), r.size) == sizes.end()) sizes.push_back(r.size);
    }
    std::ostringstream out;
    char cell[64];
    for (const LossWeights& w : settings) {
        if (settings.size() > 1) {
            out << "tau=" << num(w.tau) << " alpha=" << num(w.alpha) << " lambda=" << num(w.lambda) << "\n\n";
        }
        out << "| Model |";
        for (std::size_t s : sizes) out << ' ' << s << " |";
        out << "\n|---|";
        for (std::size_t i = 0; i < sizes.size(); ++i) out << "---|";
        out << '\n';
        for (TrainerKind t : trainers) {
            out << "| " << trainer_title(t) << " |";
            for (std::size_t s : sizes) {
                const auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& r) {
                    return r.trainer == t && r.size == s && r.weights == w;
                });
                if (it == rows.end() || it->n == 0) {
                    out << " - |";
                } else {
                    std::snprintf(cell, sizeof(cell), " %.2f ± %.2f |", 100.0 * it->mean, 100.0 * it->std);
                    out << cell;
                }
            }
            out << '\n';
        }
        out << '\n';
    }
    return out.str();
}

std::vector<CellResult> parse_summary_csv(std::string_view text) {
    std::vector<CellResult> out;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("summary is empty");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 11) throw std::invalid_argument("summary row has " + std::to_string(f.size()) + " fields");
        CellResult r;
        r.cell.trainer = parse_trainer(f[0]);
        r.cell.weights = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3])};
        r.cell.size = parse_uint(f[4]);
        r.cell.repeat = parse_uint(f[5]);
        r.cell.seed = parse_uint(f[6]);
        r.ok = f[9] == "ok";
        if (r.ok) {
            r.final_acc = parse_double(f[7]);
            r.best_acc = parse_double(f[8]);
        } else {
            r.error = std::string(f[10]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

SweepOutcome run_sweep(const ExperimentConfig& config, const fs::path& sweep_dir, std::ostream* log) {
    config.validate();
    const std::vector<SweepCell> cells = sweep_grid(config);
    SweepOutcome outcome;
    outcome.dir = sweep_dir;
    outcome.results.resize(cells.size());
    fs::create_directories(sweep_dir / "cells");

    // Directory sources are decoded once and subsampled per cell.
    std::optional<DirectorySplits> splits;
    if (config.data_dir) splits = load_directory_splits(config);

    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const SweepCell& cell = cells[i];
            CellResult& result = outcome.results[i];
            result.cell = cell;
            ExperimentConfig run_config = config;
            run_config.trainer = cell.trainer;
            run_config.weights = cell.weights;
            run_config.n_train = cell.size;
            run_config.seed = cell.seed;
            try {
                RunData data;
                if (splits) {
                    data.train = subsample_balanced(splits->pool, cell.size, cell.seed);
                    data.val = splits->val;
                } else {
                    data = load_run_data(run_config);
                }
                const RunResult run = train_run(run_config, data, sweep_dir / "cells" / cell.name());
                result.ok = true;
                result.final_acc = run.final_accuracy;
                result.best_acc = run.best_accuracy;
            } catch (const std::exception& e) {
                result.ok = false;
                result.error = e.what();
            }
            if (log != nullptr) {
                std::lock_guard lock(log_mutex);
                *log << '[' << (i + 1) << '/' << cells.size() << "] " << cell.name() << ": "
                     << (result.ok ? "final_acc=" + num(result.final_acc) : "FAILED " + result.error) << std::endl;
            }
        }
    };
    const std::size_t workers = std::min(config.jobs, std::max<std::size_t>(cells.size(), 1));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    outcome.failures = static_cast<std::size_t>(
        std::count_if(outcome.results.begin(), outcome.results.end(), [](const CellResult& r) { return !r.ok; }));
    outcome.rows = aggregate(outcome.results);
    auto write = [&](const char* name, const std::string& text) {
        std::ofstream out(sweep_dir / name, std::ios::trunc);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + (sweep_dir / name).string());
    };
    write("summary.csv", format_summary_csv(outcome.results));
    write("aggregate.csv", format_aggregate_csv(outcome.rows));
    write("table.md", format_table(outcome.rows));
    return outcome;
}

}  // namespace trigan
