#include "moluq/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "moluq/cli/archive.hpp"
#include "moluq/cli/config.hpp"
#include "moluq/common/error.hpp"
#include "moluq/common/format.hpp"
#include "moluq/common/hash.hpp"
#include "moluq/eval/metrics.hpp"
#include "moluq/stats/wilcoxon.hpp"
#include "moluq/uq/estimators.hpp"

namespace moluq::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Cell {
    std::size_t dataset_index;
    std::string split_id;
    std::string estimator;
};

std::vector<data::Dataset> load_datasets(const Config& config) {
    std::vector<data::Dataset> datasets;
    for (const auto& path : config.dataset_paths) {
        auto report = data::load_csv(path);
        for (const auto& warning : report.warnings) std::cerr << "warning: " << warning << "\n";
        for (const auto& rejected : report.rejected) {
            std::cerr << "warning: " << path << ":" << rejected.line
                      << ": rejected SMILES '" << rejected.smiles << "': " << rejected.reason
                      << "\n";
        }
        datasets.push_back(std::move(report.dataset));
    }
    if (config.generate_clogp) {
        datasets.push_back(data::generate_clogp_dataset(datasets));
    }
    if (datasets.empty()) throw ConfigError("no datasets configured");
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (!names.insert(d.name).second) {
            throw ConfigError("duplicate dataset name: " + d.name);
        }
    }
    return datasets;
}

std::vector<data::SplitAssignment> build_splits(const Config& config, const data::Dataset& d) {
    std::vector<data::SplitAssignment> splits;
    for (int seed = 0; seed < config.random_splits; ++seed) {
        splits.push_back(data::random_split(d, static_cast<std::uint64_t>(seed)));
    }
    if (config.scaffold_split) {
        auto s = data::scaffold_split(d);
        for (const auto& warning : s.warnings) {
            std::cerr << "warning: " << d.name << ": " << warning << "\n";
        }
        splits.push_back(std::move(s));
    }
    return splits;
}

int resolve_workers(const Config& config, int override_value) {
    if (override_value > 0) return override_value;
    if (const char* env = std::getenv("MOLUQ_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return config.workers;
}

// ---- report helpers ----

std::vector<eval::MetricReport> load_reports(const fs::path& archive_root) {
    std::vector<eval::MetricReport> reports;
    const fs::path cells = archive_root / "cells";
    if (!fs::exists(cells)) return reports;
    for (const auto& entry : fs::recursive_directory_iterator(cells)) {
        if (entry.is_regular_file() && entry.path().filename() == "metrics.json") {
            reports.push_back(eval::MetricReport::from_json(read_text_file(entry.path())));
        }
    }
    std::sort(reports.begin(), reports.end(),
              [](const eval::MetricReport& a, const eval::MetricReport& b) {
                  return std::tie(a.dataset, a.split_id, a.estimator_id) <
                         std::tie(b.dataset, b.split_id, b.estimator_id);
              });
    return reports;
}

std::optional<double> metric_value(const eval::MetricReport& r, const std::string& metric) {
    if (metric == "spearman") {
        if (!r.spearman_defined) return std::nullopt;
        return r.spearman;
    }
    if (metric == "area") return r.area;
    if (metric == "nll") return r.nll_value;
    if (metric == "nll_difference") return r.nll_difference;
    if (metric == "cnll") return r.cnll_value;
    if (metric == "cnll_difference") return r.cnll_difference;
    throw ConfigError("unknown metric: " + metric);
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

bool is_random_split(const std::string& split_id) {
    return split_id.rfind("rand", 0) == 0;
}

}  // namespace

int cmd_run(const RunOptions& options) {
    Config config;
    try {
        config = Config::load(options.config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    std::vector<data::Dataset> datasets;
    try {
        datasets = load_datasets(config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }

    Archive archive(options.archive_dir);
    archive.remove_stale_staging();

    // A fresh archive gets a manifest; a resumed one must match it.
    if (fs::exists(archive.manifest_path())) {
        const auto manifest = nlohmann::json::parse(read_text_file(archive.manifest_path()));
        if (manifest.at("config_hash").get<std::string>() != config.hash()) {
            std::cerr << "error: archive was created with a different config (hash "
                      << manifest.at("config_hash").get<std::string>() << " != "
                      << config.hash() << ")\n";
            return kExitConfigError;
        }
    } else {
        write_text_file(archive.manifest_path(),
                        build_manifest(config, datasets, utc_timestamp()));
    }

    // Split manifests: deterministic, so a resume recomputes and verifies.
    std::vector<std::vector<data::SplitAssignment>> splits;
    for (const auto& d : datasets) {
        splits.push_back(build_splits(config, d));
        for (const auto& s : splits.back()) {
            const fs::path path = archive.split_path(d.name, s.id());
            const std::string body = data::split_to_json(s);
            if (fs::exists(path)) {
                if (read_text_file(path) != body) {
                    std::cerr << "error: split manifest mismatch for " << d.name << "/"
                              << s.id() << "\n";
                    return kExitConfigError;
                }
            } else {
                write_text_file(path, body);
            }
        }
    }
    if (options.dry_run) {
        std::cout << "manifest and split files written to " << archive.root().string() << "\n";
        return kExitOk;
    }

    std::vector<Cell> todo;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
        for (const auto& s : splits[di]) {
            for (const auto& est : config.estimators) {
                if (!archive.cell_complete(datasets[di].name, s.id(), est)) {
                    todo.push_back({di, s.id(), est});
                }
            }
        }
    }
    std::cout << "running " << todo.size() << " cells over " << datasets.size()
              << " dataset(s)\n";

    // Split contexts are built once per (dataset, split) and shared
    // read-only across estimator jobs.
    std::map<std::pair<std::size_t, std::string>, std::shared_ptr<const uq::SplitContext>>
        contexts;
    std::mutex context_mutex;
    auto context_for = [&](std::size_t di, const std::string& split_id) {
        std::scoped_lock lock(context_mutex);
        auto key = std::make_pair(di, split_id);
        auto it = contexts.find(key);
        if (it != contexts.end()) return it->second;
        const auto& group = splits[di];
        const auto split_it =
            std::find_if(group.begin(), group.end(),
                         [&split_id](const auto& s) { return s.id() == split_id; });
        auto ctx = std::make_shared<const uq::SplitContext>(
            uq::SplitContext::build(datasets[di], *split_it, config.estimator));
        contexts.emplace(key, ctx);
        return ctx;
    };

    std::atomic<std::size_t> next{0};
    std::mutex writer_mutex;  // single writer for archive and failure log
    std::vector<std::pair<std::string, std::string>> failures;

    auto worker = [&]() {
        while (true) {
            const std::size_t at = next.fetch_add(1);
            if (at >= todo.size()) return;
            const Cell& cell = todo[at];
            const data::Dataset& dataset = datasets[cell.dataset_index];
            const std::string cell_tag =
                dataset.name + "/" + cell.split_id + "/" + cell.estimator;
            try {
                const auto ctx = context_for(cell.dataset_index, cell.split_id);
                const std::uint64_t cell_seed = derive_seed(config.master_seed, cell_tag);
                const uq::EstimatorRun run =
                    uq::run_estimator(cell.estimator, *ctx, config.estimator, cell_seed);
                const eval::MetricReport report =
                    eval::evaluate_cell(run.test, run.validation, dataset.name);

                std::scoped_lock lock(writer_mutex);
                archive.write_cell(dataset.name, cell.split_id, cell.estimator,
                                   run.test.to_csv(), run.validation.to_csv(),
                                   run.details_json, report.to_json());
                std::cout << "done " << cell_tag << "\n";
            } catch (const std::exception& e) {
                std::scoped_lock lock(writer_mutex);
                failures.emplace_back(cell_tag, e.what());
                std::cerr << "cell failed: " << cell_tag << ": " << e.what() << "\n";
            }
        }
    };

    const int workers = std::min<int>(resolve_workers(config, options.workers_override),
                                      std::max<std::size_t>(todo.size(), 1));
    std::vector<std::thread> pool;
    for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (!failures.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& [cell, what] : failures) {
            j.push_back({{"cell", cell}, {"error", what}});
        }
        write_text_file(archive.root() / "failures.json", j.dump(2) + "\n");
        std::cerr << failures.size() << " cell(s) failed; see failures.json\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}

int cmd_report(const ReportOptions& options) {
    const fs::path root(options.archive_dir);
    const auto reports = load_reports(root);
    if (reports.empty()) {
        std::cerr << "error: no metric reports under " << root.string() << "\n";
        return kExitConfigError;
    }
    const fs::path out_dir =
        options.out_dir.empty() ? root / "reports" : fs::path(options.out_dir);
    fs::create_directories(out_dir);

    // Flat per-cell table.
    {
        std::ostringstream csv;
        csv << eval::MetricReport::csv_header() << '\n';
        for (const auto& r : reports) csv << r.csv_row() << '\n';
        write_text_file(out_dir / "metrics.csv", csv.str());
    }

    std::set<std::string> datasets, estimators;
    for (const auto& r : reports) {
        datasets.insert(r.dataset);
        estimators.insert(r.estimator_id);
    }

    // Quartile summaries over random splits; the scaffold split is its own
    // column, never pooled into the quartiles.
    const char* metrics[] = {"spearman", "area", "nll", "nll_difference", "cnll",
                             "cnll_difference"};
    for (const std::string metric : metrics) {
        for (const auto& dataset : datasets) {
            std::ostringstream csv;
            csv << "estimator,splits,q1,median,q3,scaffold\n";
            for (const auto& est : estimators) {
                // The NLL-family tables skip relative estimators entirely.
                if ((metric == "nll" || metric == "nll_difference" || metric == "area") &&
                    uq::is_relative_estimator(est)) {
                    continue;
                }
                std::vector<double> random_values;
                std::optional<double> scaffold_value;
                for (const auto& r : reports) {
                    if (r.dataset != dataset || r.estimator_id != est) continue;
                    const auto v = metric_value(r, metric);
                    if (!v.has_value()) continue;
                    if (is_random_split(r.split_id)) {
                        random_values.push_back(*v);
                    } else {
                        scaffold_value = *v;
                    }
                }
                if (random_values.empty() && !scaffold_value.has_value()) continue;
                csv << est << ',' << random_values.size() << ',';
                if (!random_values.empty()) {
                    csv << format_double(quantile(random_values, 0.25)) << ','
                        << format_double(quantile(random_values, 0.5)) << ','
                        << format_double(quantile(random_values, 0.75));
                } else {
                    csv << ",,";
                }
                csv << ',' << (scaffold_value ? format_double(*scaffold_value) : "") << '\n';
            }
            write_text_file(out_dir / ("summary_" + metric + "_" + dataset + ".csv"),
                            csv.str());
        }
    }

    // Plot-ready retention curves.
    for (const auto& dataset : datasets) {
        std::ostringstream tsv;
        tsv << "estimator\tsplit\trmse_100\trmse_50\trmse_25\trmse_10\trmse_5\n";
        for (const auto& r : reports) {
            if (r.dataset != dataset) continue;
            tsv << r.estimator_id << '\t' << r.split_id;
            for (double v : r.retention_rmse) tsv << '\t' << format_double(v);
            tsv << '\n';
        }
        write_text_file(out_dir / ("retention_" + dataset + ".tsv"), tsv.str());
    }

    // Calibration slope histogram input, capped to [0, 10].
    {
        std::ostringstream tsv;
        tsv << "estimator\tdataset\tsplit\tslope_capped\tintercept\n";
        for (const auto& r : reports) {
            tsv << r.estimator_id << '\t' << r.dataset << '\t' << r.split_id << '\t'
                << format_double(r.capped_slope()) << '\t'
                << format_double(r.calibration_b) << '\n';
        }
        write_text_file(out_dir / "calibration_slopes.tsv", tsv.str());
    }

    std::cout << "reports written to " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_compare(const CompareOptions& options) {
    const fs::path root(options.archive_dir);
    const auto reports = load_reports(root);
    if (reports.empty()) {
        std::cerr << "error: no metric reports under " << root.string() << "\n";
        return kExitConfigError;
    }
    if (options.metric != "spearman" && options.metric != "area" &&
        options.metric != "nll" && options.metric != "cnll") {
        std::cerr << "error: metric must be spearman, area, nll, or cnll\n";
        return kExitConfigError;
    }
    if (options.aggregation != "per-split" && options.aggregation != "median") {
        std::cerr << "error: aggregation must be per-split or median\n";
        return kExitConfigError;
    }
    const stats::Direction direction = options.metric == "spearman"
                                           ? stats::Direction::HigherBetter
                                           : stats::Direction::LowerBetter;

    // Roster: estimators present, minus relative-semantics ones for the
    // quantitative metrics (they carry no meaningful variance reading).
    std::set<std::string> estimator_set, dataset_set;
    std::set<std::string> random_split_set;
    for (const auto& r : reports) {
        estimator_set.insert(r.estimator_id);
        dataset_set.insert(r.dataset);
        if (is_random_split(r.split_id)) random_split_set.insert(r.split_id);
    }
    std::vector<std::string> roster;
    for (const auto& est : estimator_set) {
        if ((options.metric == "nll" || options.metric == "area") &&
            uq::is_relative_estimator(est)) {
            continue;
        }
        roster.push_back(est);
    }

    // Score grid: all data sets and random splits (per-split), or the
    // median random-split score per dataset (median).
    std::map<std::pair<std::string, std::string>, const eval::MetricReport*> by_cell;
    for (const auto& r : reports) {
        by_cell[{r.dataset + "/" + r.split_id, r.estimator_id}] = &r;
    }

    std::vector<std::vector<double>> scores(roster.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t e = 0; e < roster.size(); ++e) {
        for (const auto& dataset : dataset_set) {
            if (options.aggregation == "per-split") {
                for (const auto& split : random_split_set) {
                    const auto it = by_cell.find({dataset + "/" + split, roster[e]});
                    if (it == by_cell.end()) {
                        scores[e].push_back(nan);
                        continue;
                    }
                    const auto v = metric_value(*it->second, options.metric);
                    scores[e].push_back(v.value_or(nan));
                }
            } else {
                std::vector<double> vals;
                for (const auto& split : random_split_set) {
                    const auto it = by_cell.find({dataset + "/" + split, roster[e]});
                    if (it == by_cell.end()) continue;
                    const auto v = metric_value(*it->second, options.metric);
                    if (v.has_value()) vals.push_back(*v);
                }
                scores[e].push_back(vals.empty() ? nan : quantile(vals, 0.5));
            }
        }
    }

    try {
        const auto matrix =
            stats::comparison_matrix(roster, scores, options.metric, direction);
        const fs::path out_dir =
            options.out_dir.empty() ? root / "compare" : fs::path(options.out_dir);
        fs::create_directories(out_dir);
        const std::string stem = options.metric + "_" + options.aggregation;
        write_text_file(out_dir / (stem + ".csv"), matrix.to_csv());
        write_text_file(out_dir / (stem + ".json"), matrix.to_heatmap_json());
        std::cout << "comparison written to " << (out_dir / stem).string() << ".{csv,json}\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitOk;
}

int cmd_validate_config(const std::string& config_path) {
    try {
        const Config config = Config::load(config_path);
        std::cout << "config ok (hash " << config.hash() << ")\n";
        for (const auto& [k, v] : config.effective) std::cout << k << " = " << v << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

}  // namespace moluq::cli
