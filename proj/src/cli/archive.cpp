#include "moluq/cli/archive.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moluq/common/error.hpp"

namespace moluq::cli {

namespace fs = std::filesystem;

Archive::Archive(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    fs::create_directories(root_ / "splits");
    fs::create_directories(root_ / "cells");
}

fs::path Archive::split_path(const std::string& dataset, const std::string& split_id) const {
    return root_ / "splits" / dataset / (split_id + ".json");
}

fs::path Archive::cell_path(const std::string& dataset, const std::string& split_id,
                            const std::string& estimator) const {
    return root_ / "cells" / dataset / split_id / estimator;
}

bool Archive::cell_complete(const std::string& dataset, const std::string& split_id,
                            const std::string& estimator) const {
    return fs::exists(cell_path(dataset, split_id, estimator) / "metrics.json");
}

void Archive::write_cell(const std::string& dataset, const std::string& split_id,
                         const std::string& estimator, const std::string& test_csv,
                         const std::string& val_csv, const std::string& details_json,
                         const std::string& metrics_json) const {
    const fs::path final_dir = cell_path(dataset, split_id, estimator);
    if (fs::exists(final_dir)) {
        throw Error("archive cell already exists (append-only): " + final_dir.string());
    }
    const fs::path staging = final_dir.parent_path() / (estimator + ".staging");
    fs::create_directories(staging);
    write_text_file(staging / "predictions_test.csv", test_csv);
    write_text_file(staging / "predictions_val.csv", val_csv);
    write_text_file(staging / "details.json", details_json);
    write_text_file(staging / "metrics.json", metrics_json);
    fs::rename(staging, final_dir);
}

void Archive::remove_stale_staging() const {
    if (!fs::exists(root_ / "cells")) return;
    std::vector<fs::path> stale;
    for (const auto& entry : fs::recursive_directory_iterator(root_ / "cells")) {
        if (entry.is_directory() && entry.path().filename().string().ends_with(".staging")) {
            stale.push_back(entry.path());
        }
    }
    for (const auto& p : stale) fs::remove_all(p);
}

std::string build_manifest(const Config& config, const std::vector<data::Dataset>& datasets,
                           const std::string& timestamp) {
    nlohmann::json j;
    j["toolkit"] = "moluq 0.1.0";
    j["created"] = timestamp;
    j["config_hash"] = config.hash();
    j["config"] = config.effective;
    j["master_seed"] = config.master_seed;

    nlohmann::json ds = nlohmann::json::array();
    for (const auto& d : datasets) {
        ds.push_back({{"name", d.name}, {"rows", d.size()}, {"units", d.target_units}});
    }
    j["datasets"] = ds;

    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < config.random_splits; ++i) seeds.push_back(i);
    j["splits"] = {{"random_seeds", seeds},
                   {"scaffold", config.scaffold_split},
                   {"fractions", {data::kTrainFraction, data::kValidationFraction,
                                  data::kTestFraction}}};
    j["estimators"] = config.estimators;

    const uq::EstimatorConfig& e = config.estimator;
    j["constants"] = {{"ensemble_size", e.ensemble_size},
                      {"bootstrap_fraction", e.bootstrap_fraction},
                      {"snapshot_period_epochs", e.snapshot_period},
                      {"dropout_rates", e.dropout_rates},
                      {"dropout_passes", e.dropout_passes},
                      {"knn_k", e.knn_k},
                      {"forest_trees", e.forest_trees},
                      {"fingerprint_length", e.fingerprint_length},
                      {"fingerprint_radius", e.fingerprint_radius}};
    return j.dump(2) + "\n";
}

void write_text_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace moluq::cli
