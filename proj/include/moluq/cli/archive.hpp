#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moluq/cli/config.hpp"
#include "moluq/data/dataset.hpp"
#include "moluq/data/split.hpp"

namespace moluq::cli {

// On-disk layout of one run:
//   manifest.json                                  run manifest (has timestamps)
//   splits/<dataset>/<split>.json                  split manifests
//   cells/<dataset>/<split>/<estimator>/           one directory per cell:
//       predictions_test.csv, predictions_val.csv, details.json, metrics.json
//   failures.json                                  present when cells failed
// Cell directories are written under a temporary name and renamed into
// place, so a cell either exists completely or not at all and nothing is
// overwritten within a run.
class Archive {
public:
    explicit Archive(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path manifest_path() const { return root_ / "manifest.json"; }
    std::filesystem::path split_path(const std::string& dataset,
                                     const std::string& split_id) const;
    std::filesystem::path cell_path(const std::string& dataset, const std::string& split_id,
                                    const std::string& estimator) const;

    bool cell_complete(const std::string& dataset, const std::string& split_id,
                       const std::string& estimator) const;

    // Writes the four cell files into a staging directory and renames it in.
    void write_cell(const std::string& dataset, const std::string& split_id,
                    const std::string& estimator, const std::string& test_csv,
                    const std::string& val_csv, const std::string& details_json,
                    const std::string& metrics_json) const;

    void remove_stale_staging() const;

private:
    std::filesystem::path root_;
};

// Everything needed to reproduce a run; timestamps live only here, never in
// metric artifacts.
std::string build_manifest(const Config& config, const std::vector<data::Dataset>& datasets,
                           const std::string& timestamp);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace moluq::cli
