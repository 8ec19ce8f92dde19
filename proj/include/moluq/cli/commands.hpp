#pragma once

#include <string>
#include <vector>

namespace moluq::cli {

// Exit codes shared by every command: 0 success, 1 config error, 2 partial
// failure (some cells failed, the rest completed).
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitPartialFailure = 2;

struct RunOptions {
    std::string config_path;
    std::string archive_dir;
    int workers_override = 0;  // 0 = config / MOLUQ_WORKERS
    bool dry_run = false;      // write manifest and splits only
};

int cmd_run(const RunOptions& options);

struct ReportOptions {
    std::string archive_dir;
    std::string out_dir;  // default <archive>/reports
};

int cmd_report(const ReportOptions& options);

struct CompareOptions {
    std::string archive_dir;
    std::string metric = "spearman";       // spearman | area | nll | cnll
    std::string aggregation = "per-split"; // per-split | median
    std::string out_dir;                   // default <archive>/compare
};

int cmd_compare(const CompareOptions& options);

int cmd_validate_config(const std::string& config_path);

}  // namespace moluq::cli
