#include <string>

#include <CLI11.hpp>

#include "moluq/cli/commands.hpp"
#include "moluq/cli/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"moluq: train and score molecular uncertainty estimators"};
    app.require_subcommand(1);

    moluq::cli::RunOptions run_opts;
    auto* run = app.add_subcommand("run", "run estimators over datasets and splits");
    run->add_option("--config", run_opts.config_path, "run configuration file")->required();
    run->add_option("--archive", run_opts.archive_dir, "output archive directory")
        ->default_val("archive");
    run->add_option("--workers", run_opts.workers_override,
                    "worker threads (overrides config and MOLUQ_WORKERS)");
    run->add_flag("--dry-run", run_opts.dry_run, "write manifest and splits only");

    moluq::cli::ReportOptions report_opts;
    auto* report = app.add_subcommand("report", "summarize an archive into tables");
    report->add_option("--archive", report_opts.archive_dir, "archive directory")->required();
    report->add_option("--out", report_opts.out_dir, "output directory");

    moluq::cli::CompareOptions compare_opts;
    auto* compare = app.add_subcommand("compare", "pairwise signed-rank comparisons");
    compare->add_option("--archive", compare_opts.archive_dir, "archive directory")->required();
    compare->add_option("--metric", compare_opts.metric, "spearman | area | nll | cnll")
        ->default_val("spearman");
    compare->add_option("--aggregation", compare_opts.aggregation, "per-split | median")
        ->default_val("per-split");
    compare->add_option("--out", compare_opts.out_dir, "output directory");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate-config", "check a config file");
    validate->add_option("--config", validate_path, "configuration file")->required();

    bool show_schema = false;
    validate->add_flag("--schema", show_schema, "print the config schema and exit");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return moluq::cli::cmd_run(run_opts);
    if (report->parsed()) return moluq::cli::cmd_report(report_opts);
    if (compare->parsed()) return moluq::cli::cmd_compare(compare_opts);
    if (validate->parsed()) {
        if (show_schema) {
            std::fputs(moluq::cli::Config::schema_text().c_str(), stdout);
            return 0;
        }
        return moluq::cli::cmd_validate_config(validate_path);
    }
    return 1;
}
