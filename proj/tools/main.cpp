#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "annotab/errors.hpp"
#include "annotab/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Tabular dataset annotation pipeline"};
    app.require_subcommand(1);

    annotab::pipeline::PipelineOptions options;
    app.add_option("--config", options.config_path, "Pipeline config file (JSON)")
        ->required();
    app.add_option("--workers", options.workers, "Record-level worker threads")
        ->check(CLI::PositiveNumber);
    app.add_option("--replay-store", options.replay_store_path,
                   "Completion record store (JSONL)");
    app.add_option("--mode", options.mode, "Backend mode")
        ->check(CLI::IsMember({"record", "replay", "live"}));
    app.add_option("--seed", options.seed, "Random seed");

    // CLI subcommand -> pipeline stage
    const std::pair<const char*, const char*> stages[] = {
        {"ingest", "ingest"},
        {"schema", "schema"},
        {"annotate-sql", "annotate-sql"},
        {"validate", "validate"},
        {"classify", "classify"},
        {"translate", "translate"},
        {"compare", "compare"},
        {"ipe-step", "ipe-step"},
        {"annotate-columns", "annotate-columns"},
        {"extract-problems", "extract-problems"},
        {"eval-classify", "eval-classify"},
        {"report", "report"},
    };
    for (const auto& [name, stage] : stages) {
        app.add_subcommand(name, std::string("Run the ") + stage + " stage");
    }
    auto* run_all = app.add_subcommand("run-all", "Run every stage in order");

    CLI11_PARSE(app, argc, argv);

    if (const char* key = std::getenv("TABANNOT_API_KEY")) options.api_key = key;

    try {
        annotab::pipeline::Pipeline pipeline(options);
        if (run_all->parsed()) {
            pipeline.run_all();
        } else {
            for (const auto& [name, stage] : stages) {
                if (app.got_subcommand(name)) {
                    pipeline.run_stage(stage);
                    break;
                }
            }
        }
    } catch (const annotab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
