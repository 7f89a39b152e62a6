// geovec command-line entry point: staged pipeline over a config file.

#include <CLI11.hpp>
#include <iostream>

#include "geovec/pipeline.hpp"

namespace {

struct GlobalOpts {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> workers;
    bool force = false;
    bool weighted = false;
    bool unweighted = false;
};

geovec::PipelineConfig effective_config(const GlobalOpts& opts) {
    if (opts.config.empty()) {
        throw geovec::ConfigError("--config is required for this command");
    }
    geovec::PipelineConfig cfg = geovec::load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.workers) cfg.workers = *opts.workers;
    cfg.force = opts.force;
    if (opts.weighted) cfg.walk.weighted = true;
    if (opts.unweighted) cfg.walk.weighted = false;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"location-aware knowledge-graph embeddings"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOpts opts;
    app.add_option("--config", opts.config, "pipeline config file (JSON)");
    app.add_option("--seed", opts.seed, "override the config seed");
    app.add_option("--workers", opts.workers, "override the worker count");
    app.add_flag("--force", opts.force, "silence config-hash mismatch warnings");
    auto* weighted = app.add_flag("--weighted", opts.weighted, "force weighted walks");
    app.add_flag("--unweighted", opts.unweighted, "force uniform walks")->excludes(weighted);

    for (const char* name : {"ingest", "flood", "weight", "walk", "train", "evaluate", "stats"}) {
        app.add_subcommand(name, std::string("run the ") + name + " stage");
    }
    app.add_subcommand("all", "run every configured stage in order");

    auto* compare = app.add_subcommand("compare", "compare two evaluated run directories");
    std::string run_a, run_b;
    compare->add_option("run_a", run_a, "first run directory")->required();
    compare->add_option("run_b", run_b, "second run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "compare") {
            geovec::CompareReport report = geovec::compare_runs(run_a, run_b);
            std::cout << report.text;
            return 0;
        }
        geovec::PipelineConfig cfg = effective_config(opts);
        if (name == "all") {
            geovec::run_all(cfg);
        } else {
            geovec::run_stage(cfg, *geovec::stage_from_name(name));
        }
        return 0;
    } catch (const geovec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const geovec::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
