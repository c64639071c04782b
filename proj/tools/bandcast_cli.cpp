// bandcast: stage orchestrator for the spectrum-demand forecasting pipeline.
// Exit codes: 0 ok, 2 config error, 3 missing input, 4 numeric failure.

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bandcast/errors.hpp"
#include "bandcast/pipeline.hpp"

namespace {

using bandcast::RunConfig;

const std::map<std::string, std::pair<const char*, void (*)(const RunConfig&)>> kStages = {
    {"gen", {"generate synthetic samples and regulatory records", bandcast::stage_gen}},
    {"aggregate", {"aggregate samples into tile-window cells and proxy targets",
                   bandcast::stage_aggregate}},
    {"cleanse", {"impute gaps and treat outliers in the cell series", bandcast::stage_cleanse}},
    {"featurize", {"engineer lagged KPI panels joined to the proxy", bandcast::stage_featurize}},
    {"correlate", {"lag correlation and autocorrelation analyses", bandcast::stage_correlate}},
    {"train", {"fit and evaluate the regression models", bandcast::stage_train}},
    {"transfer", {"cross-region transfer study", bandcast::stage_transfer}},
    {"benchmark", {"compare year-end totals against ITU benchmark values",
                   bandcast::stage_benchmark}},
    {"report", {"emit the report bundle with manifest", bandcast::stage_report}},
    {"all", {"run every stage in dependency order", bandcast::stage_all}},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatio-temporal spectrum demand forecasting toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    if (const char* env = std::getenv("BANDCAST_CONFIG"))
        config_path = env;
    else
        config_path = "configs/sample.json";

    std::optional<std::string> out_dir;
    std::optional<uint64_t> seed;
    std::optional<int> jobs;
    std::vector<std::string> sets;

    app.add_option("--config", config_path, "JSON config path (env BANDCAST_CONFIG overrides the default)")
        ->capture_default_str();
    app.add_option("--out", out_dir, "output directory (overrides config out_dir)");
    app.add_option("--seed", seed, "master seed (overrides config seed)");
    app.add_option("--jobs", jobs, "worker threads; never changes results");
    app.add_option("--set", sets, "config override as dotted.path=value (value parsed as JSON)");

    std::string chosen;
    for (const auto& [name, stage] : kStages) {
        CLI::App* sub = app.add_subcommand(name, stage.first);
        sub->fallthrough();  // global flags may follow the subcommand
        sub->callback([&chosen, n = name] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        RunConfig cfg = bandcast::load_config(config_path, sets, out_dir, seed, jobs);
        bandcast::write_run_meta(cfg);
        kStages.at(chosen).second(cfg);
        return 0;
    } catch (const bandcast::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bandcast::MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 3;
    } catch (const bandcast::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
