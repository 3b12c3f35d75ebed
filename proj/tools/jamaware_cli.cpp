#include "jamaware/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

using namespace jamaware;

namespace {

// Kinds each subcommand accepts; the first is used when the config names none.
const std::map<std::string, std::vector<ExperimentKind>>& subcommands() {
    static const std::map<std::string, std::vector<ExperimentKind>> m{
        {"detect", {ExperimentKind::DETECT, ExperimentKind::ROC}},
        {"characterize", {ExperimentKind::CHARACTERIZE, ExperimentKind::SUPPRESS}},
        {"classify", {ExperimentKind::CLASSIFY, ExperimentKind::AMC}},
        {"convert", {ExperimentKind::CONVERT}},
        {"antijam", {ExperimentKind::ANTIJAM}},
        {"calibrate", {ExperimentKind::CALIBRATE}},
        {"run",
         {ExperimentKind::DETECT, ExperimentKind::ROC, ExperimentKind::SUPPRESS, ExperimentKind::CHARACTERIZE,
          ExperimentKind::CLASSIFY, ExperimentKind::CONVERT, ExperimentKind::AMC, ExperimentKind::ANTIJAM,
          ExperimentKind::KERNELS, ExperimentKind::FUZZ, ExperimentKind::CALIBRATE}},
    };
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jammer detection, characterization and mitigation experiments"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    bool quick = false;
    app.add_option("--config", config_path, "Experiment config (JSON)");
    app.add_option("--seed", seed, "Run a single seed instead of the configured list");
    app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
    app.add_flag("--quick", quick, "Short streams, for smoke runs");

    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, kinds] : subcommands()) {
        std::string help = "Accepted kinds:";
        for (auto k : kinds) help += " " + kind_name(k);
        subs[name] = app.add_subcommand(name, help);
    }
    subs["run"]->description("Any experiment kind named by the config");
    CLI11_PARSE(app, argc, argv);

    try {
        std::string chosen;
        for (const auto& [name, sub] : subs)
            if (sub->parsed()) chosen = name;
        const auto& kinds = subcommands().at(chosen);
        const std::optional<ExperimentKind> fallback =
            chosen == "run" ? std::nullopt : std::optional<ExperimentKind>(kinds.front());

        nlohmann::json doc = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("cannot read config file " + config_path);
            try {
                f >> doc;
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError("config " + config_path + " is not valid JSON: " + e.what());
            }
        }
        if (quick) doc["quick"] = true;
        if (seed) doc["seeds"] = {*seed};
        if (!out_dir.empty()) doc["output_dir"] = out_dir;

        ExperimentConfig cfg = parse_config(doc, fallback);
        if (std::find(kinds.begin(), kinds.end(), cfg.spec.kind) == kinds.end())
            throw ConfigError("subcommand '" + chosen + "' cannot run kind " + kind_name(cfg.spec.kind));

        const RunReport rep = run(cfg);
        std::cout << kind_name(cfg.spec.kind) << ": wrote " << rep.manifest["artifacts"].size() << " artifacts to "
                  << rep.output_dir.string() << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}
