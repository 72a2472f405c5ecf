// slowmix CLI: run one experiment over a (kappa x seed) grid, sweep from a
// JSON config, summarize results, or emit plot series.
//
// Exit codes: 0 success, 2 invalid configuration, 3 numerical-failure rows.

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slowmix/slowmix.hpp"

namespace {

using slowmix::ExperimentConfig;

void add_grid_options(CLI::App* sub, ExperimentConfig& cfg,
                      std::vector<std::string>& overrides) {
    sub->add_option("--kappa", cfg.kappa_list, "diffusivity values")
        ->required();
    sub->add_option("--amplitude", cfg.amplitude, "shear amplitude A");
    sub->add_option("--profile", cfg.profile_name,
                    "profile name or tabulated CSV path");
    sub->add_option("--grid", cfg.grid, "grid resolution (power of two)");
    sub->add_option("--seeds", cfg.seeds, "realization seeds")->required();
    sub->add_option("--substeps", cfg.substeps, "substeps per unit leg");
    sub->add_option("--out", cfg.out_path, "results CSV path")->required();
    sub->add_option("--set", overrides,
                    "experiment-specific override key=value");
}

ExperimentConfig config_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw slowmix::ConfigInvalid("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& ex) {
        throw slowmix::ConfigInvalid(std::string("bad config JSON: ") +
                                     ex.what());
    }
    ExperimentConfig cfg;
    try {
        cfg.experiment = j.at("experiment").get<std::string>();
        cfg.kappa_list = j.at("kappa_list").get<std::vector<double>>();
        cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        cfg.out_path = j.at("out_path").get<std::string>();
        if (j.contains("amplitude")) cfg.amplitude = j["amplitude"];
        if (j.contains("profile_name")) cfg.profile_name = j["profile_name"];
        if (j.contains("grid")) cfg.grid = j["grid"];
        if (j.contains("substeps")) cfg.substeps = j["substeps"];
        if (j.contains("overrides"))
            for (auto& [k, v] : j["overrides"].items())
                cfg.overrides[k] = v.is_string()
                                       ? v.get<std::string>()
                                       : nlohmann::to_string(v);
    } catch (const nlohmann::json::exception& ex) {
        throw slowmix::ConfigInvalid(std::string("config field error: ") +
                                     ex.what());
    }
    return cfg;
}

int run_config(ExperimentConfig& cfg,
               const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw slowmix::ConfigInvalid("--set expects key=value: " + kv);
        cfg.overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    slowmix::RunResult rr = slowmix::run(cfg);
    std::printf("%s: %ld rows (%ld failures) -> %s\n", cfg.experiment.c_str(),
                rr.rows, rr.failures, rr.path.c_str());
    return rr.failures > 0 ? 3 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slowmix: alternating random shear flow laboratory"};
    app.require_subcommand(1);

    struct ExpCmd {
        ExperimentConfig cfg;
        std::vector<std::string> overrides;
        CLI::App* sub = nullptr;
    };
    std::vector<ExpCmd> cmds;
    const char* names[] = {"tdis",         "mix",       "twopoint-drift",
                           "twopoint-minorize", "bounds", "closeness",
                           "prop-check",   "rescaled-tdis"};
    cmds.resize(std::size(names));
    for (std::size_t i = 0; i < std::size(names); ++i) {
        cmds[i].cfg.experiment = names[i];
        cmds[i].sub = app.add_subcommand(names[i]);
        add_grid_options(cmds[i].sub, cmds[i].cfg, cmds[i].overrides);
    }

    std::string config_path, results_path, kind;
    auto* sweep = app.add_subcommand("sweep", "run a sweep from a JSON config");
    sweep->add_option("--config", config_path, "JSON config file")->required();
    auto* summary = app.add_subcommand("summary", "summarize a results file");
    summary->add_option("--in", results_path, "results CSV")->required();
    auto* plot = app.add_subcommand("plotdata", "emit plot series");
    plot->add_option("--in", results_path, "results CSV")->required();
    plot->add_option("--kind", kind, "mix-decay | tdis-scaling | drift-ci")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& cmd : cmds)
            if (cmd.sub->parsed()) return run_config(cmd.cfg, cmd.overrides);
        if (sweep->parsed()) {
            ExperimentConfig cfg = config_from_json(config_path);
            return run_config(cfg, {});
        }
        if (summary->parsed()) {
            auto table = slowmix::sweep_summary(results_path);
            for (const auto& row : table.rows)
                std::printf("%s %s %.12g\n", row.experiment.c_str(),
                            row.metric.c_str(), row.value);
            return 0;
        }
        if (plot->parsed()) {
            std::string out = slowmix::emit_plotdata(results_path, kind);
            std::printf("wrote %s\n", out.c_str());
            return 0;
        }
    } catch (const slowmix::ConfigInvalid& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 2;
    } catch (const slowmix::UnknownKind& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 3;
    }
    return 0;
}
