#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ehf/pipeline.hpp"
#include "ehf/run_config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Efficient hedging frontier pipeline"};
    app.require_subcommand(1, 1);

    std::string config_path;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> mode;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Run config file")->check(CLI::ExistingFile);
        cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
        cmd->add_option("--seed", seed, "Master seed, overrides [simulation] seed");
        cmd->add_option("--out", out_dir, "Output directory, overrides [output] dir");
        cmd->add_option("--mode", mode, "Sweep mode, overrides [sweep] mode")
            ->check(CLI::IsMember({"retrain", "fast"}));
    };
    auto* simulate = app.add_subcommand("simulate", "Simulate train and test paths");
    auto* label = app.add_subcommand("label", "Label extrema and fit the classifier");
    auto* train = app.add_subcommand("train", "Train hedging networks");
    auto* sweep = app.add_subcommand("sweep", "Sweep the price-change threshold");
    auto* report = app.add_subcommand("report", "Write comparison tables");
    auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
    for (auto* cmd : {simulate, label, train, sweep, report, gradcheck}) add_common(cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ehf::kExitOk : ehf::kExitConfig;
    }

    try {
        if (gradcheck->parsed()) return ehf::cmd_gradcheck(std::cout) ? ehf::kExitOk : ehf::kExitNumeric;

        ehf::RunConfig cfg = config_path.empty() ? ehf::RunConfig{} : ehf::load_run_config(config_path);
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.out_dir = *out_dir;
        if (mode) cfg.mode = ehf::parse_sweep_mode(*mode);
        cfg.validate();

        if (simulate->parsed()) {
            const auto paths = ehf::cmd_simulate(cfg, jobs);
            std::cout << "wrote " << paths.n_paths() << " paths to " << ehf::RunLayout(cfg.out_dir).paths().string()
                      << '\n';
        } else if (label->parsed()) {
            ehf::cmd_label(cfg, jobs, std::cout);
        } else if (train->parsed()) {
            ehf::cmd_train(cfg, jobs, std::cout);
        } else if (sweep->parsed()) {
            ehf::cmd_sweep(cfg, jobs, std::cout);
        } else if (report->parsed()) {
            ehf::cmd_report(cfg, std::cout);
        }
        return ehf::kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "ehf: " << e.what() << '\n';
        return ehf::exit_code_for_current_exception();
    }
}
