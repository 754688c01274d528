#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ehf/contract.hpp"
#include "ehf/frontier.hpp"
#include "ehf/hedging.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/policy.hpp"
#include "ehf/signal_forest.hpp"
#include "ehf/training.hpp"

namespace ehf {

enum class PriceModel { heston, gbm };

struct ScenarioConfig {
    std::string name = "high_vol"; ///< low_vol | high_vol | custom
    PriceModel model = PriceModel::heston;
    HestonParams heston = HestonParams::high_vol();
    GBMParams gbm;
};

/// Everything one pipeline run needs. Stage seeds derive from `seed`.
struct RunConfig {
    ScenarioConfig scenario;
    double s0 = 100.0;
    std::size_t n_steps = 30;
    double days_per_year = kDaysPerYear;
    std::size_t n_train = 100000;
    std::size_t n_test = 20000;
    std::uint64_t seed = 2024;

    double strike = 100.0;
    std::vector<double> cost_rates{0.02, 0.03, 0.05};
    bool charge_liquidation = false;
    std::vector<double> lambdas{0.5};

    double alpha_lo = 0.0;
    double alpha_hi = 0.2;
    std::size_t alpha_count = 100;
    SweepMode mode = SweepMode::fast;
    double summary_lo = 0.0;
    double summary_hi = 0.1;

    std::vector<Architecture> policies{Architecture::dense, Architecture::gru};
    PolicyConfig network;
    std::optional<double> baseline_vol; ///< unset: sqrt(theta) for Heston, sigma for GBM

    std::vector<bool> rf_variants{false, true};
    double beta = 0.05;
    ForestConfig forest;
    bool rf_gate = true;

    TrainConfig training;
    std::filesystem::path out_dir = "out";

    std::size_t n_paths() const { return n_train + n_test; }
    SimConfig sim_config() const;
    ContractSpec contract() const;
    std::vector<double> alphas() const { return alpha_grid(alpha_lo, alpha_hi, alpha_count); }
    double bsm_vol() const;
    /// Seeds for the forest, network init and training, derived from `seed`.
    std::uint64_t stage_seed(std::uint64_t stage) const;

    void validate() const;
};

inline constexpr std::uint64_t kForestStage = 1;
inline constexpr std::uint64_t kInitStage = 2;
inline constexpr std::uint64_t kTrainStage = 3;

/// Parses the sectioned key = value format; unknown sections or keys are errors.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& file);
/// Serialises every field in the format parse_run_config reads.
std::string format_run_config(const RunConfig& cfg);

} // namespace ehf
