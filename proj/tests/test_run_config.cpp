#include <cmath>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "ehf/errors.hpp"
#include "ehf/run_config.hpp"

using namespace ehf;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(EHF_SOURCE_DIR) / "configs";

} // namespace

TEST(RunConfig, DefaultFileCarriesPaperSetup) {
    const auto c = load_run_config(kConfigs / "default.ini");
    const auto hv = HestonParams::high_vol();
    EXPECT_EQ(c.scenario.name, "high_vol");
    EXPECT_EQ(c.scenario.heston.v0, hv.v0);
    EXPECT_EQ(c.scenario.heston.theta, hv.theta);
    EXPECT_EQ(c.scenario.heston.sigma_v, hv.sigma_v);
    EXPECT_EQ(c.scenario.heston.rho, hv.rho);
    EXPECT_EQ(c.n_train, 100000u);
    EXPECT_EQ(c.n_test, 20000u);
    EXPECT_EQ(c.n_steps, 30u);
    EXPECT_EQ(c.cost_rates, (std::vector<double>{0.02, 0.03, 0.05}));
    EXPECT_EQ(c.lambdas, std::vector<double>{0.5});
    EXPECT_EQ(c.alphas().size(), 100u);
    EXPECT_DOUBLE_EQ(c.alphas().back(), 0.2);
    EXPECT_EQ(c.beta, 0.05);
    EXPECT_EQ(c.forest.n_trees, 50u);
    EXPECT_EQ(c.mode, SweepMode::retrain);
    EXPECT_EQ(c.network.gru_units, 10u);
    EXPECT_EQ(c.network.window, 3u);
    EXPECT_DOUBLE_EQ(c.bsm_vol(), std::sqrt(0.8));
}

TEST(RunConfig, DeskPresetIsSmallerAndFast) {
    const auto c = load_run_config(kConfigs / "desk.ini");
    EXPECT_EQ(c.n_train, 20000u);
    EXPECT_EQ(c.n_test, 5000u);
    EXPECT_EQ(c.mode, SweepMode::fast);
}

TEST(RunConfig, FormatParsesBackToSameText) {
    const auto c = load_run_config(kConfigs / "default.ini");
    const auto text = format_run_config(c);
    EXPECT_EQ(format_run_config(parse_run_config(text)), text);
    EXPECT_EQ(format_run_config(parse_run_config("")), format_run_config(RunConfig{}));
}

TEST(RunConfig, HighVolParametersAcceptedVerbatim) {
    const auto c = parse_run_config(
        "[scenario]\nname = table\nv0 = 0.8\ntheta = 0.8\nkappa = 1\nmu = 0.01\nsigma_v = 4\nrho = -0.7\n");
    const auto hv = HestonParams::high_vol();
    EXPECT_EQ(c.scenario.heston.v0, hv.v0);
    EXPECT_EQ(c.scenario.heston.theta, hv.theta);
    EXPECT_EQ(c.scenario.heston.kappa, hv.kappa);
    EXPECT_EQ(c.scenario.heston.mu, hv.mu);
    EXPECT_EQ(c.scenario.heston.sigma_v, hv.sigma_v);
    EXPECT_EQ(c.scenario.heston.rho, hv.rho);
}

TEST(RunConfig, PresetsAndOverrides) {
    const auto low = parse_run_config("[scenario]\nname = low_vol\n");
    EXPECT_EQ(low.scenario.heston.v0, 0.4);
    const auto tweaked = parse_run_config("[scenario]\nname = low_vol\nrho = -0.5\n");
    EXPECT_EQ(tweaked.scenario.heston.rho, -0.5);
    EXPECT_EQ(tweaked.scenario.heston.theta, 0.4);
    const auto gbm = parse_run_config("[scenario]\nname = flat\nmodel = gbm\ngbm_sigma = 0.2\n");
    EXPECT_EQ(gbm.scenario.model, PriceModel::gbm);
    EXPECT_EQ(gbm.bsm_vol(), 0.2);
    const auto lists = parse_run_config("[contract]\ncost_rates = 0.01,0.04\n[forest]\nrf = on\n[policy]\narchitectures = gru\n");
    EXPECT_EQ(lists.cost_rates, (std::vector<double>{0.01, 0.04}));
    EXPECT_EQ(lists.rf_variants, std::vector<bool>{true});
    EXPECT_EQ(lists.policies, std::vector<Architecture>{Architecture::gru});
}

TEST(RunConfig, CommentsAndBlankLines) {
    const auto c = parse_run_config("; header\n\n[risk]\n; note\nlambdas = 0.2, 0.7\n");
    EXPECT_EQ(c.lambdas, (std::vector<double>{0.2, 0.7}));
}

TEST(RunConfig, RejectsBadInput) {
    EXPECT_THROW(parse_run_config("[nope]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[risk]\nlambda = 0.5\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[risk]\nlambdas = 0.5x\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[risk]\nlambdas = -1\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[contract]\ncharge_liquidation = maybe\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[sweep]\nmode = slow\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[sweep]\nsummary_hi = 0.5\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[policy]\narchitectures = lstm\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[policy]\narchitectures = bsm\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[simulation]\nn_test = 0\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[simulation]\nseed = -3\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[scenario]\nname = mine\nv0 = 0.1\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[scenario]\nname = low_vol\nrho = 2\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[scenario]\nname = flat\nmodel = gbm\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[forest]\nmin_samples_leaf = 0\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[training]\nepochs = 0\n"), ConfigError);
    EXPECT_THROW(parse_run_config("[risk\nlambdas = 1\n"), ConfigError);
    EXPECT_THROW(load_run_config("/nonexistent/run.ini"), IoError);
}

TEST(RunConfig, StageSeedsAreDistinctAndStable) {
    RunConfig a;
    a.seed = 7;
    RunConfig b = a;
    EXPECT_EQ(a.stage_seed(kForestStage), b.stage_seed(kForestStage));
    EXPECT_NE(a.stage_seed(kForestStage), a.stage_seed(kInitStage));
    EXPECT_NE(a.stage_seed(kInitStage), a.stage_seed(kTrainStage));
    b.seed = 8;
    EXPECT_NE(a.stage_seed(kTrainStage), b.stage_seed(kTrainStage));
}
