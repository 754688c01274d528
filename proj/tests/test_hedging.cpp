#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ehf/errors.hpp"
#include "ehf/hedging.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/signal_forest.hpp"
#include "ehf/trade_mask.hpp"
#include "support/episodes.hpp"

using namespace ehf;
using namespace ehf::fixtures;

namespace {

template <std::size_t N>
EpisodeBreakdown replay_printed(const std::array<PrintedRow, N>& rows, double rate) {
    // Pad one terminal price so every printed day is a trading day.
    auto prices = printed_prices(rows);
    prices.push_back(prices.back());
    const auto deltas = rebuilt_deltas(rows);
    return replay_episode(prices, deltas, ContractSpec{100.0, N}, CostModel{rate});
}

double brute_entropy(const std::vector<double>& l, double lambda) {
    long double s = 0.0;
    for (double x : l) s += std::exp(static_cast<long double>(-lambda * x));
    return static_cast<double>(std::log(s / l.size()) / lambda);
}

} // namespace

TEST(TerminationLoss, UnhedgedShortCall) {
    const std::vector<double> prices{100, 103, 98, 110};
    const std::vector<double> zero(3, 0.0);
    EXPECT_DOUBLE_EQ(termination_loss(prices, zero, ContractSpec{100, 3}, CostModel{0.05}), -10.0);
}

TEST(TerminationLoss, HandComputedEpisode) {
    const std::vector<double> prices{100, 104, 99, 105};
    const std::vector<double> d{0.5, 0.7, 0.4};
    const double gain = 0.5 * 4 + 0.7 * -5 + 0.4 * 6;
    const double cost = 0.02 * (0.5 * 100 + 0.2 * 104 + 0.3 * 99);
    EXPECT_NEAR(termination_loss(prices, d, ContractSpec{100, 3}, CostModel{0.02}), gain - cost - 5.0, 1e-12);
    const double liq = 0.02 * 0.4 * 105;
    EXPECT_NEAR(termination_loss(prices, d, ContractSpec{100, 3}, CostModel{0.02, true}), gain - cost - liq - 5.0, 1e-12);
}

TEST(TerminationLoss, ShapeErrors) {
    const std::vector<double> prices{100, 101, 102};
    EXPECT_THROW(termination_loss(prices, std::vector<double>(3), ContractSpec{100, 2}, CostModel{}), ShapeError);
    EXPECT_THROW(termination_loss(std::vector<double>{100, 101}, std::vector<double>(2), ContractSpec{100, 2}, CostModel{}),
                 ShapeError);
}

TEST(TerminationLoss, FirstPrintedDays) {
    const auto daily = replay_printed(kDailyEpisode, kDailyEpisodeRate);
    EXPECT_NEAR(daily.rows[0].buy_sell, 40.9042, 1e-3);
    EXPECT_NEAR(daily.rows[0].trading_cost, 2.0452, 1e-3);
    const auto gated = replay_printed(kGatedEpisode, kGatedEpisodeRate);
    EXPECT_NEAR(gated.rows[0].buy_sell, 43.3373, 1e-3);
    EXPECT_NEAR(gated.rows[0].trading_cost, 0.8667, 1e-3);
}

TEST(TerminationLoss, ReplaysBothPrintedEpisodes) {
    auto check = [](const auto& rows, double rate) {
        const auto rebuilt = rebuilt_deltas(rows);
        const auto ep = replay_printed(rows, rate);
        ASSERT_EQ(ep.rows.size(), rows.size());
        for (std::size_t t = 0; t < rows.size(); ++t) {
            EXPECT_NEAR(rebuilt[t], rows[t].delta, 5e-5) << "day " << t;
            EXPECT_NEAR(ep.rows[t].buy_sell, rows[t].buy_sell, 1e-3) << "day " << t;
            EXPECT_NEAR(ep.rows[t].trading_cost, rows[t].trading_cost, 1e-3) << "day " << t;
        }
    };
    check(kDailyEpisode, kDailyEpisodeRate);
    check(kGatedEpisode, kGatedEpisodeRate);
}

TEST(TerminationLoss, GatedDaysCostNothing) {
    const auto ep = replay_printed(kGatedEpisode, kGatedEpisodeRate);
    for (std::size_t day : kGatedDays) {
        EXPECT_EQ(ep.rows[day].trading_cost, 0.0);
        EXPECT_EQ(ep.rows[day].delta, ep.rows[day - 1].delta);
    }
}

TEST(TerminationLoss, CostIsLinearInRate) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SimConfig cfg;
    cfg.n_paths = 20;
    const auto paths = simulate_heston(HestonParams::high_vol(), cfg);
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        std::vector<double> d(30);
        for (double& x : d) x = u(rng);
        const auto a = replay_episode(paths.prices(i), d, ContractSpec{}, CostModel{0.02});
        const auto b = replay_episode(paths.prices(i), d, ContractSpec{}, CostModel{0.05});
        EXPECT_NEAR(b.total_cost, 2.5 * a.total_cost, 1e-12 * b.total_cost);
        EXPECT_NEAR(a.hedge_gain, b.hedge_gain, 0.0);
    }
}

TEST(TerminationLoss, GradientMatchesFiniteDifferences) {
    SimConfig cfg;
    cfg.n_paths = 5;
    const auto paths = simulate_heston(HestonParams::high_vol(), cfg);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (bool liq : {false, true}) {
        const CostModel cost{0.03, liq};
        for (std::size_t i = 0; i < paths.n_paths(); ++i) {
            std::vector<double> d(30), g(30);
            for (double& x : d) x = u(rng);
            termination_loss_gradient(paths.prices(i), d, ContractSpec{}, cost, g);
            for (std::size_t t = 0; t < 30; ++t) {
                auto dp = d, dm = d;
                dp[t] += 1e-7;
                dm[t] -= 1e-7;
                const double fd = (termination_loss(paths.prices(i), dp, ContractSpec{}, cost) -
                                   termination_loss(paths.prices(i), dm, ContractSpec{}, cost)) / 2e-7;
                EXPECT_NEAR(g[t], fd, 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST(TerminationLoss, EpisodeCsvLayout) {
    const auto ep = replay_printed(kDailyEpisode, kDailyEpisodeRate);
    const auto file = std::filesystem::temp_directory_path() / "ehf_test_episode.csv";
    write_episode_csv(ep, file);
    std::ifstream in(file, std::ios::binary);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "day,price,delta,buy_sell,trading_cost");
    EXPECT_EQ(first, "0,100.0000,0.4090,40.9042,2.0452");
    std::filesystem::remove(file);
}

TEST(EntropyRisk, HandValues) {
    EXPECT_NEAR(entropy_risk(std::vector<double>(7, -3.25), RiskConfig{0.5}), 3.25, 1e-12);
    EXPECT_NEAR(entropy_risk(std::vector<double>{0.0, -1.0}, RiskConfig{1.0}), std::log((1 + std::exp(1.0)) / 2), 1e-12);
    EXPECT_NEAR(entropy_risk(std::vector<double>{0.0, -1.0}, RiskConfig{1.0}), 0.620115, 1e-6);
    EXPECT_THROW(entropy_risk(std::vector<double>{}, RiskConfig{1.0}), DomainError);
    EXPECT_THROW(RiskConfig{0.0}.validate(), ConfigError);
}

class EntropyProperties : public ::testing::Test {
protected:
    std::vector<std::vector<double>> samples;
    void SetUp() override {
        std::mt19937_64 rng(42);
        std::normal_distribution<double> n(-12.0, 6.0);
        for (int k = 0; k < 50; ++k) {
            std::vector<double> l(100);
            for (double& x : l) x = n(rng);
            samples.push_back(l);
        }
    }
};

TEST_F(EntropyProperties, CashInvariance) {
    for (double lambda : {0.2, 0.5, 0.7, 3.0}) {
        for (const auto& l : samples) {
            auto shifted = l;
            for (double& x : shifted) x += 4.5;
            EXPECT_NEAR(entropy_risk(shifted, {lambda}), entropy_risk(l, {lambda}) - 4.5, 1e-10);
        }
    }
}

TEST_F(EntropyProperties, Monotonicity) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (const auto& l : samples) {
        auto better = l;
        for (double& x : better) x += u(rng);
        EXPECT_LE(entropy_risk(better, {0.5}), entropy_risk(l, {0.5}));
    }
}

TEST_F(EntropyProperties, JensenBound) {
    for (const auto& l : samples) {
        const double mean = std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
        EXPECT_GT(entropy_risk(l, {0.5}), -mean);
    }
    EXPECT_NEAR(entropy_risk(std::vector<double>(5, 2.0), {0.5}), -2.0, 1e-12);
}

TEST_F(EntropyProperties, SmallLambdaLimit) {
    for (const auto& l : samples) {
        const double mean = std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
        EXPECT_NEAR(entropy_risk(l, {1e-8}), -mean, 1e-6);
        EXPECT_NEAR(entropy_risk(l, {1e-12}), -mean, 1e-9);
    }
}

TEST_F(EntropyProperties, MatchesBruteForceAndIsStableForLargeLosses) {
    for (const auto& l : samples) EXPECT_NEAR(entropy_risk(l, {0.5}), brute_entropy(l, 0.5), 1e-9);
    const std::vector<double> huge{-2000.0, -1990.0};
    EXPECT_TRUE(std::isfinite(entropy_risk(huge, {1.0})));
    EXPECT_NEAR(entropy_risk(huge, {1.0}), 2000.0 - std::log(2.0) + std::log1p(std::exp(-10.0)), 1e-9);
}

TEST_F(EntropyProperties, GradientIsNegativeSoftmax) {
    for (const auto& l : samples) {
        std::vector<double> g(l.size());
        const double rho = entropy_risk_gradient(l, {0.5}, g);
        EXPECT_NEAR(rho, entropy_risk(l, {0.5}), 1e-12);
        EXPECT_NEAR(std::accumulate(g.begin(), g.end(), 0.0), -1.0, 1e-12);
        for (std::size_t k = 0; k < 5; ++k) {
            auto p = l, m = l;
            p[k] += 1e-6;
            m[k] -= 1e-6;
            EXPECT_NEAR(g[k], (entropy_risk(p, {0.5}) - entropy_risk(m, {0.5})) / 2e-6, 1e-7);
        }
    }
}

TEST_F(EntropyProperties, GradientApproachesNegativeMeanAtSmallLambda) {
    const auto& l = samples.front();
    std::vector<double> g(l.size());
    entropy_risk_gradient(l, {1e-6}, g);
    const double want = -1.0 / static_cast<double>(l.size());
    for (double x : g) EXPECT_LT(std::abs(x - want) / std::abs(want), 1e-3);
}

TEST(Summary, SampleStatistics) {
    HedgeEpisodeResult r{{-1.0, -3.0, -2.0, -6.0}, {30, 10, 0, 4}, {1.0, 0.5, 0.0, 0.25}};
    const auto s = summarize(r);
    EXPECT_DOUBLE_EQ(s.mean, -3.0);
    EXPECT_NEAR(s.std, std::sqrt((4.0 + 0.0 + 1.0 + 9.0) / 3.0), 1e-12);
    EXPECT_DOUBLE_EQ(s.avg_trades, 11.0);
    EXPECT_DOUBLE_EQ(s.avg_cost, 0.4375);
    EXPECT_EQ(s.n, 4u);
}

TEST(Mask, ZeroAlphaAllowsEveryDay) {
    SimConfig cfg;
    cfg.n_paths = 100;
    const auto paths = simulate_heston(HestonParams::high_vol(), cfg);
    const auto mask = compute_trade_mask(paths, 0.0);
    EXPECT_EQ(mask.count(), 100u * 30u);
    EXPECT_DOUBLE_EQ(trade_frequency(paths, 0.0), 30.0);
}

TEST(Mask, HugeAlphaOnlyDayZero) {
    SimConfig cfg;
    cfg.n_paths = 50;
    const auto paths = simulate_heston(HestonParams::high_vol(), cfg);
    const auto mask = compute_trade_mask(paths, 10.0);
    for (std::size_t i = 0; i < 50; ++i) {
        EXPECT_TRUE(mask.allowed(i, 0));
        for (std::size_t t = 1; t < 30; ++t) EXPECT_FALSE(mask.allowed(i, t));
    }
    EXPECT_THROW(compute_trade_mask(paths, -0.01), DomainError);
}

TEST(Mask, MonotoneInAlpha) {
    SimConfig cfg;
    cfg.n_paths = 300;
    cfg.seed = 77;
    const auto paths = simulate_heston(HestonParams::low_vol(), cfg);
    TradeMask prev = compute_trade_mask(paths, 0.0);
    double prev_freq = trade_frequency(paths, 0.0);
    for (double a = 0.005; a <= 0.3; a += 0.005) {
        const auto m = compute_trade_mask(paths, a);
        for (std::size_t i = 0; i < paths.n_paths(); ++i) {
            for (std::size_t t = 0; t < 30; ++t) {
                if (m.allowed(i, t)) EXPECT_TRUE(prev.allowed(i, t));
            }
        }
        const double f = trade_frequency(paths, a);
        EXPECT_LE(f, prev_freq);
        prev = m;
        prev_freq = f;
    }
}

TEST(Mask, CombineWithLabels) {
    SimConfig cfg;
    cfg.n_paths = 20;
    const auto paths = simulate_heston(HestonParams::high_vol(), cfg);
    const auto mask = compute_trade_mask(paths, 0.02);
    EXPECT_TRUE(combine_mask(mask, LabelMatrix(20, 30, 1)) == mask);
    const auto none = combine_mask(mask, LabelMatrix(20, 30, 0));
    EXPECT_EQ(none.count(), 20u);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_TRUE(none.allowed(i, 0));
    EXPECT_THROW(combine_mask(mask, LabelMatrix(19, 30, 1)), ShapeError);
}
