#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ehf/contract.hpp"
#include "ehf/market_sim.hpp"

namespace ehf {

/// Proportional transaction cost on the cash value traded.
struct CostModel {
    double rate = 0.0;
    /// Charge rate*|delta_{T-1}|*S_T for unwinding at maturity. Off by default.
    bool charge_liquidation = false;

    void validate() const;
};

/// Entropic risk rho(X) = (1/lambda) log E[exp(-lambda X)].
struct RiskConfig {
    double lambda = 0.5;

    void validate() const;
};

/// One row of an episode replay, laid out like the illustration tables:
/// day, price, delta, cash traded (signed), cost of that trade.
struct EpisodeRow {
    std::size_t day = 0;
    double price = 0.0;
    double delta = 0.0;
    double buy_sell = 0.0;
    double trading_cost = 0.0;
};

struct EpisodeBreakdown {
    std::vector<EpisodeRow> rows;
    double hedge_gain = 0.0;
    double total_cost = 0.0;
    double payoff = 0.0;
    double loss = 0.0; ///< hedge_gain - total_cost - payoff
    std::size_t trades = 0;
};

/// Termination loss of a short call hedged with `deltas` (one per day
/// 0..n-1) along `prices` (n+1 values). Negative means the issuer lost money.
double termination_loss(std::span<const double> prices, std::span<const double> deltas,
                        const ContractSpec& contract, const CostModel& cost);

/// Same accounting, with the per-day rows.
EpisodeBreakdown replay_episode(std::span<const double> prices, std::span<const double> deltas,
                                const ContractSpec& contract, const CostModel& cost);

/// d(termination_loss)/d(delta_t) for every day, using sign(0) = 0 for the
/// |delta_t - delta_{t-1}| cost kink.
void termination_loss_gradient(std::span<const double> prices, std::span<const double> deltas,
                               const ContractSpec& contract, const CostModel& cost,
                               std::span<double> grad);

void write_episode_csv(const EpisodeBreakdown& episode, const std::filesystem::path& file);

double entropy_risk(std::span<const double> losses, const RiskConfig& risk);

/// d(rho)/d(L_i) = -softmax(-lambda L)_i. Returns rho.
double entropy_risk_gradient(std::span<const double> losses, const RiskConfig& risk,
                             std::span<double> grad);

struct HedgeEpisodeResult {
    std::vector<double> losses;
    std::vector<std::size_t> trades;
    std::vector<double> costs;
};

struct LossSummary {
    double mean = 0.0;
    double std = 0.0;
    double avg_trades = 0.0;
    double avg_cost = 0.0;
    std::size_t n = 0;
};

/// Sample mean and (n-1) standard deviation.
LossSummary summarize(const HedgeEpisodeResult& result);

} // namespace ehf
