#include "ehf/analytics_bsm.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "ehf/errors.hpp"

namespace ehf {

namespace {

void check_inputs(double spot, double strike, double vol, double tau) {
    if (!(spot > 0.0)) throw DomainError("spot must be > 0");
    if (!(strike > 0.0)) throw DomainError("strike must be > 0");
    if (!(vol >= 0.0)) throw DomainError("vol must be >= 0");
    if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
}

} // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double bs_call_price(double spot, double strike, double rate, double vol, double tau) {
    check_inputs(spot, strike, vol, tau);
    const double discounted_strike = strike * std::exp(-rate * tau);
    const double stdev = vol * std::sqrt(tau);
    if (stdev == 0.0) return std::max(spot - discounted_strike, 0.0);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * tau) / stdev;
    const double d2 = d1 - stdev;
    return spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2);
}

double bs_delta(double spot, double strike, double rate, double vol, double tau) {
    check_inputs(spot, strike, vol, tau);
    if (tau <= 0.0) throw DomainError("delta is undefined at expiry");
    const double stdev = vol * std::sqrt(tau);
    if (stdev == 0.0) {
        const double forward_moneyness = spot - strike * std::exp(-rate * tau);
        return forward_moneyness > 0.0 ? 1.0 : (forward_moneyness < 0.0 ? 0.0 : 0.5);
    }
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * tau) / stdev;
    return norm_cdf(d1);
}

HedgeEpisodeResult bsm_hedge_baseline(const PathSet& paths, const TradeMask& mask,
                                      const ContractSpec& contract, const CostModel& cost, double vol) {
    contract.validate();
    cost.validate();
    if (paths.n_steps() != contract.maturity_steps) throw ShapeError("path length does not match contract maturity");
    if (mask.n_paths() != paths.n_paths() || mask.n_steps() != paths.n_steps()) {
        throw ShapeError("mask shape does not match path set");
    }
    HedgeEpisodeResult out;
    out.losses.resize(paths.n_paths());
    out.trades.resize(paths.n_paths());
    out.costs.resize(paths.n_paths());
    std::vector<double> deltas(paths.n_steps());
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto prices = paths.prices(i);
        double held = 0.0;
        for (std::size_t t = 0; t < paths.n_steps(); ++t) {
            if (mask.allowed(i, t)) held = bs_delta(prices[t], contract.strike, 0.0, vol, contract.tau(t));
            deltas[t] = held;
        }
        const auto episode = replay_episode(prices, deltas, contract, cost);
        out.losses[i] = episode.loss;
        out.trades[i] = episode.trades;
        out.costs[i] = episode.total_cost;
    }
    return out;
}

} // namespace ehf
