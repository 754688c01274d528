#include "ehf/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "ehf/errors.hpp"

namespace ehf {

namespace {

void check_episode_shape(std::span<const double> prices, std::span<const double> deltas,
                         const ContractSpec& contract) {
    if (deltas.size() != contract.maturity_steps) {
        throw ShapeError(fmt::format("expected {} deltas, got {}", contract.maturity_steps, deltas.size()));
    }
    if (prices.size() != deltas.size() + 1) {
        throw ShapeError(fmt::format("expected {} prices, got {}", deltas.size() + 1, prices.size()));
    }
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

} // namespace

void ContractSpec::validate() const {
    if (!(strike > 0.0)) throw ConfigError("strike must be > 0");
    if (maturity_steps < 1) throw ConfigError("maturity_steps must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("contract dt must be > 0");
}

void CostModel::validate() const {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw ConfigError("cost rate must be >= 0");
}

void RiskConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
}

double termination_loss(std::span<const double> prices, std::span<const double> deltas,
                        const ContractSpec& contract, const CostModel& cost) {
    check_episode_shape(prices, deltas, contract);
    const std::size_t n = deltas.size();
    double gain = 0.0;
    double costs = 0.0;
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        gain += deltas[t] * (prices[t + 1] - prices[t]);
        costs += cost.rate * std::abs(deltas[t] - prev) * prices[t];
        prev = deltas[t];
    }
    if (cost.charge_liquidation) costs += cost.rate * std::abs(prev) * prices[n];
    return gain - costs - contract.payoff(prices[n]);
}

EpisodeBreakdown replay_episode(std::span<const double> prices, std::span<const double> deltas,
                                const ContractSpec& contract, const CostModel& cost) {
    check_episode_shape(prices, deltas, contract);
    EpisodeBreakdown out;
    const std::size_t n = deltas.size();
    out.rows.reserve(n);
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        EpisodeRow row;
        row.day = t;
        row.price = prices[t];
        row.delta = deltas[t];
        row.buy_sell = (deltas[t] - prev) * prices[t];
        row.trading_cost = cost.rate * std::abs(row.buy_sell);
        if (deltas[t] != prev) ++out.trades;
        out.hedge_gain += deltas[t] * (prices[t + 1] - prices[t]);
        out.total_cost += row.trading_cost;
        out.rows.push_back(row);
        prev = deltas[t];
    }
    if (cost.charge_liquidation) out.total_cost += cost.rate * std::abs(prev) * prices[n];
    out.payoff = contract.payoff(prices[n]);
    out.loss = out.hedge_gain - out.total_cost - out.payoff;
    return out;
}

void termination_loss_gradient(std::span<const double> prices, std::span<const double> deltas,
                               const ContractSpec& contract, const CostModel& cost,
                               std::span<double> grad) {
    check_episode_shape(prices, deltas, contract);
    if (grad.size() != deltas.size()) throw ShapeError("gradient buffer has wrong length");
    const std::size_t n = deltas.size();
    for (std::size_t t = 0; t < n; ++t) {
        const double prev = t == 0 ? 0.0 : deltas[t - 1];
        double g = prices[t + 1] - prices[t];
        g -= cost.rate * prices[t] * sign(deltas[t] - prev);
        if (t + 1 < n) {
            g += cost.rate * prices[t + 1] * sign(deltas[t + 1] - deltas[t]);
        } else if (cost.charge_liquidation) {
            g -= cost.rate * prices[n] * sign(deltas[t]);
        }
        grad[t] = g;
    }
}

void write_episode_csv(const EpisodeBreakdown& episode, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << "day,price,delta,buy_sell,trading_cost\n";
    for (const auto& r : episode.rows) {
        out << fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f}\n", r.day, r.price, r.delta, r.buy_sell,
                           r.trading_cost);
    }
    if (!out) throw IoError("failed writing " + file.string());
}

namespace {

// (1/lambda) log mean exp(-lambda l), centred on the sample mean; small
// spreads go through expm1/log1p so the result keeps its precision as
// lambda -> 0. Writes the softmax weights when `weights` is non-empty.
double entropic(std::span<const double> losses, double lambda, std::span<double> weights) {
    const double n = static_cast<double>(losses.size());
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
    double top = 0.0;
    for (double l : losses) top = std::max(top, -lambda * (l - mean));
    double acc = 0.0;
    double log_mean_exp = 0.0;
    if (top <= 1.0) {
        for (double l : losses) acc += std::expm1(-lambda * (l - mean));
        log_mean_exp = std::log1p(acc / n);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = (1.0 + std::expm1(-lambda * (losses[i] - mean))) / (n + acc);
        }
    } else {
        for (double l : losses) acc += std::exp(-lambda * (l - mean) - top);
        log_mean_exp = top + std::log(acc / n);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = std::exp(-lambda * (losses[i] - mean) - top) / acc;
        }
    }
    return -mean + log_mean_exp / lambda;
}

} // namespace

double entropy_risk(std::span<const double> losses, const RiskConfig& risk) {
    if (losses.empty()) throw DomainError("entropy_risk of an empty sample");
    risk.validate();
    return entropic(losses, risk.lambda, {});
}

double entropy_risk_gradient(std::span<const double> losses, const RiskConfig& risk,
                             std::span<double> grad) {
    if (losses.empty()) throw DomainError("entropy_risk of an empty sample");
    if (grad.size() != losses.size()) throw ShapeError("gradient buffer has wrong length");
    risk.validate();
    const double rho = entropic(losses, risk.lambda, grad);
    for (double& g : grad) g = -g;
    return rho;
}

LossSummary summarize(const HedgeEpisodeResult& result) {
    LossSummary s;
    s.n = result.losses.size();
    if (s.n == 0) return s;
    const double n = static_cast<double>(s.n);
    s.mean = std::accumulate(result.losses.begin(), result.losses.end(), 0.0) / n;
    double ss = 0.0;
    for (double l : result.losses) ss += (l - s.mean) * (l - s.mean);
    s.std = s.n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    double trades = 0.0;
    for (auto k : result.trades) trades += static_cast<double>(k);
    s.avg_trades = trades / n;
    s.avg_cost = std::accumulate(result.costs.begin(), result.costs.end(), 0.0) / n;
    return s;
}

} // namespace ehf
