#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ehf/market_sim.hpp"
#include "ehf/signal_forest.hpp"

namespace ehf {

/// Per-path, per-day permission to rebalance. Day 0 is always allowed.
class TradeMask {
public:
    TradeMask() = default;
    TradeMask(std::size_t n_paths, std::size_t n_steps, bool fill = true);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_steps() const { return n_steps_; }
    bool allowed(std::size_t path, std::size_t day) const { return data_[path * n_steps_ + day] != 0; }
    void set(std::size_t path, std::size_t day, bool v) { data_[path * n_steps_ + day] = v ? 1 : 0; }
    std::span<const std::uint8_t> row(std::size_t path) const {
        return std::span<const std::uint8_t>(data_).subspan(path * n_steps_, n_steps_);
    }
    std::size_t count() const;

    bool operator==(const TradeMask&) const = default;

private:
    std::size_t n_paths_ = 0;
    std::size_t n_steps_ = 0;
    std::vector<std::uint8_t> data_;
};

/// True on day t when t == 0 or |S_t/S_{t-1} - 1| > alpha.
inline bool move_exceeds(std::span<const double> prices, std::size_t day, double alpha) {
    if (day == 0) return true;
    const double change = prices[day] / prices[day - 1] - 1.0;
    return (change > alpha) || (-change > alpha);
}

TradeMask compute_trade_mask(const PathSet& paths, double alpha);

/// Threshold mask AND label == 1; day 0 stays allowed.
TradeMask combine_mask(const TradeMask& threshold_mask, const LabelMatrix& labels);

/// Average number of days t in 1..n_steps with |S_t/S_{t-1} - 1| > alpha,
/// i.e. the number of significant daily moves over the contract life.
double trade_frequency(const PathSet& paths, double alpha);

} // namespace ehf
