#include "ehf/trade_mask.hpp"

#include <numeric>

#include "ehf/errors.hpp"

namespace ehf {

TradeMask::TradeMask(std::size_t n_paths, std::size_t n_steps, bool fill)
    : n_paths_(n_paths), n_steps_(n_steps), data_(n_paths * n_steps, fill ? 1 : 0) {
    for (std::size_t i = 0; i < n_paths_ && n_steps_ > 0; ++i) data_[i * n_steps_] = 1;
}

std::size_t TradeMask::count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

TradeMask compute_trade_mask(const PathSet& paths, double alpha) {
    if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
    TradeMask mask(paths.n_paths(), paths.n_steps(), false);
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto prices = paths.prices(i);
        for (std::size_t t = 1; t < paths.n_steps(); ++t) mask.set(i, t, move_exceeds(prices, t, alpha));
    }
    return mask;
}

TradeMask combine_mask(const TradeMask& threshold_mask, const LabelMatrix& labels) {
    if (threshold_mask.n_paths() != labels.n_paths() || threshold_mask.n_steps() != labels.n_steps()) {
        throw ShapeError("mask and label matrix shapes differ");
    }
    TradeMask out(threshold_mask.n_paths(), threshold_mask.n_steps(), false);
    for (std::size_t i = 0; i < out.n_paths(); ++i) {
        for (std::size_t t = 1; t < out.n_steps(); ++t) {
            out.set(i, t, threshold_mask.allowed(i, t) && labels.at(i, t) == 1);
        }
    }
    return out;
}

double trade_frequency(const PathSet& paths, double alpha) {
    if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
    std::size_t moves = 0;
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto prices = paths.prices(i);
        for (std::size_t t = 1; t <= paths.n_steps(); ++t) moves += move_exceeds(prices, t, alpha);
    }
    return static_cast<double>(moves) / static_cast<double>(paths.n_paths());
}

} // namespace ehf
