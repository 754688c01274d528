#pragma once

#include <cstddef>

#include "ehf/market_sim.hpp"

namespace ehf {

/// European call with daily hedging dates 0..maturity_steps-1.
struct ContractSpec {
    double strike = 100.0;
    std::size_t maturity_steps = 30;
    double dt = 1.0 / kDaysPerYear; ///< year fraction per step, used for BS time-to-expiry

    void validate() const;
    double payoff(double terminal_price) const {
        return terminal_price > strike ? terminal_price - strike : 0.0;
    }
    double tau(std::size_t day) const { return static_cast<double>(maturity_steps - day) * dt; }
};

} // namespace ehf
