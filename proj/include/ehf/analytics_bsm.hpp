#pragma once

#include "ehf/contract.hpp"
#include "ehf/hedging.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/trade_mask.hpp"

namespace ehf {

/// Standard normal CDF via erfc.
double norm_cdf(double x);

/// Black-Scholes-Merton European call value. tau = 0 gives intrinsic value.
double bs_call_price(double spot, double strike, double rate, double vol, double tau);

/// N(d1). Throws DomainError for tau <= 0.
double bs_delta(double spot, double strike, double rate, double vol, double tau);

/// Constant-vol delta hedge: rebalances to bs_delta on allowed days, holds
/// otherwise. Uses zero rate (no financing leg in the loss accounting).
HedgeEpisodeResult bsm_hedge_baseline(const PathSet& paths, const TradeMask& mask,
                                      const ContractSpec& contract, const CostModel& cost, double vol);

} // namespace ehf
