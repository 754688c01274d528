#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "ehf/contract.hpp"
#include "ehf/grad_check.hpp"
#include "ehf/hedging.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/policy.hpp"
#include "ehf/signal_forest.hpp"
#include "ehf/trade_mask.hpp"

namespace ehf {

/// Where trade masks come from during training. Each training path gets an
/// alpha drawn from `alphas` per mini-batch (validation paths use a fixed
/// round-robin assignment). With `labels`, days labeled 0 are also gated off.
struct MaskSource {
    std::vector<double> alphas{0.0};
    const LabelMatrix* labels = nullptr;
    bool gate_with_labels = true;

    void validate() const;
};

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 500;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;           ///< 0 = before the first update
    double train_objective = 0.0;    ///< mean mini-batch entropic risk over the epoch
    double validation_objective = 0.0;
};

struct TrainResult {
    NeuralPolicy policy;             ///< parameters with the best validation objective
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_validation = 0.0;
};

/// Minimises the entropic risk of termination losses by Adam over
/// mini-batches. Deterministic given policy_cfg.init_seed and train_cfg.seed.
/// Throws NumericError on a non-finite objective.
TrainResult train_policy(const PathSet& train_paths, const ContractSpec& contract, const CostModel& cost,
                         const RiskConfig& risk, const PolicyConfig& policy_cfg, const MaskSource& masks,
                         const TrainConfig& train_cfg,
                         const std::function<void(const EpochLog&)>& on_epoch = {});

struct EvaluationResult {
    HedgeEpisodeResult episodes;
    LossSummary summary;
};

/// Runs `policy` on every path under `mask`; pure, parallel across paths.
/// `labels` feed the label feature when the policy uses it.
EvaluationResult evaluate_policy(const PathSet& paths, const HedgePolicy& policy, const TradeMask& mask,
                                 const ContractSpec& contract, const CostModel& cost,
                                 const LabelMatrix* labels = nullptr, unsigned jobs = 1);

/// Entropic risk of `policy` on `paths`, each path i masked with
/// alphas[i % alphas.size()] (and labels, if given).
double policy_objective(const PathSet& paths, const NeuralPolicy& policy, const ContractSpec& contract,
                        const CostModel& cost, const RiskConfig& risk, const MaskSource& masks);

/// The objective above as a function of an explicit parameter vector, with
/// the analytic gradient by backpropagation through every episode. Keeps
/// references to `paths`, `policy` and any label matrix.
nn::LossFunction episode_objective(const PathSet& paths, const NeuralPolicy& policy, const ContractSpec& contract,
                                   const CostModel& cost, const RiskConfig& risk, const MaskSource& masks);

} // namespace ehf
