#include "ehf/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "ehf/errors.hpp"
#include "ehf/optim.hpp"
#include "ehf/parallel.hpp"

namespace ehf {

namespace {

void fill_mask_row(std::span<const double> prices, double alpha, std::span<const std::uint8_t> labels,
                   bool gate, std::span<std::uint8_t> out) {
    for (std::size_t t = 0; t < out.size(); ++t) {
        bool allowed = move_exceeds(prices, t, alpha);
        if (t > 0 && gate && !labels.empty()) allowed = allowed && labels[t] == 1;
        out[t] = allowed ? 1 : 0;
    }
}

std::span<const std::uint8_t> label_row(const MaskSource& masks, std::size_t row) {
    if (masks.labels == nullptr) return {};
    return masks.labels->row(row);
}

void check_labels(const MaskSource& masks, const PathSet& paths) {
    if (masks.labels != nullptr &&
        (masks.labels->n_paths() != paths.n_paths() || masks.labels->n_steps() != paths.n_steps())) {
        throw ShapeError("label matrix does not match training paths");
    }
}

double objective_rows(const PathSet& paths, std::size_t first, std::size_t count, const NeuralPolicy& policy,
                      const ContractSpec& contract, const CostModel& cost, const RiskConfig& risk,
                      const MaskSource& masks) {
    const std::size_t n = paths.n_steps();
    std::vector<double> losses(count), deltas(n);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t row = first + k;
        const auto prices = paths.prices(row);
        const auto labels = label_row(masks, row);
        fill_mask_row(prices, masks.alphas[k % masks.alphas.size()], labels, masks.gate_with_labels, mask);
        policy.deltas({prices, mask, labels}, deltas);
        losses[k] = termination_loss(prices, deltas, contract, cost);
    }
    return entropy_risk(losses, risk);
}

} // namespace

void MaskSource::validate() const {
    if (alphas.empty()) throw ConfigError("mask source needs at least one alpha");
    for (double a : alphas) {
        if (!(a >= 0.0)) throw DomainError("alpha must be >= 0");
    }
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in [0, 1)");
    }
}

double policy_objective(const PathSet& paths, const NeuralPolicy& policy, const ContractSpec& contract,
                        const CostModel& cost, const RiskConfig& risk, const MaskSource& masks) {
    masks.validate();
    check_labels(masks, paths);
    return objective_rows(paths, 0, paths.n_paths(), policy, contract, cost, risk, masks);
}

TrainResult train_policy(const PathSet& train_paths, const ContractSpec& contract, const CostModel& cost,
                         const RiskConfig& risk, const PolicyConfig& policy_cfg, const MaskSource& masks,
                         const TrainConfig& train_cfg, const std::function<void(const EpochLog&)>& on_epoch) {
    contract.validate();
    cost.validate();
    risk.validate();
    masks.validate();
    train_cfg.validate();
    check_labels(masks, train_paths);
    if (train_paths.n_steps() != contract.maturity_steps) {
        throw ShapeError("training paths do not match contract maturity");
    }
    const std::size_t n_total = train_paths.n_paths();
    std::size_t n_val = static_cast<std::size_t>(std::floor(train_cfg.validation_fraction * static_cast<double>(n_total)));
    if (train_cfg.validation_fraction > 0.0 && n_val == 0 && n_total >= 2) n_val = 1;
    const std::size_t n_fit = n_total - n_val;
    if (n_fit == 0) throw ConfigError("no training paths left after the validation split");

    const PathSet fit_paths = train_paths.slice(0, n_fit);
    TrainResult result{NeuralPolicy(policy_cfg, contract.maturity_steps, fit_feature_scaling(fit_paths)), {}, 0, 0.0};
    NeuralPolicy& policy = result.policy;

    auto validation = [&]() {
        if (n_val == 0) return objective_rows(train_paths, 0, n_fit, policy, contract, cost, risk, masks);
        return objective_rows(train_paths, n_fit, n_val, policy, contract, cost, risk, masks);
    };
    auto check_finite = [](double v, std::size_t epoch, const char* what) {
        if (!std::isfinite(v)) {
            throw NumericError(fmt::format("non-finite {} objective at epoch {}; lower the learning rate "
                                           "or check the path data", what, epoch));
        }
    };

    EpochLog initial{0, objective_rows(train_paths, 0, n_fit, policy, contract, cost, risk, masks), validation()};
    check_finite(initial.train_objective, 0, "training");
    check_finite(initial.validation_objective, 0, "validation");
    result.log.push_back(initial);
    if (on_epoch) on_epoch(initial);
    result.best_validation = initial.validation_objective;
    std::vector<double> best_params(policy.parameters().begin(), policy.parameters().end());

    const std::size_t n = contract.maturity_steps;
    const std::size_t batch = std::min(train_cfg.batch_size, n_fit);
    nn::AdamState adam(policy.parameters().size(), train_cfg.learning_rate, train_cfg.beta1, train_cfg.beta2,
                       train_cfg.epsilon);
    std::mt19937_64 engine(train_cfg.seed);
    std::uniform_int_distribution<std::size_t> pick_alpha(0, masks.alphas.size() - 1);
    std::vector<std::size_t> order(n_fit);
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpisodeRecord> records(batch);
    std::vector<std::uint8_t> mask_rows(batch * n);
    std::vector<double> delta_rows(batch * n);
    std::vector<double> losses(batch), weights(batch), d_delta(n);
    std::vector<double> grad(policy.parameters().size());

    for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), engine);
        double objective_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start + batch <= n_fit; start += batch) {
            for (std::size_t k = 0; k < batch; ++k) {
                const std::size_t row = order[start + k];
                const auto prices = train_paths.prices(row);
                const auto labels = label_row(masks, row);
                auto mask = std::span<std::uint8_t>(mask_rows).subspan(k * n, n);
                auto deltas = std::span<double>(delta_rows).subspan(k * n, n);
                fill_mask_row(prices, masks.alphas[pick_alpha(engine)], labels, masks.gate_with_labels, mask);
                policy.forward({prices, mask, labels}, records[k], deltas);
                losses[k] = termination_loss(prices, deltas, contract, cost);
            }
            const double rho = entropy_risk_gradient(losses, risk, weights);
            check_finite(rho, epoch, "training");
            std::ranges::fill(grad, 0.0);
            for (std::size_t k = 0; k < batch; ++k) {
                const std::size_t row = order[start + k];
                const auto prices = train_paths.prices(row);
                const auto deltas = std::span<const double>(delta_rows).subspan(k * n, n);
                termination_loss_gradient(prices, deltas, contract, cost, d_delta);
                for (double& g : d_delta) g *= weights[k];
                policy.backward(records[k], d_delta, grad);
            }
            nn::adam_step(policy.parameters(), grad, adam);
            objective_sum += rho;
            ++n_batches;
        }
        EpochLog log{epoch, objective_sum / static_cast<double>(std::max<std::size_t>(n_batches, 1)), validation()};
        check_finite(log.validation_objective, epoch, "validation");
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
        if (log.validation_objective < result.best_validation) {
            result.best_validation = log.validation_objective;
            result.best_epoch = epoch;
            std::ranges::copy(policy.parameters(), best_params.begin());
        }
    }
    policy.set_parameters(best_params);
    return result;
}

nn::LossFunction episode_objective(const PathSet& paths, const NeuralPolicy& policy, const ContractSpec& contract,
                                   const CostModel& cost, const RiskConfig& risk, const MaskSource& masks) {
    masks.validate();
    check_labels(masks, paths);
    return [&paths, &policy, contract, cost, risk, masks](std::span<const double> params, std::span<double> grad) {
        const std::size_t n = paths.n_steps();
        const std::size_t count = paths.n_paths();
        std::vector<EpisodeRecord> records(count);
        std::vector<double> deltas(count * n), losses(count), weights(count), d_delta(n);
        std::vector<std::uint8_t> mask(n);
        for (std::size_t k = 0; k < count; ++k) {
            const auto prices = paths.prices(k);
            const auto labels = label_row(masks, k);
            auto row = std::span<double>(deltas).subspan(k * n, n);
            fill_mask_row(prices, masks.alphas[k % masks.alphas.size()], labels, masks.gate_with_labels, mask);
            policy.forward(params, {prices, mask, labels}, records[k], row);
            losses[k] = termination_loss(prices, row, contract, cost);
        }
        if (grad.empty()) return entropy_risk(losses, risk);
        const double rho = entropy_risk_gradient(losses, risk, weights);
        for (std::size_t k = 0; k < count; ++k) {
            termination_loss_gradient(paths.prices(k), std::span<const double>(deltas).subspan(k * n, n), contract,
                                      cost, d_delta);
            for (double& g : d_delta) g *= weights[k];
            policy.backward(params, records[k], d_delta, grad);
        }
        return rho;
    };
}

EvaluationResult evaluate_policy(const PathSet& paths, const HedgePolicy& policy, const TradeMask& mask,
                                 const ContractSpec& contract, const CostModel& cost, const LabelMatrix* labels,
                                 unsigned jobs) {
    contract.validate();
    cost.validate();
    if (paths.n_steps() != contract.maturity_steps) throw ShapeError("paths do not match contract maturity");
    if (mask.n_paths() != paths.n_paths() || mask.n_steps() != paths.n_steps()) {
        throw ShapeError("mask shape does not match path set");
    }
    if (labels != nullptr && (labels->n_paths() != paths.n_paths() || labels->n_steps() != paths.n_steps())) {
        throw ShapeError("label matrix does not match path set");
    }
    EvaluationResult out;
    auto& ep = out.episodes;
    ep.losses.resize(paths.n_paths());
    ep.trades.resize(paths.n_paths());
    ep.costs.resize(paths.n_paths());
    parallel_for(paths.n_paths(), jobs, [&](std::size_t i) {
        std::vector<double> deltas(paths.n_steps());
        const auto prices = paths.prices(i);
        const auto label_span = labels ? labels->row(i) : std::span<const std::uint8_t>{};
        policy.deltas({prices, mask.row(i), label_span}, deltas);
        const auto replay = replay_episode(prices, deltas, contract, cost);
        if (!std::isfinite(replay.loss)) throw NumericError(fmt::format("non-finite loss on path {}", i));
        ep.losses[i] = replay.loss;
        ep.trades[i] = replay.trades;
        ep.costs[i] = replay.total_cost;
    });
    out.summary = summarize(ep);
    return out;
}

} // namespace ehf
