#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ehf/contract.hpp"
#include "ehf/market_sim.hpp"
#include "ehf/neural_core.hpp"

namespace ehf {

enum class Architecture : std::uint32_t { bsm = 0, dense = 1, gru = 2 };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct PolicyConfig {
    Architecture arch = Architecture::dense;
    bool change_feature = true;  ///< feed (S_t - S_{t-1}) / S_{t-1}
    bool label_feature = false;  ///< feed the classifier label of day t
    std::size_t window = 3;      ///< GRU price window; earlier days use the dense fallback
    std::size_t hidden_width = 32;
    std::size_t hidden_layers = 2;
    std::size_t gru_units = 10;
    std::size_t gru_layers = 2;
    double bsm_vol = 0.0;
    std::uint64_t init_seed = 0;

    void validate() const;
    /// log-moneyness, t/T, previous delta, [change], [label]
    std::size_t dense_inputs() const { return 3 + change_feature + label_feature; }
    /// window log prices, t/T, previous delta, [change], [label]
    std::size_t gru_inputs() const { return window + 2 + change_feature + label_feature; }
};

/// Divisors applied to the raw price features before they reach a network.
struct FeatureScaling {
    double log_moneyness = 1.0;
    double change = 1.0;
};

/// Standard deviations of log(S_t/S_0) and of daily relative changes over
/// all trading days of `paths`.
FeatureScaling fit_feature_scaling(const PathSet& paths);

/// One path as seen by a policy.
struct EpisodeView {
    std::span<const double> prices;        ///< n+1 prices
    std::span<const std::uint8_t> mask;    ///< n trade permissions
    std::span<const std::uint8_t> labels;  ///< n labels, or empty
};

class HedgePolicy {
public:
    virtual ~HedgePolicy() = default;
    virtual Architecture architecture() const = 0;
    /// Writes delta_0..delta_{n-1}. Masked-out days repeat the previous delta
    /// (0 before day 0).
    virtual void deltas(const EpisodeView& episode, std::span<double> out) const = 0;
};

class BsmPolicy final : public HedgePolicy {
public:
    BsmPolicy(ContractSpec contract, double vol);
    Architecture architecture() const override { return Architecture::bsm; }
    void deltas(const EpisodeView& episode, std::span<double> out) const override;
    double vol() const { return vol_; }

private:
    ContractSpec contract_;
    double vol_;
};

/// Intermediate values of one recorded episode, reused across calls.
struct EpisodeRecord {
    enum class StepKind : std::uint8_t { held, dense, gru };
    std::size_t n_steps = 0;
    std::vector<StepKind> kind;
    std::vector<std::uint8_t> active;
    std::vector<nn::MlpRecord> dense;                 ///< per step, dense or fallback net
    std::vector<std::vector<nn::GRUCache>> gru;      ///< [step][layer]
    std::vector<std::vector<double>> gru_top;        ///< [step] top-layer state fed to the output layer
    std::vector<double> gru_out;                     ///< [step] sigmoid output
    bool recorded() const { return n_steps > 0; }
};

/// Dense or GRU delta generator over a flat parameter vector.
class NeuralPolicy final : public HedgePolicy {
public:
    NeuralPolicy() = default;
    NeuralPolicy(const PolicyConfig& cfg, std::size_t n_steps, FeatureScaling scaling = {});

    Architecture architecture() const override { return cfg_.arch; }
    const PolicyConfig& config() const { return cfg_; }
    std::size_t n_steps() const { return n_steps_; }
    const FeatureScaling& scaling() const { return scaling_; }
    const nn::ParamLayout& layout() const { return layout_; }
    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }
    void set_parameters(std::span<const double> values);

    void deltas(const EpisodeView& episode, std::span<double> out) const override;

    void forward(const EpisodeView& episode, EpisodeRecord& record, std::span<double> out) const;
    void forward(std::span<const double> params, const EpisodeView& episode, EpisodeRecord& record,
                 std::span<double> out) const;

    /// Backpropagation through the recorded episode: `d_delta[t]` is
    /// dLoss/d(delta_t) holding the network fixed; partials are accumulated
    /// into `grad`. Throws StateError when `record` is empty.
    void backward(const EpisodeRecord& record, std::span<const double> d_delta, std::span<double> grad) const;
    void backward(std::span<const double> params, const EpisodeRecord& record, std::span<const double> d_delta,
                  std::span<double> grad) const;

    /// Output layer of the dense net (or the GRU head), for tests and diagnostics.
    const nn::DenseLayer& output_layer() const;

    bool operator==(const NeuralPolicy& other) const;

private:
    void build();
    void dense_features(const EpisodeView& ep, std::size_t t, double prev, std::span<double> x) const;
    void gru_features(const EpisodeView& ep, std::size_t t, double prev, std::span<double> x) const;

    PolicyConfig cfg_;
    std::size_t n_steps_ = 0;
    FeatureScaling scaling_;
    nn::ParamLayout layout_;
    nn::Mlp dense_;                    ///< main net (dense) or fallback (gru)
    std::vector<nn::GRUCell> cells_;
    nn::DenseLayer head_;
    std::vector<double> params_;
};

// Checkpoint (little-endian): "EHFM", u32 version, u32 architecture,
// u32 feature flags, u64 window, hidden_width, hidden_layers, gru_units,
// gru_layers, n_steps, u64 init_seed, f64 scaling x2, u64 n_params, f64 params.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_policy(const NeuralPolicy& policy, const std::filesystem::path& file);
NeuralPolicy load_policy(const std::filesystem::path& file);
/// Reads only the architecture tag of a checkpoint.
Architecture checkpoint_architecture(const std::filesystem::path& file);

} // namespace ehf
