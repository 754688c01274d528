#include "ehf/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "ehf/analytics_bsm.hpp"
#include "ehf/errors.hpp"

namespace ehf {

std::string_view to_string(Architecture arch) {
    switch (arch) {
    case Architecture::bsm: return "bsm";
    case Architecture::dense: return "dense";
    case Architecture::gru: return "gru";
    }
    return "unknown";
}

Architecture parse_architecture(std::string_view name) {
    if (name == "bsm") return Architecture::bsm;
    if (name == "dense") return Architecture::dense;
    if (name == "gru") return Architecture::gru;
    throw ConfigError(fmt::format("unknown architecture '{}'", name));
}

void PolicyConfig::validate() const {
    if (window < 1) throw ConfigError("window must be >= 1");
    if (arch == Architecture::bsm) {
        if (!(bsm_vol >= 0.0)) throw ConfigError("bsm_vol must be >= 0");
        return;
    }
    if (hidden_width < 1 || hidden_layers < 1) throw ConfigError("dense network needs width and depth >= 1");
    if (arch == Architecture::gru && (gru_units < 1 || gru_layers < 1)) {
        throw ConfigError("gru network needs units and layers >= 1");
    }
}

FeatureScaling fit_feature_scaling(const PathSet& paths) {
    double s_lm = 0.0, ss_lm = 0.0, s_ch = 0.0, ss_ch = 0.0;
    std::size_t n_lm = 0, n_ch = 0;
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto p = paths.prices(i);
        for (std::size_t t = 0; t < paths.n_steps(); ++t) {
            const double lm = std::log(p[t] / p[0]);
            s_lm += lm;
            ss_lm += lm * lm;
            ++n_lm;
            if (t > 0) {
                const double ch = p[t] / p[t - 1] - 1.0;
                s_ch += ch;
                ss_ch += ch * ch;
                ++n_ch;
            }
        }
    }
    auto stdev = [](double s, double ss, std::size_t n) {
        if (n < 2) return 1.0;
        const double mean = s / static_cast<double>(n);
        const double var = ss / static_cast<double>(n) - mean * mean;
        return var > 1e-24 ? std::sqrt(var) : 1.0;
    };
    return {stdev(s_lm, ss_lm, n_lm), stdev(s_ch, ss_ch, n_ch)};
}

BsmPolicy::BsmPolicy(ContractSpec contract, double vol) : contract_(contract), vol_(vol) {
    contract_.validate();
    if (!(vol >= 0.0)) throw ConfigError("bsm vol must be >= 0");
}

void BsmPolicy::deltas(const EpisodeView& episode, std::span<double> out) const {
    const std::size_t n = out.size();
    if (episode.prices.size() != n + 1 || episode.mask.size() != n || n != contract_.maturity_steps) {
        throw ShapeError("episode shape does not match contract");
    }
    double held = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (t == 0 || episode.mask[t]) {
            held = bs_delta(episode.prices[t], contract_.strike, 0.0, vol_, contract_.tau(t));
        }
        out[t] = held;
    }
}

NeuralPolicy::NeuralPolicy(const PolicyConfig& cfg, std::size_t n_steps, FeatureScaling scaling)
    : cfg_(cfg), n_steps_(n_steps), scaling_(scaling) {
    cfg_.validate();
    if (cfg_.arch == Architecture::bsm) throw ConfigError("NeuralPolicy needs a dense or gru architecture");
    if (n_steps_ < 1) throw ConfigError("n_steps must be >= 1");
    build();
    std::mt19937_64 engine(cfg_.init_seed);
    dense_.init(params_, engine);
    for (const auto& c : cells_) nn::init_gru(c, params_, engine);
    if (cfg_.arch == Architecture::gru) nn::init_dense(head_, params_, engine);
}

void NeuralPolicy::build() {
    layout_ = nn::ParamLayout{};
    std::vector<std::size_t> widths{cfg_.dense_inputs()};
    for (std::size_t k = 0; k < cfg_.hidden_layers; ++k) widths.push_back(cfg_.hidden_width);
    widths.push_back(1);
    dense_ = nn::Mlp(layout_, cfg_.arch == Architecture::gru ? "fallback" : "dense", widths, nn::Activation::relu,
                     nn::Activation::sigmoid);
    cells_.clear();
    if (cfg_.arch == Architecture::gru) {
        std::size_t in = cfg_.gru_inputs();
        for (std::size_t l = 0; l < cfg_.gru_layers; ++l) {
            cells_.push_back(nn::GRUCell::allocate(layout_, fmt::format("gru.{}", l), in, cfg_.gru_units));
            in = cfg_.gru_units;
        }
        head_ = nn::DenseLayer::allocate(layout_, "head", cfg_.gru_units, 1, nn::Activation::sigmoid);
    }
    params_.assign(layout_.size(), 0.0);
}

void NeuralPolicy::set_parameters(std::span<const double> values) {
    if (values.size() != params_.size()) throw ShapeError("parameter vector has wrong length");
    std::ranges::copy(values, params_.begin());
}

const nn::DenseLayer& NeuralPolicy::output_layer() const {
    return cfg_.arch == Architecture::gru ? head_ : dense_.layers().back();
}

bool NeuralPolicy::operator==(const NeuralPolicy& o) const {
    const auto& a = cfg_;
    const auto& b = o.cfg_;
    return a.arch == b.arch && a.change_feature == b.change_feature && a.label_feature == b.label_feature &&
           a.window == b.window && a.hidden_width == b.hidden_width && a.hidden_layers == b.hidden_layers &&
           a.gru_units == b.gru_units && a.gru_layers == b.gru_layers && a.init_seed == b.init_seed &&
           n_steps_ == o.n_steps_ && scaling_.log_moneyness == o.scaling_.log_moneyness &&
           scaling_.change == o.scaling_.change && params_ == o.params_;
}

void NeuralPolicy::dense_features(const EpisodeView& ep, std::size_t t, double prev, std::span<double> x) const {
    const auto& p = ep.prices;
    std::size_t k = 0;
    x[k++] = std::log(p[t] / p[0]) / scaling_.log_moneyness;
    x[k++] = static_cast<double>(t) / static_cast<double>(n_steps_);
    x[k++] = prev;
    if (cfg_.change_feature) x[k++] = t == 0 ? 0.0 : (p[t] / p[t - 1] - 1.0) / scaling_.change;
    if (cfg_.label_feature) x[k++] = ep.labels.empty() ? 1.0 : static_cast<double>(ep.labels[t]);
}

void NeuralPolicy::gru_features(const EpisodeView& ep, std::size_t t, double prev, std::span<double> x) const {
    const auto& p = ep.prices;
    std::size_t k = 0;
    for (std::size_t lag = 0; lag < cfg_.window; ++lag) x[k++] = std::log(p[t - lag] / p[0]) / scaling_.log_moneyness;
    x[k++] = static_cast<double>(t) / static_cast<double>(n_steps_);
    x[k++] = prev;
    if (cfg_.change_feature) x[k++] = t == 0 ? 0.0 : (p[t] / p[t - 1] - 1.0) / scaling_.change;
    if (cfg_.label_feature) x[k++] = ep.labels.empty() ? 1.0 : static_cast<double>(ep.labels[t]);
}

void NeuralPolicy::deltas(const EpisodeView& episode, std::span<double> out) const {
    thread_local EpisodeRecord record;
    forward(params_, episode, record, out);
}

void NeuralPolicy::forward(const EpisodeView& episode, EpisodeRecord& record, std::span<double> out) const {
    forward(params_, episode, record, out);
}

void NeuralPolicy::forward(std::span<const double> params, const EpisodeView& ep, EpisodeRecord& record,
                           std::span<double> out) const {
    const std::size_t n = n_steps_;
    if (params.size() != params_.size()) throw ShapeError("parameter vector has wrong length");
    if (ep.prices.size() != n + 1 || out.size() != n || ep.mask.size() != n) {
        throw ShapeError(fmt::format("episode shape mismatch: policy expects {} steps", n));
    }
    if (cfg_.label_feature && !ep.labels.empty() && ep.labels.size() != n) {
        throw ShapeError("label row has wrong length");
    }
    const bool recurrent = cfg_.arch == Architecture::gru;
    const std::size_t layers = cells_.size();
    record.n_steps = n;
    record.kind.assign(n, EpisodeRecord::StepKind::held);
    record.active.assign(n, 0);
    record.dense.resize(n);
    if (recurrent) {
        record.gru.resize(n);
        record.gru_top.resize(n);
        record.gru_out.assign(n, 0.0);
    }

    std::vector<double> x(std::max(cfg_.dense_inputs(), cfg_.gru_inputs()));
    std::vector<std::vector<double>> h(layers, std::vector<double>(cfg_.gru_units, 0.0));
    std::vector<double> h_new(cfg_.gru_units);
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const bool active = t == 0 || ep.mask[t] != 0;
        record.active[t] = active;
        double delta = prev;
        if (recurrent && t + 1 >= cfg_.window) {
            record.kind[t] = EpisodeRecord::StepKind::gru;
            auto input = std::span<double>(x).first(cfg_.gru_inputs());
            gru_features(ep, t, prev, input);
            record.gru[t].resize(layers);
            std::span<const double> layer_in = input;
            for (std::size_t l = 0; l < layers; ++l) {
                nn::gru_forward(cells_[l], params, layer_in, h[l], h_new, &record.gru[t][l]);
                h[l].swap(h_new);
                layer_in = h[l];
            }
            record.gru_top[t] = h[layers - 1];
            double y = 0.0;
            nn::dense_forward(head_, params, record.gru_top[t], std::span<double>(&y, 1));
            record.gru_out[t] = y;
            if (active) delta = y;
        } else if (active) {
            record.kind[t] = EpisodeRecord::StepKind::dense;
            auto input = std::span<double>(x).first(cfg_.dense_inputs());
            dense_features(ep, t, prev, input);
            dense_.forward(params, input, record.dense[t]);
            delta = record.dense[t].values.back()[0];
        }
        out[t] = delta;
        prev = delta;
    }
}

void NeuralPolicy::backward(const EpisodeRecord& record, std::span<const double> d_delta,
                            std::span<double> grad) const {
    backward(params_, record, d_delta, grad);
}

void NeuralPolicy::backward(std::span<const double> params, const EpisodeRecord& record,
                            std::span<const double> d_delta, std::span<double> grad) const {
    if (!record.recorded()) throw StateError("backward called without a recorded episode");
    const std::size_t n = record.n_steps;
    if (d_delta.size() != n) throw ShapeError("upstream gradient has wrong length");
    if (grad.size() != params_.size()) throw ShapeError("gradient buffer has wrong length");

    const std::size_t layers = cells_.size();
    const std::size_t units = cfg_.gru_units;
    const std::size_t dense_prev_idx = 2;
    const std::size_t gru_prev_idx = cfg_.window + 1;

    std::vector<double> adj(d_delta.begin(), d_delta.end());
    std::vector<std::vector<double>> carry(layers, std::vector<double>(units, 0.0));
    std::vector<double> dh(units), dh_prev(units), dx_layer(std::max(units, cfg_.gru_inputs()));

    for (std::size_t t = n; t-- > 0;) {
        const double a = adj[t];
        const auto kind = record.kind[t];
        const bool active = record.active[t] != 0;
        if (!active && t > 0) adj[t - 1] += a;

        if (kind == EpisodeRecord::StepKind::dense) {
            const double upstream = a;
            const auto dx = dense_.backward(params, record.dense[t], std::span<const double>(&upstream, 1), grad);
            if (t > 0) adj[t - 1] += dx[dense_prev_idx];
        } else if (kind == EpisodeRecord::StepKind::gru) {
            std::ranges::fill(dh, 0.0);
            if (active && a != 0.0) {
                const double y = record.gru_out[t];
                const double upstream = a;
                nn::dense_backward(head_, params, record.gru_top[t], std::span<const double>(&y, 1),
                                   std::span<const double>(&upstream, 1), grad, dh);
            }
            for (std::size_t k = 0; k < units; ++k) dh[k] += carry[layers - 1][k];
            for (std::size_t l = layers; l-- > 0;) {
                auto dx = std::span<double>(dx_layer).first(cells_[l].input);
                nn::gru_backward(cells_[l], params, record.gru[t][l], dh, grad, dx, dh_prev);
                carry[l] = dh_prev;
                if (l > 0) {
                    for (std::size_t k = 0; k < units; ++k) dh[k] = carry[l - 1][k] + dx[k];
                } else if (t > 0) {
                    adj[t - 1] += dx[gru_prev_idx];
                }
            }
        }
    }
}

void save_policy(const NeuralPolicy& policy, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    const auto& cfg = policy.config();
    detail::put_magic(out, "EHFM");
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.arch));
    detail::put_u32(out, (cfg.change_feature ? 1u : 0u) | (cfg.label_feature ? 2u : 0u));
    for (std::uint64_t v : {cfg.window, cfg.hidden_width, cfg.hidden_layers, cfg.gru_units, cfg.gru_layers,
                            policy.n_steps()}) {
        detail::put_u64(out, v);
    }
    detail::put_u64(out, cfg.init_seed);
    detail::put_f64(out, policy.scaling().log_moneyness);
    detail::put_f64(out, policy.scaling().change);
    detail::put_u64(out, policy.parameters().size());
    for (double p : policy.parameters()) detail::put_f64(out, p);
    if (!out) throw IoError("failed writing " + file.string());
}

namespace {

Architecture read_architecture(std::istream& in) {
    detail::expect_magic(in, "EHFM", "checkpoint");
    const auto version = detail::get_u32(in);
    if (version != kCheckpointVersion) throw IoError(fmt::format("unsupported checkpoint version {}", version));
    const auto tag = detail::get_u32(in);
    if (tag != 1 && tag != 2) throw IoError(fmt::format("checkpoint has invalid architecture tag {}", tag));
    return static_cast<Architecture>(tag);
}

} // namespace

Architecture checkpoint_architecture(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    return read_architecture(in);
}

NeuralPolicy load_policy(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    PolicyConfig cfg;
    cfg.arch = read_architecture(in);
    const auto flags = detail::get_u32(in);
    cfg.change_feature = flags & 1u;
    cfg.label_feature = flags & 2u;
    cfg.window = detail::get_u64(in);
    cfg.hidden_width = detail::get_u64(in);
    cfg.hidden_layers = detail::get_u64(in);
    cfg.gru_units = detail::get_u64(in);
    cfg.gru_layers = detail::get_u64(in);
    const auto n_steps = detail::get_u64(in);
    cfg.init_seed = detail::get_u64(in);
    FeatureScaling scaling;
    scaling.log_moneyness = detail::get_f64(in);
    scaling.change = detail::get_f64(in);
    const auto n_params = detail::get_u64(in);
    for (std::uint64_t v : {cfg.window, cfg.hidden_width, cfg.hidden_layers, cfg.gru_units, cfg.gru_layers, n_steps}) {
        if (v == 0 || v > 4096) throw IoError("corrupt checkpoint shape field");
    }
    NeuralPolicy policy(cfg, n_steps, scaling);
    if (n_params != policy.parameters().size()) throw IoError("checkpoint parameter count does not match shapes");
    std::vector<double> params(n_params);
    for (double& p : params) p = detail::get_f64(in);
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint");
    policy.set_parameters(params);
    return policy;
}

} // namespace ehf
