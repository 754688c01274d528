#include "ehf/neural_core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ehf/errors.hpp"

namespace ehf::nn {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) throw ShapeError(fmt::format("{}: expected length {}, got {}", what, want, got));
}

// y = W x + b for row-major W [out x in]
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> y) {
    const std::size_t in = x.size();
    for (std::size_t o = 0; o < y.size(); ++o) {
        const double* row = w.data() + o * in;
        double acc = b[o];
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

// grad_w += d (outer) x, grad_b += d, dx += W^T d
void affine_backward(std::span<const double> w, std::span<const double> x, std::span<const double> d,
                     std::span<double> grad_w, std::span<double> grad_b, std::span<double> dx) {
    const std::size_t in = x.size();
    for (std::size_t o = 0; o < d.size(); ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        grad_b[o] += g;
        double* gw = grad_w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) gw[i] += g * x[i];
        if (!dx.empty()) {
            const double* row = w.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) dx[i] += g * row[i];
        }
    }
}

void init_uniform(std::span<double> w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& engine) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : w) v = dist(engine);
}

} // namespace

double activate(Activation act, double x) {
    switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return sigmoid(x);
    }
    return x;
}

double activation_slope(Activation act, double y) {
    switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

std::size_t ParamLayout::add(std::string name, std::size_t rows, std::size_t cols) {
    const std::size_t offset = size_;
    blocks_.push_back({std::move(name), offset, rows, cols});
    size_ += rows * cols;
    return offset;
}

DenseLayer DenseLayer::allocate(ParamLayout& layout, const std::string& name, std::size_t in,
                                std::size_t out, Activation act) {
    DenseLayer layer;
    layer.in = in;
    layer.out = out;
    layer.act = act;
    layer.weight_offset = layout.add(name + ".W", out, in);
    layer.bias_offset = layout.add(name + ".b", out, 1);
    return layer;
}

void dense_forward(const DenseLayer& layer, std::span<const double> params, std::span<const double> x,
                   std::span<double> y) {
    check_size(x.size(), layer.in, "dense input");
    check_size(y.size(), layer.out, "dense output");
    affine(params.subspan(layer.weight_offset, layer.in * layer.out), params.subspan(layer.bias_offset, layer.out),
           x, y);
    if (layer.act != Activation::identity) {
        for (double& v : y) v = activate(layer.act, v);
    }
}

void dense_backward(const DenseLayer& layer, std::span<const double> params, std::span<const double> x,
                    std::span<const double> y, std::span<const double> dy, std::span<double> grad,
                    std::span<double> dx) {
    check_size(x.size(), layer.in, "dense input");
    check_size(y.size(), layer.out, "dense output");
    check_size(dy.size(), layer.out, "dense upstream");
    if (!dx.empty()) {
        check_size(dx.size(), layer.in, "dense input gradient");
        std::ranges::fill(dx, 0.0);
    }
    double pre_buf[64];
    std::vector<double> pre_heap;
    std::span<double> pre;
    if (layer.out <= 64) {
        pre = std::span<double>(pre_buf, layer.out);
    } else {
        pre_heap.resize(layer.out);
        pre = pre_heap;
    }
    for (std::size_t o = 0; o < layer.out; ++o) pre[o] = dy[o] * activation_slope(layer.act, y[o]);
    affine_backward(params.subspan(layer.weight_offset, layer.in * layer.out), x, pre,
                    grad.subspan(layer.weight_offset, layer.in * layer.out),
                    grad.subspan(layer.bias_offset, layer.out), dx);
}

GRUCell GRUCell::allocate(ParamLayout& layout, const std::string& name, std::size_t input, std::size_t hidden) {
    GRUCell cell;
    cell.input = input;
    cell.hidden = hidden;
    const std::size_t cols = input + hidden;
    cell.wz = layout.add(name + ".Wz", hidden, cols);
    cell.bz = layout.add(name + ".bz", hidden, 1);
    cell.wr = layout.add(name + ".Wr", hidden, cols);
    cell.br = layout.add(name + ".br", hidden, 1);
    cell.wh = layout.add(name + ".Wh", hidden, cols);
    cell.bh = layout.add(name + ".bh", hidden, 1);
    return cell;
}

void GRUCache::resize(const GRUCell& cell) {
    xh.resize(cell.input + cell.hidden);
    xrh.resize(cell.input + cell.hidden);
    z.resize(cell.hidden);
    r.resize(cell.hidden);
    c.resize(cell.hidden);
}

void gru_forward(const GRUCell& cell, std::span<const double> params, std::span<const double> x,
                 std::span<const double> h, std::span<double> h_out, GRUCache* cache) {
    check_size(x.size(), cell.input, "gru input");
    check_size(h.size(), cell.hidden, "gru state");
    check_size(h_out.size(), cell.hidden, "gru output");
    GRUCache local;
    GRUCache& c = cache ? *cache : local;
    c.resize(cell);
    const std::size_t in = cell.input, hid = cell.hidden, cols = in + hid;
    std::copy(x.begin(), x.end(), c.xh.begin());
    std::copy(h.begin(), h.end(), c.xh.begin() + static_cast<std::ptrdiff_t>(in));

    affine(params.subspan(cell.wz, hid * cols), params.subspan(cell.bz, hid), c.xh, c.z);
    affine(params.subspan(cell.wr, hid * cols), params.subspan(cell.br, hid), c.xh, c.r);
    for (std::size_t k = 0; k < hid; ++k) {
        c.z[k] = sigmoid(c.z[k]);
        c.r[k] = sigmoid(c.r[k]);
    }
    std::copy(x.begin(), x.end(), c.xrh.begin());
    for (std::size_t k = 0; k < hid; ++k) c.xrh[in + k] = c.r[k] * h[k];
    affine(params.subspan(cell.wh, hid * cols), params.subspan(cell.bh, hid), c.xrh, c.c);
    for (std::size_t k = 0; k < hid; ++k) {
        c.c[k] = std::tanh(c.c[k]);
        h_out[k] = (1.0 - c.z[k]) * h[k] + c.z[k] * c.c[k];
    }
}

void gru_backward(const GRUCell& cell, std::span<const double> params, const GRUCache& cache,
                  std::span<const double> dh_out, std::span<double> grad, std::span<double> dx,
                  std::span<double> dh_prev) {
    const std::size_t in = cell.input, hid = cell.hidden, cols = in + hid;
    check_size(dh_out.size(), hid, "gru upstream");
    check_size(dx.size(), in, "gru input gradient");
    check_size(dh_prev.size(), hid, "gru state gradient");
    if (cache.z.size() != hid) throw StateError("gru_backward without a recorded forward step");

    std::vector<double> dz_pre(hid), dr_pre(hid), dc_pre(hid), dxrh(cols, 0.0), dxh(cols, 0.0);
    const auto h = std::span<const double>(cache.xh).subspan(in, hid);
    for (std::size_t k = 0; k < hid; ++k) {
        const double z = cache.z[k], c = cache.c[k];
        dz_pre[k] = dh_out[k] * (c - h[k]) * z * (1.0 - z);
        dc_pre[k] = dh_out[k] * z * (1.0 - c * c);
        dh_prev[k] = dh_out[k] * (1.0 - z);
    }
    affine_backward(params.subspan(cell.wh, hid * cols), cache.xrh, dc_pre, grad.subspan(cell.wh, hid * cols),
                    grad.subspan(cell.bh, hid), dxrh);
    for (std::size_t k = 0; k < hid; ++k) {
        const double d_rh = dxrh[in + k];
        const double r = cache.r[k];
        dr_pre[k] = d_rh * h[k] * r * (1.0 - r);
        dh_prev[k] += d_rh * r;
    }
    affine_backward(params.subspan(cell.wz, hid * cols), cache.xh, dz_pre, grad.subspan(cell.wz, hid * cols),
                    grad.subspan(cell.bz, hid), dxh);
    affine_backward(params.subspan(cell.wr, hid * cols), cache.xh, dr_pre, grad.subspan(cell.wr, hid * cols),
                    grad.subspan(cell.br, hid), dxh);
    for (std::size_t i = 0; i < in; ++i) dx[i] = dxrh[i] + dxh[i];
    for (std::size_t k = 0; k < hid; ++k) dh_prev[k] += dxh[in + k];
}

void init_dense(const DenseLayer& layer, std::span<double> params, std::mt19937_64& engine) {
    init_uniform(params.subspan(layer.weight_offset, layer.in * layer.out), layer.in, layer.out, engine);
    std::ranges::fill(params.subspan(layer.bias_offset, layer.out), 0.0);
}

void init_gru(const GRUCell& cell, std::span<double> params, std::mt19937_64& engine) {
    const std::size_t cols = cell.input + cell.hidden, n = cell.hidden * cols;
    for (auto [w, b] : {std::pair{cell.wz, cell.bz}, std::pair{cell.wr, cell.br}, std::pair{cell.wh, cell.bh}}) {
        init_uniform(params.subspan(w, n), cols, cell.hidden, engine);
        std::ranges::fill(params.subspan(b, cell.hidden), 0.0);
    }
}

Mlp::Mlp(ParamLayout& layout, const std::string& name, const std::vector<std::size_t>& widths,
         Activation hidden, Activation output) {
    if (widths.size() < 2) throw ShapeError("an Mlp needs at least input and output widths");
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const bool last = k + 2 == widths.size();
        layers_.push_back(DenseLayer::allocate(layout, fmt::format("{}.{}", name, k), widths[k], widths[k + 1],
                                               last ? output : hidden));
    }
}

void Mlp::init(std::span<double> params, std::mt19937_64& engine) const {
    for (const auto& l : layers_) init_dense(l, params, engine);
}

std::vector<double> Mlp::forward(std::span<const double> params, std::span<const double> x) const {
    MlpRecord record;
    forward(params, x, record);
    return record.values.back();
}

void Mlp::forward(std::span<const double> params, std::span<const double> x, MlpRecord& record) const {
    check_size(x.size(), input_size(), "mlp input");
    record.values.resize(layers_.size() + 1);
    record.values[0].assign(x.begin(), x.end());
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        record.values[k + 1].resize(layers_[k].out);
        dense_forward(layers_[k], params, record.values[k], record.values[k + 1]);
    }
}

std::vector<double> Mlp::backward(std::span<const double> params, const MlpRecord& record,
                                  std::span<const double> upstream, std::span<double> grad) const {
    if (!record.recorded() || record.values.size() != layers_.size() + 1) {
        throw StateError("backward called without a recorded forward pass");
    }
    check_size(upstream.size(), output_size(), "mlp upstream");
    std::vector<double> dy(upstream.begin(), upstream.end());
    std::vector<double> dx;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        dx.assign(layers_[k].in, 0.0);
        dense_backward(layers_[k], params, record.values[k], record.values[k + 1], dy, grad, dx);
        dy.swap(dx);
    }
    return dy;
}

Gradient Mlp::backward(std::span<const double> params, const MlpRecord& record, std::span<const double> upstream,
                       std::size_t param_count) const {
    Gradient grad(param_count, 0.0);
    backward(params, record, upstream, grad);
    return grad;
}

} // namespace ehf::nn
