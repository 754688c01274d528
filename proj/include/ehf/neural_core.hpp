#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ehf::nn {

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2, sigmoid = 3 };

double activate(Activation act, double x);
/// Derivative expressed through the activation output y = act(x).
double activation_slope(Activation act, double y);

/// All model parameters live in one flat f64 vector; layers refer to named
/// blocks by offset. Gradients and Adam moments use the same layout.
using Gradient = std::vector<double>;

struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t size() const { return rows * cols; }
};

class ParamLayout {
public:
    std::size_t add(std::string name, std::size_t rows, std::size_t cols);
    std::size_t size() const { return size_; }
    const std::vector<ParamBlock>& blocks() const { return blocks_; }

private:
    std::vector<ParamBlock> blocks_;
    std::size_t size_ = 0;
};

/// y = act(W x + b), W stored row-major [out x in].
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation act = Activation::identity;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    static DenseLayer allocate(ParamLayout& layout, const std::string& name, std::size_t in,
                               std::size_t out, Activation act);
};

void dense_forward(const DenseLayer& layer, std::span<const double> params, std::span<const double> x,
                   std::span<double> y);

/// Accumulates parameter partials into `grad` and writes dL/dx into `dx`
/// (skipped when dx is empty). `y` is the forward output.
void dense_backward(const DenseLayer& layer, std::span<const double> params, std::span<const double> x,
                    std::span<const double> y, std::span<const double> dy, std::span<double> grad,
                    std::span<double> dx);

/// Standard GRU:
///   z = sigmoid(Wz [x;h] + bz), r = sigmoid(Wr [x;h] + br)
///   c = tanh(Wh [x; r*h] + bh), h' = (1-z)*h + z*c
struct GRUCell {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::size_t wz = 0, bz = 0, wr = 0, br = 0, wh = 0, bh = 0;

    static GRUCell allocate(ParamLayout& layout, const std::string& name, std::size_t input,
                            std::size_t hidden);
};

/// Intermediate values of one GRU step, needed by gru_backward.
struct GRUCache {
    std::vector<double> xh;  ///< [x; h_prev]
    std::vector<double> xrh; ///< [x; r*h_prev]
    std::vector<double> z, r, c;

    void resize(const GRUCell& cell);
};

void gru_forward(const GRUCell& cell, std::span<const double> params, std::span<const double> x,
                 std::span<const double> h, std::span<double> h_out, GRUCache* cache = nullptr);

/// Given dL/dh', accumulates parameter partials and writes dL/dx and dL/dh.
void gru_backward(const GRUCell& cell, std::span<const double> params, const GRUCache& cache,
                  std::span<const double> dh_out, std::span<double> grad, std::span<double> dx,
                  std::span<double> dh_prev);

/// Weights ~ U[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))], biases zero.
void init_dense(const DenseLayer& layer, std::span<double> params, std::mt19937_64& engine);
void init_gru(const GRUCell& cell, std::span<double> params, std::mt19937_64& engine);

/// Activations of one Mlp::forward call.
struct MlpRecord {
    std::vector<std::vector<double>> values; ///< values[0] = input, values[k+1] = output of layer k
    bool recorded() const { return !values.empty(); }
    void clear() { values.clear(); }
};

/// Stack of dense layers over a shared flat parameter vector.
class Mlp {
public:
    Mlp() = default;
    /// widths = {in, h1, ..., out}; hidden layers use `hidden`, last layer `output`.
    Mlp(ParamLayout& layout, const std::string& name, const std::vector<std::size_t>& widths,
        Activation hidden, Activation output);

    std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().in; }
    std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().out; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    void init(std::span<double> params, std::mt19937_64& engine) const;

    std::vector<double> forward(std::span<const double> params, std::span<const double> x) const;
    void forward(std::span<const double> params, std::span<const double> x, MlpRecord& record) const;

    /// Reverse pass for the last recorded forward. Accumulates into `grad`
    /// and returns dL/dx. Throws StateError when nothing was recorded.
    std::vector<double> backward(std::span<const double> params, const MlpRecord& record,
                                 std::span<const double> upstream, std::span<double> grad) const;

    /// Convenience: fresh gradient vector of `param_count` entries.
    Gradient backward(std::span<const double> params, const MlpRecord& record,
                      std::span<const double> upstream, std::size_t param_count) const;

private:
    std::vector<DenseLayer> layers_;
};

} // namespace ehf::nn
