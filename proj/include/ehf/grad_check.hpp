#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ehf/neural_core.hpp"

namespace ehf::nn {

/// Scalar loss of a flat parameter vector. When `grad` is non-empty the
/// function must also write the analytic gradient into it.
using LossFunction = std::function<double(std::span<const double> params, std::span<double> grad)>;

struct BlockError {
    std::string name;
    double max_abs_error = 0.0;
    /// max |analytic - numeric| / max(max |analytic|, max |numeric|) within the block
    double relative_error = 0.0;
};

struct GradCheckReport {
    std::vector<BlockError> blocks;
    double max_relative_error = 0.0;
    double tolerance = 0.0;
    bool passed() const { return max_relative_error <= tolerance; }
};

/// Compares analytic gradients against central differences with step h,
/// block by block. Blocks whose gradients are all below 1e-10 in magnitude
/// count as matching when the numeric side is also below that floor.
GradCheckReport grad_check(std::span<const double> params, const ParamLayout& layout, const LossFunction& loss,
                           double tolerance, double h = 1e-6);

} // namespace ehf::nn
