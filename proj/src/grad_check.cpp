#include "ehf/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "ehf/errors.hpp"

namespace ehf::nn {

GradCheckReport grad_check(std::span<const double> params, const ParamLayout& layout, const LossFunction& loss,
                           double tolerance, double h) {
    if (params.size() != layout.size()) throw ShapeError("grad_check: parameter vector does not match layout");
    std::vector<double> analytic(params.size(), 0.0);
    loss(params, analytic);

    std::vector<double> probe(params.begin(), params.end());
    GradCheckReport report;
    report.tolerance = tolerance;
    constexpr double kFloor = 1e-10;
    for (const auto& block : layout.blocks()) {
        double max_err = 0.0, max_mag = 0.0;
        for (std::size_t k = block.offset; k < block.offset + block.size(); ++k) {
            const double saved = probe[k];
            probe[k] = saved + h;
            const double up = loss(probe, {});
            probe[k] = saved - h;
            const double down = loss(probe, {});
            probe[k] = saved;
            const double numeric = (up - down) / (2.0 * h);
            max_err = std::max(max_err, std::abs(numeric - analytic[k]));
            max_mag = std::max({max_mag, std::abs(numeric), std::abs(analytic[k])});
        }
        BlockError e{block.name, max_err, max_mag < kFloor ? (max_err < kFloor ? 0.0 : 1.0) : max_err / max_mag};
        report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
        report.blocks.push_back(std::move(e));
    }
    return report;
}

} // namespace ehf::nn
