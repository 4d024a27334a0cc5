#include "shapespline/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "shapespline/errors.hpp"
#include "shapespline/qp.hpp"

namespace shapespline {

namespace {

// fit and project_noise_free run the same optimization; only the meaning of
// the input vector differs (noisy samples versus exact function values).
FitResult solve_values(SplineOrder m, const KnotSequence& knots, const DesignPoints& design,
                       const Eigen::VectorXd& values) {
    DesignSystem system = build_design_system(m, knots, design, values);
    DifferenceOperator diffop = weighted_difference(m, knots);
    QpSolution sol = solve_qp(system, diffop, system.ybar);
    if (!is_shape_feasible(diffop, sol.b_hat))
        throw InternalInconsistencyError("solver returned shape-infeasible coefficients");
    return FitResult{std::move(sol.b_hat), knots, m, std::move(sol.active)};
}

} // namespace

FitResult fit(SplineOrder m, const KnotSequence& knots, const DesignPoints& design,
              const Eigen::VectorXd& y) {
    return solve_values(m, knots, design, y);
}

FitResult project_noise_free(SplineOrder m, const KnotSequence& knots,
                             const DesignPoints& design, const Eigen::VectorXd& f_values) {
    return solve_values(m, knots, design, f_values);
}

double sup_error(const FitResult& fit, const std::function<double(double)>& f, int grid_size) {
    if (grid_size < 2)
        throw std::invalid_argument("sup_error needs at least the two endpoints");
    double worst = 0.0;
    for (int g = 0; g < grid_size; ++g) {
        const double x = static_cast<double>(g) / (grid_size - 1);
        worst = std::max(worst, std::abs(fit(x) - f(x)));
    }
    return worst;
}

} // namespace shapespline
