#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>

#include "shapespline/shapeops.hpp"
#include "shapespline/splines.hpp"

// The user-facing shape-constrained regression estimator: fit noisy samples
// or project noise-free function values onto the constrained spline cone,
// and evaluate the result anywhere on [0,1].

namespace shapespline {

// A fitted shape-constrained spline.  Coefficients satisfy the shape
// constraint (within the solver tolerance) by construction.
struct FitResult {
    Eigen::VectorXd coefficients;
    KnotSequence knots;
    SplineOrder m;
    ActiveSet active;

    // Value of the fitted spline at x in [0,1]; x = 1 uses the
    // closed-interval convention, so the last basis function contributes.
    double operator()(double x) const {
        return eval_basis(m, knots, x).dot(coefficients);
    }

    // The fit as a self-contained closure (captures a copy).
    std::function<double(double)> fitted() const {
        return [copy = *this](double x) { return copy(x); };
    }
};

// Smoothness specification for rate experiments: the Holder class with
// exponent r in (m-1, m] for m = ceil(r) and constant L.  gamma = r - (m-1)
// in (0,1] is the exponent governing the K^{-gamma} approximation rate of
// the (m-1)-th derivative.
struct HolderSpec {
    double r;
    double L;
    double gamma;

    HolderSpec(double r_in, double L_in)
        : r(r_in), L(L_in), gamma(r_in - std::ceil(r_in) + 1.0) {
        if (!(r > 0.0)) throw std::invalid_argument("Holder exponent must be positive");
        if (!(L > 0.0)) throw std::invalid_argument("Holder constant must be positive");
    }

    SplineOrder order() const { return SplineOrder(static_cast<int>(std::ceil(r))); }
};

// Shape-constrained weighted least-squares fit of noisy samples
// y = (y_0,...,y_n) at the design points.  Mesh-class membership of the
// design and knots is deliberately not enforced here: any valid pair is
// accepted, and it is the caller's job to warn or reject.
FitResult fit(SplineOrder m, const KnotSequence& knots, const DesignPoints& design,
              const Eigen::VectorXd& y);

// The same optimization applied to noise-free function values
// (f(x_0),...,f(x_n)): the constrained projection of f onto the spline
// cone, used to isolate approximation bias from estimation noise.
FitResult project_noise_free(SplineOrder m, const KnotSequence& knots,
                             const DesignPoints& design, const Eigen::VectorXd& f_values);

// max |fit(x) - f(x)| over a uniform grid of grid_size points including
// both endpoints.  The default resolves fitted splines at desk scale well
// below experiment tolerances.
double sup_error(const FitResult& fit, const std::function<double(double)>& f,
                 int grid_size = 1001);

} // namespace shapespline
