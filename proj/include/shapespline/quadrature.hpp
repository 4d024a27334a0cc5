#pragma once

#include <Eigen/Dense>

namespace shapespline {

// Gauss-Legendre nodes and weights on [-1, 1]; exact for polynomials of
// degree 2n-1.  Nodes are computed by Newton iteration on the Legendre
// recurrence, which is accurate to a few ulps for the small n used here.
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

QuadratureRule gauss_legendre(int n);

} // namespace shapespline
