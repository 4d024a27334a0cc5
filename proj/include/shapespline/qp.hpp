#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "shapespline/shapeops.hpp"
#include "shapespline/splines.hpp"

// The shape-constrained weighted least-squares program
//
//   minimize (1/2) b' Lambda b - b' ybar   subject to   Dtilde b >= 0,
//
// its piecewise-linear solution map, an exhaustive oracle solver, and the
// Lipschitz constant of the map in the sup norm.

namespace shapespline {

// A KKT point of the program.  `chi` always has one entry per constraint
// (K-1 of them), with exact zeros off the active set.  `active` is the
// working set at termination; when a multiplier vanishes, adjacent sets can
// describe the same (unique) minimizer, so compare solutions by b_hat, not
// by active set.  kkt_residual is the largest of the primal, dual,
// complementarity, and stationarity residuals.
struct QpSolution {
    Eigen::VectorXd b_hat;
    Eigen::VectorXd chi;
    ActiveSet active;
    double kkt_residual = 0.0;
};

// One affine piece of the solution map: whenever alpha is the optimal
// active set, b_hat(ybar) = map * ybar with
//   map = F' (F Lambda F')^{-1} F
// for any matrix F whose rows span the face (the result is invariant to
// that choice).  `factored_bound` is the product
//   ||F'|| * ||K (Xi F Lambda F')^{-1}|| * ||(1/K) Xi F||
// of infinity norms, an upper bound for inf_norm that isolates the
// Gramian-conditioning factor in the middle.
struct LinearPiece {
    ActiveSet alpha;
    Eigen::MatrixXd map;
    double inf_norm = 0.0;
    double factored_bound = 0.0;
};

enum class LipschitzMode { Exact, Probe };

// (1/2) b' Lambda b - b' ybar.
double qp_objective(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& ybar,
                    const Eigen::VectorXd& b);

// Primal active-set solver.  Starts from the all-active face (the constant
// splines, always feasible), then repeatedly adds the most violated
// constraint, or, once feasible, drops the most negative multiplier;
// smallest index breaks ties.  Each face is re-factorized from scratch.
// Throws ConditioningError when Lambda is not positive definite and
// CyclingError after 10 * 2^min(K-1,20) iterations.
QpSolution solve_qp(const DesignSystem& system, const DifferenceOperator& diffop,
                    const Eigen::VectorXd& ybar);

// Exhaustive oracle: enumerates all 2^(K-1) active sets, computes each
// face's candidate and multipliers, and returns the first candidate that
// passes the KKT screen, after cross-checking that it attains the smallest
// objective among all primal-feasible candidates.  Requires K-1 <= 16.
// Throws InternalInconsistencyError when no candidate passes or the
// cross-check fails; either means a bug, not bad input.
QpSolution brute_force_qp(const DesignSystem& system, const DifferenceOperator& diffop,
                          const Eigen::VectorXd& ybar);

LinearPiece linear_piece(const ActiveSet& alpha, const DesignSystem& system);

// Lipschitz constant of ybar -> b_hat(ybar) in the sup norm.  Exact mode
// maximizes LinearPiece::inf_norm over all 2^(K-1) faces (requires
// K-1 <= 16).  Probe mode is a seeded Monte Carlo lower bound: the largest
// ratio ||b_hat(u) - b_hat(v)||_inf / ||u - v||_inf over `pairs` random
// pairs, half with entries uniform on [-1,1] and half perturbations of the
// ybar the system was built with (pure uniform probes rarely land on a
// constrained face).
double lipschitz_constant(const DesignSystem& system, LipschitzMode mode,
                          std::uint64_t seed = 0, int pairs = 10000);

} // namespace shapespline
