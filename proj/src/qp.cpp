#include "shapespline/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "shapespline/errors.hpp"
#include "shapespline/rng.hpp"

namespace shapespline {

namespace {

// Activity threshold for both feasibility and multiplier signs.  Absolute,
// to match the solution invariants (Dtilde b >= -1e-10, chi >= -1e-10).
constexpr double kActivityTol = 1e-10;

void require_matching(const DesignSystem& system, const DifferenceOperator& diffop,
                      const Eigen::VectorXd& ybar) {
    if (!(diffop.m == system.m) || diffop.knots.raw() != system.knots.raw())
        throw std::invalid_argument("difference operator was built for a different basis "
                                    "than the design system");
    if (ybar.size() != system.Lambda.rows())
        throw std::invalid_argument("ybar length does not match the number of basis functions");
}

Eigen::LLT<Eigen::MatrixXd> positive_definite_llt(const Eigen::MatrixXd& A, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw ConditioningError(what);
    return llt;
}

// Rows of the full difference operator selected by a sorted constraint set
// (1-based constraint j lives in row j-1).
Eigen::MatrixXd constraint_rows(const Eigen::MatrixXd& full, const std::vector<int>& set) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(set.size()), full.cols());
    for (size_t i = 0; i < set.size(); ++i)
        rows.row(static_cast<Eigen::Index>(i)) = full.row(set[i] - 1);
    return rows;
}

// Multipliers of the constraints in `rows` from stationarity: the least
// squares solution of rows' chi = residual.  The rows of the full operator
// are linearly independent, so any subset is, and rows rows' is positive
// definite.
Eigen::VectorXd multipliers(const Eigen::MatrixXd& rows, const Eigen::VectorXd& residual) {
    if (rows.rows() == 0) return Eigen::VectorXd(0);
    auto llt = positive_definite_llt(
        rows * rows.transpose(), "active constraint rows are numerically dependent");
    return llt.solve(rows * residual);
}

// Zero-padded embedding of per-constraint values into the full multiplier
// vector.
Eigen::VectorXd scatter(const std::vector<int>& set, const Eigen::VectorXd& values, int total) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(total);
    for (size_t i = 0; i < set.size(); ++i)
        full(set[i] - 1) = values(static_cast<Eigen::Index>(i));
    return full;
}

double kkt_residual_of(const Eigen::MatrixXd& full, const Eigen::MatrixXd& lambda,
                       const Eigen::VectorXd& ybar, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& chi) {
    double worst = (lambda * b - ybar - full.transpose() * chi).lpNorm<Eigen::Infinity>();
    if (full.rows() > 0) {
        const Eigen::VectorXd slack = full * b;
        worst = std::max(worst, -std::min(0.0, slack.minCoeff()));
        worst = std::max(worst, -std::min(0.0, chi.minCoeff()));
        worst = std::max(worst, std::abs(chi.dot(slack)));
    }
    return worst;
}

// Minimizer over the face spanned by the rows of F.
Eigen::VectorXd face_minimizer(const Eigen::MatrixXd& F, const Eigen::MatrixXd& lambda,
                               const Eigen::VectorXd& ybar) {
    auto llt = positive_definite_llt(
        F * lambda * F.transpose(),
        "face normal matrix F Lambda F' is not positive definite; the design system is "
        "too ill-conditioned for the active-set solve");
    return F.transpose() * llt.solve(F * ybar);
}

std::vector<int> mask_to_set(unsigned mask, int total) {
    std::vector<int> set;
    for (int j = 1; j <= total; ++j)
        if (mask & (1u << (j - 1))) set.push_back(j);
    return set;
}

} // namespace

double qp_objective(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& ybar,
                    const Eigen::VectorXd& b) {
    return 0.5 * b.dot(lambda * b) - b.dot(ybar);
}

QpSolution solve_qp(const DesignSystem& system, const DifferenceOperator& diffop,
                    const Eigen::VectorXd& ybar) {
    require_matching(system, diffop, ybar);
    auto lambda_llt = positive_definite_llt(
        system.Lambda,
        "Lambda is not positive definite; rebuild the design system with more design "
        "points per knot interval");

    const Eigen::MatrixXd& D = diffop.full();
    const int constraints = static_cast<int>(D.rows());

    std::vector<int> working;
    working.reserve(static_cast<size_t>(constraints));
    for (int j = 1; j <= constraints; ++j) working.push_back(j);

    const long cap = 10L * (1L << std::min(constraints, 20));
    for (long iter = 0; iter < cap; ++iter) {
        ActiveSet alpha(system.m, system.knots.intervals(), working);
        Eigen::VectorXd b =
            working.empty()
                ? Eigen::VectorXd(lambda_llt.solve(ybar))
                : face_minimizer(face_basis(alpha, system.knots).factor, system.Lambda, ybar);

        // Most violated inactive constraint; the strict comparison keeps the
        // smallest index on ties.
        const Eigen::VectorXd slack = D * b;
        int add = 0;
        double worst = -kActivityTol;
        auto next_active = working.begin();
        for (int j = 1; j <= constraints; ++j) {
            if (next_active != working.end() && *next_active == j) {
                ++next_active;
                continue;
            }
            if (slack(j - 1) < worst) {
                worst = slack(j - 1);
                add = j;
            }
        }
        if (add > 0) {
            working.insert(std::lower_bound(working.begin(), working.end(), add), add);
            continue;
        }

        // Feasible: drop the most negative multiplier, if any.
        const Eigen::VectorXd chi_active =
            multipliers(constraint_rows(D, working), system.Lambda * b - ybar);
        int drop = -1;
        double lowest = -kActivityTol;
        for (Eigen::Index i = 0; i < chi_active.size(); ++i) {
            if (chi_active(i) < lowest) {
                lowest = chi_active(i);
                drop = static_cast<int>(i);
            }
        }
        if (drop >= 0) {
            working.erase(working.begin() + drop);
            continue;
        }

        Eigen::VectorXd chi = scatter(working, chi_active, constraints);
        const double residual = kkt_residual_of(D, system.Lambda, ybar, b, chi);
        return QpSolution{std::move(b), std::move(chi), std::move(alpha), residual};
    }
    throw CyclingError("active-set iteration cap reached; the activity tolerance is "
                       "misconfigured for this problem scale");
}

QpSolution brute_force_qp(const DesignSystem& system, const DifferenceOperator& diffop,
                          const Eigen::VectorXd& ybar) {
    require_matching(system, diffop, ybar);
    const Eigen::MatrixXd& D = diffop.full();
    const int constraints = static_cast<int>(D.rows());
    if (constraints > 16)
        throw std::invalid_argument("exhaustive enumeration needs 2^(K-1) faces; K-1 must "
                                    "be at most 16");

    const double stationarity_tol = 1e-8 * (1.0 + ybar.lpNorm<Eigen::Infinity>());
    std::optional<QpSolution> accepted;
    double least_feasible = std::numeric_limits<double>::infinity();

    for (unsigned mask = 0; mask < (1u << constraints); ++mask) {
        ActiveSet alpha(system.m, system.knots.intervals(), mask_to_set(mask, constraints));
        const Eigen::VectorXd b =
            face_minimizer(face_basis(alpha, system.knots).factor, system.Lambda, ybar);

        const Eigen::VectorXd slack = D * b;
        const bool primal = slack.size() == 0 || slack.minCoeff() >= -kActivityTol;
        if (primal) least_feasible = std::min(least_feasible, qp_objective(system.Lambda, ybar, b));

        const Eigen::VectorXd chi_active =
            multipliers(constraint_rows(D, alpha.active()), system.Lambda * b - ybar);
        const bool dual = chi_active.size() == 0 || chi_active.minCoeff() >= -kActivityTol;
        if (!primal || !dual || accepted.has_value()) continue;

        Eigen::VectorXd chi = scatter(alpha.active(), chi_active, constraints);
        const double stationarity =
            (system.Lambda * b - ybar - D.transpose() * chi).lpNorm<Eigen::Infinity>();
        const double complementarity = slack.size() == 0 ? 0.0 : std::abs(chi.dot(slack));
        if (stationarity <= stationarity_tol && complementarity <= 1e-8) {
            const double residual = kkt_residual_of(D, system.Lambda, ybar, b, chi);
            accepted = QpSolution{b, std::move(chi), std::move(alpha), residual};
        }
    }

    if (!accepted.has_value())
        throw InternalInconsistencyError("no face passed the KKT screen in exhaustive "
                                         "enumeration");
    const double value = qp_objective(system.Lambda, ybar, accepted->b_hat);
    if (value > least_feasible + 1e-9 * (1.0 + std::abs(least_feasible)))
        throw InternalInconsistencyError("the KKT-accepted face does not attain the least "
                                         "objective among primal-feasible faces");
    return std::move(*accepted);
}

LinearPiece linear_piece(const ActiveSet& alpha, const DesignSystem& system) {
    if (!(alpha.order() == system.m) || alpha.intervals() != system.knots.intervals())
        throw std::invalid_argument("active set does not match the design system");

    const FaceBasis face = face_basis(alpha, system.knots);
    const Eigen::MatrixXd& F = face.factor;
    auto llt = positive_definite_llt(
        F * system.Lambda * F.transpose(),
        "face normal matrix F Lambda F' is numerically singular");

    Eigen::MatrixXd map = F.transpose() * llt.solve(F);
    const double inf_norm = map.cwiseAbs().rowwise().sum().maxCoeff();

    // (Xi F Lambda F')^{-1} = (F Lambda F')^{-1} Xi^{-1} reuses the same
    // factorization for the middle factor of the bound.
    const double K = system.knots.intervals();
    const Eigen::VectorXd& xi = face.inv_l1.back();
    const double left = F.cwiseAbs().colwise().sum().maxCoeff();
    const Eigen::MatrixXd middle_inv =
        llt.solve(Eigen::MatrixXd(xi.cwiseInverse().asDiagonal()));
    const double middle = K * middle_inv.cwiseAbs().rowwise().sum().maxCoeff();
    const double right = (xi.asDiagonal() * F).cwiseAbs().rowwise().sum().maxCoeff() / K;

    return LinearPiece{alpha, std::move(map), inf_norm, left * middle * right};
}

double lipschitz_constant(const DesignSystem& system, LipschitzMode mode, std::uint64_t seed,
                          int pairs) {
    const int constraints = system.knots.intervals() - 1;

    if (mode == LipschitzMode::Exact) {
        if (constraints > 16)
            throw std::invalid_argument("exact mode enumerates 2^(K-1) faces; K-1 must be "
                                        "at most 16");
        double largest = 0.0;
        for (unsigned mask = 0; mask < (1u << constraints); ++mask) {
            ActiveSet alpha(system.m, system.knots.intervals(),
                            mask_to_set(mask, constraints));
            largest = std::max(largest, linear_piece(alpha, system).inf_norm);
        }
        return largest;
    }

    if (pairs < 1) throw std::invalid_argument("probe mode needs at least one pair");
    const DifferenceOperator diffop = weighted_difference(system.m, system.knots);
    const Eigen::Index T = system.Lambda.rows();
    const double spread = 0.25 * (1.0 + system.ybar.lpNorm<Eigen::Infinity>());

    CounterRng rng(seed);
    double largest = 0.0;
    for (int pair = 0; pair < pairs; ++pair) {
        Eigen::VectorXd u(T), v(T);
        for (Eigen::Index j = 0; j < T; ++j) u(j) = rng.uniform(-1.0, 1.0);
        for (Eigen::Index j = 0; j < T; ++j) v(j) = rng.uniform(-1.0, 1.0);
        if (pair % 2 == 1) {
            u = system.ybar + spread * u;
            v = system.ybar + spread * v;
        }
        const double gap = (u - v).lpNorm<Eigen::Infinity>();
        if (gap < 1e-12) continue;
        const double moved = (solve_qp(system, diffop, u).b_hat - solve_qp(system, diffop, v).b_hat)
                                 .lpNorm<Eigen::Infinity>();
        largest = std::max(largest, moved / gap);
    }
    return largest;
}

} // namespace shapespline
