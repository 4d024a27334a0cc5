#include "shapespline/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "shapespline/csv.hpp"
#include "shapespline/errors.hpp"
#include "shapespline/parallel.hpp"
#include "shapespline/qp.hpp"

namespace shapespline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Disjoint counter streams per (cell, replicate, channel) so sweep tasks
// can run in any order and still reproduce the serial results.
std::uint64_t stream_id(int cell, int replicate, int channel) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cell)) << 24) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(replicate)) << 4) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(channel));
}

double matrix_inf_norm(const Eigen::MatrixXd& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

// Grid-based checks are only attempted when the scheduled grid is small
// enough to hold in memory and walk in reasonable time.
constexpr std::int64_t kGridColumnCap = 500000;

// ||G^-1||_inf recomputed in extended precision: Gauss elimination with
// partial pivoting on [G | I] in long double, then the max absolute row
// sum of the inverse.
double inverse_inf_norm_long_double(const Eigen::MatrixXd& g) {
    const int q = static_cast<int>(g.rows());
    if (q == 0) return 0.0;
    std::vector<long double> a(static_cast<size_t>(q) * static_cast<size_t>(2 * q), 0.0L);
    auto at = [&](int i, int j) -> long double& {
        return a[static_cast<size_t>(i) * static_cast<size_t>(2 * q) + static_cast<size_t>(j)];
    };
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < q; ++j) at(i, j) = static_cast<long double>(g(i, j));
        at(i, q + i) = 1.0L;
    }
    for (int col = 0; col < q; ++col) {
        int pivot = col;
        for (int i = col + 1; i < q; ++i)
            if (std::abs(at(i, col)) > std::abs(at(pivot, col))) pivot = i;
        if (at(pivot, col) == 0.0L)
            throw ConditioningError("extended-precision elimination hit a zero pivot");
        if (pivot != col)
            for (int j = 0; j < 2 * q; ++j) std::swap(at(pivot, j), at(col, j));
        const long double diag = at(col, col);
        for (int i = 0; i < q; ++i) {
            if (i == col) continue;
            const long double factor = at(i, col) / diag;
            if (factor == 0.0L) continue;
            for (int j = col; j < 2 * q; ++j) at(i, j) -= factor * at(col, j);
        }
    }
    long double worst = 0.0L;
    for (int i = 0; i < q; ++i) {
        long double row = 0.0L;
        for (int j = 0; j < q; ++j) row += std::abs(at(i, q + j) / at(i, i));
        worst = std::max(worst, row);
    }
    return static_cast<double>(worst);
}

std::string bool_field(bool value) { return value ? "1" : "0"; }

double parse_record_double(const std::string& field, const std::string& source, long line,
                           int column) {
    try {
        size_t used = 0;
        const double value = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return value;
    } catch (const std::exception&) {
        throw CsvError(source + ":" + std::to_string(line) + ": field " + std::to_string(column) +
                       " is not a number: '" + field + "'");
    }
}

// Ordinary least-squares slope of ys against xs.
double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx < 1e-18) throw std::invalid_argument("rate cells must have distinct predictors");
    return sxy / sxx;
}

std::string cell_params(int m, int intervals, int n) {
    std::ostringstream out;
    out << "m=" << m << " K=" << intervals << " n=" << n;
    return out.str();
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Bounds: return "bounds";
        case ExperimentKind::GramianSweep: return "gramian-sweep";
        case ExperimentKind::LipschitzSweep: return "lipschitz-sweep";
        case ExperimentKind::BiasRate: return "bias-rate";
        case ExperimentKind::StochasticRate: return "stochastic-rate";
        case ExperimentKind::TotalRisk: return "total-risk";
    }
    throw std::invalid_argument("unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& text) {
    if (text == "bounds") return ExperimentKind::Bounds;
    if (text == "gramian-sweep") return ExperimentKind::GramianSweep;
    if (text == "lipschitz-sweep") return ExperimentKind::LipschitzSweep;
    if (text == "bias-rate") return ExperimentKind::BiasRate;
    if (text == "stochastic-rate") return ExperimentKind::StochasticRate;
    if (text == "total-risk") return ExperimentKind::TotalRisk;
    throw std::invalid_argument("unknown experiment kind '" + text + "'");
}

void ExperimentConfig::validate() const {
    if (grid.empty()) throw std::invalid_argument("experiment grid must not be empty");
    for (const auto& cell : grid) {
        if (cell.intervals < 1)
            throw std::invalid_argument("every cell needs at least one knot interval");
        if (cell.n <= cell.intervals)
            throw std::invalid_argument("every cell needs more design intervals than knot intervals");
    }
    if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be finite and nonnegative");
    if (!(mesh.c_lower > 0.0) || !(mesh.c_lower <= 1.0) || !(mesh.c_upper >= 1.0) ||
        !std::isfinite(mesh.c_upper))
        throw std::invalid_argument("knot constants need 0 < c_lower <= 1 <= c_upper");
    if (!(mesh.c_omega >= 1.0) || !std::isfinite(mesh.c_omega))
        throw std::invalid_argument("design constant needs c_omega >= 1");
}

ResultRecord bound_record(std::string experiment, std::string check, std::string params,
                          double measured, double bound) {
    ResultRecord record;
    record.experiment = std::move(experiment);
    record.check = std::move(check);
    record.params = std::move(params);
    record.measured = measured;
    record.bound = bound;
    if (std::isnan(bound)) {
        record.margin = std::numeric_limits<double>::quiet_NaN();
        record.passed = true;
    } else {
        record.margin = bound - measured;
        record.passed = measured <= bound + kBoundSlack;
    }
    return record;
}

void write_records_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
    out << "experiment,check,params,measured,bound,margin,passed\n";
    for (const auto& r : records) {
        out << csv_field(r.experiment) << ',' << csv_field(r.check) << ',' << csv_field(r.params)
            << ',' << format_double(r.measured) << ',' << format_double(r.bound) << ','
            << format_double(r.margin) << ',' << bool_field(r.passed) << '\n';
    }
}

std::string records_csv(const std::vector<ResultRecord>& records) {
    std::ostringstream out;
    write_records_csv(out, records);
    return out.str();
}

std::vector<ResultRecord> read_records_csv(std::istream& in, const std::string& source) {
    static const std::string kHeader = "experiment,check,params,measured,bound,margin,passed";
    std::vector<ResultRecord> records;
    std::string line;
    long line_number = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kHeader)
                throw CsvError(source + ":" + std::to_string(line_number) +
                               ": expected record header '" + kHeader + "'");
            saw_header = true;
            continue;
        }
        const auto fields = split_csv_line(line, source, line_number);
        if (fields.size() != 7)
            throw CsvError(source + ":" + std::to_string(line_number) + ": expected 7 fields, got " +
                           std::to_string(fields.size()));
        ResultRecord r;
        r.experiment = fields[0];
        r.check = fields[1];
        r.params = fields[2];
        r.measured = parse_record_double(fields[3], source, line_number, 4);
        r.bound = parse_record_double(fields[4], source, line_number, 5);
        r.margin = parse_record_double(fields[5], source, line_number, 6);
        if (fields[6] == "1") {
            r.passed = true;
        } else if (fields[6] == "0") {
            r.passed = false;
        } else {
            throw CsvError(source + ":" + std::to_string(line_number) +
                           ": field 7 must be 0 or 1, got '" + fields[6] + "'");
        }
        records.push_back(std::move(r));
    }
    if (!saw_header) throw CsvError(source + ":1: empty input, expected a record header");
    return records;
}

std::string records_summary_json(const std::string& experiment,
                                 const std::map<std::string, std::string>& config_echo,
                                 const std::vector<ResultRecord>& records) {
    nlohmann::ordered_json summary;
    summary["experiment"] = experiment;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config_echo) config[key] = value;
    summary["config"] = config;
    int passed = 0;
    std::map<std::string, std::pair<int, int>> counts;  // check -> (records, failed)
    std::map<std::string, double> worst;                // check -> min margin
    for (const auto& r : records) {
        auto& entry = counts[r.check];
        entry.first += 1;
        if (r.passed) {
            ++passed;
        } else {
            entry.second += 1;
        }
        if (!std::isnan(r.margin)) {
            auto it = worst.find(r.check);
            if (it == worst.end() || r.margin < it->second) worst[r.check] = r.margin;
        }
    }
    summary["records"] = records.size();
    summary["passed"] = passed;
    summary["failed"] = static_cast<int>(records.size()) - passed;
    summary["all_passed"] = passed == static_cast<int>(records.size());
    nlohmann::ordered_json checks = nlohmann::ordered_json::object();
    for (const auto& [check, entry] : counts) {
        nlohmann::ordered_json item;
        item["records"] = entry.first;
        item["failed"] = entry.second;
        const auto it = worst.find(check);
        if (it == worst.end()) {
            item["worst_margin"] = nullptr;
        } else {
            item["worst_margin"] = it->second;
        }
        checks[check] = item;
    }
    summary["checks"] = checks;
    return summary.dump(2) + "\n";
}

const std::vector<TruthFunction>& truth_catalog() {
    // Each truth is shape-feasible for its declared order and carries the
    // documented smoothness constants used by the rate predictors.
    static const std::vector<TruthFunction> catalog = {
        {"identity", HolderSpec(1.0, 1.0), [](double x) { return x; }},
        {"smoothstep", HolderSpec(1.0, 1.5), [](double x) { return x * x * (3.0 - 2.0 * x); }},
        // affine and convex, hence inside every order-2 spline space
        {"ramp", HolderSpec(2.0, 1.0), [](double x) { return x; }},
        {"square", HolderSpec(2.0, 2.0), [](double x) { return x * x; }},
        {"expcurve", HolderSpec(2.0, std::exp(1.0) / (std::exp(1.0) - 1.0)),
         [](double x) { return (std::exp(x) - 1.0) / (std::exp(1.0) - 1.0); }},
        {"cube", HolderSpec(3.0, 6.0), [](double x) { return x * x * x; }},
    };
    return catalog;
}

const TruthFunction& truth_by_name(const std::string& name) {
    for (const auto& truth : truth_catalog())
        if (truth.name == name) return truth;
    std::string known;
    for (const auto& truth : truth_catalog()) {
        if (!known.empty()) known += ", ";
        known += truth.name;
    }
    throw std::invalid_argument("unknown truth '" + name + "' (known: " + known + ")");
}

KnotSequence sample_knots(int intervals, const MeshConstants& mesh, CounterRng& rng) {
    if (intervals < 1) throw std::invalid_argument("need at least one knot interval");
    if (!(mesh.c_lower > 0.0) || !(mesh.c_lower <= 1.0) || !(mesh.c_upper >= 1.0))
        throw std::invalid_argument("knot constants need 0 < c_lower <= 1 <= c_upper");
    const double lo = mesh.c_lower / intervals;
    const double hi = mesh.c_upper / intervals;
    std::vector<double> gaps(static_cast<size_t>(intervals));
    for (int attempt = 0; attempt < 10000; ++attempt) {
        double total = 0.0;
        for (auto& gap : gaps) {
            gap = rng.uniform(lo, hi);
            total += gap;
        }
        bool in_class = true;
        for (const auto& gap : gaps) {
            const double scaled = gap / total;
            if (scaled < lo * (1.0 - 1e-12) || scaled > hi * (1.0 + 1e-12)) {
                in_class = false;
                break;
            }
        }
        if (!in_class) continue;
        std::vector<double> knots(static_cast<size_t>(intervals) + 1);
        knots[0] = 0.0;
        double prefix = 0.0;
        for (int k = 1; k <= intervals; ++k) {
            prefix += gaps[static_cast<size_t>(k - 1)];
            knots[static_cast<size_t>(k)] = prefix / total;
        }
        knots.back() = 1.0;
        return KnotSequence(std::move(knots), mesh.c_lower, mesh.c_upper);
    }
    throw std::runtime_error("knot sampler found no in-class mesh after 10000 draws");
}

DesignPoints sample_design(int n, const MeshConstants& mesh, CounterRng& rng) {
    if (n < 1) throw std::invalid_argument("need at least one design interval");
    if (!(mesh.c_omega >= 1.0)) throw std::invalid_argument("design constant needs c_omega >= 1");
    const double lo = std::max(0.25, 2.0 - mesh.c_omega) / n;
    const double hi = mesh.c_omega / n;
    std::vector<double> gaps(static_cast<size_t>(n));
    for (int attempt = 0; attempt < 10000; ++attempt) {
        double total = 0.0;
        for (auto& gap : gaps) {
            gap = rng.uniform(lo, hi);
            total += gap;
        }
        bool in_class = true;
        for (const auto& gap : gaps) {
            if (gap / total > hi * (1.0 + 1e-12)) {
                in_class = false;
                break;
            }
        }
        if (!in_class) continue;
        std::vector<double> points(static_cast<size_t>(n) + 1);
        points[0] = 0.0;
        double prefix = 0.0;
        for (int k = 1; k <= n; ++k) {
            prefix += gaps[static_cast<size_t>(k - 1)];
            points[static_cast<size_t>(k)] = prefix / total;
        }
        points.back() = 1.0;
        return DesignPoints(std::move(points), mesh.c_omega);
    }
    throw std::runtime_error("design sampler found no in-class draw after 10000 attempts");
}

ActiveSet sample_active_set(SplineOrder m, int intervals, CounterRng& rng) {
    std::vector<int> active;
    for (int j = 1; j < intervals; ++j)
        if (rng.next_u64() & 1u) active.push_back(j);
    return ActiveSet(m, intervals, std::move(active));
}

Eigen::VectorXd simulate_model(const std::function<double(double)>& truth,
                               const DesignPoints& design, double sigma, std::uint64_t seed) {
    if (!truth) throw std::invalid_argument("truth function must be callable");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be finite and nonnegative");
    Eigen::VectorXd y(design.count());
    for (int i = 0; i < design.count(); ++i) y(i) = truth(design.point(i));
    if (sigma > 0.0) {
        CounterRng rng(seed);
        for (int i = 0; i < design.count(); ++i) y(i) += sigma * rng.normal();
    }
    return y;
}

int schedule_intervals(int n, double q) {
    if (n < 2) throw std::invalid_argument("schedule needs n >= 2");
    if (!(q > 0.0)) throw std::invalid_argument("schedule needs q > 0");
    const double value = std::pow(static_cast<double>(n) / std::log(static_cast<double>(n)), 1.0 / q);
    return std::max(1, static_cast<int>(std::ceil(value)));
}

std::vector<ResultRecord> run_bound_suite(const ExperimentConfig& config) {
    config.validate();
    if (config.kind != ExperimentKind::Bounds)
        throw std::invalid_argument("run_bound_suite needs kind 'bounds'");
    const int m = config.m.value();
    const std::string id = to_string(config.kind);
    const int tasks = static_cast<int>(config.grid.size()) * config.replicates;
    std::vector<std::vector<ResultRecord>> slots(static_cast<size_t>(tasks));

    parallel_for(tasks, [&](int task) {
        const int cell = task / config.replicates;
        const int rep = task % config.replicates;
        const GridCell& gc = config.grid[static_cast<size_t>(cell)];
        auto& out = slots[static_cast<size_t>(task)];
        const auto started = Clock::now();
        std::ostringstream tag;
        tag << cell_params(m, gc.intervals, gc.n) << " rep=" << rep;
        const std::string params = tag.str();
        try {
            CounterRng knot_rng(config.seed, stream_id(cell, rep, 0));
            const KnotSequence knots = sample_knots(gc.intervals, config.mesh, knot_rng);
            CounterRng design_rng(config.seed, stream_id(cell, rep, 1));
            const DesignPoints design = sample_design(gc.n, config.mesh, design_rng);
            CounterRng alpha_rng(config.seed, stream_id(cell, rep, 2));
            const ActiveSet alpha = sample_active_set(config.m, gc.intervals, alpha_rng);
            const int K = gc.intervals;

            const FaceBasis face = face_basis(alpha, knots);
            const DifferenceOperator diff = weighted_difference(config.m, knots);
            const KnotSequence V = face_knots(alpha, knots);

            double null_residual = 0.0;
            for (const int j : alpha.active())
                null_residual = std::max(
                    null_residual,
                    (diff.full().row(j - 1) * face.factor.transpose()).cwiseAbs().maxCoeff());
            out.push_back(bound_record(id, "null-space-identity", params, null_residual, 1e-9));

            double change_residual = 0.0;
            for (int g = 0; g < 200; ++g) {
                const double x = static_cast<double>(g) / 199.0;
                const Eigen::VectorXd coarse = eval_basis(config.m, V, x);
                const Eigen::VectorXd fine = eval_basis(config.m, knots, x);
                change_residual = std::max(
                    change_residual, (face.factor * fine - coarse).cwiseAbs().maxCoeff());
            }
            out.push_back(bound_record(id, "basis-change-identity", params, change_residual, 1e-9));

            out.push_back(bound_record(id, "face-entry-floor", params,
                                       std::max(0.0, -face.factor.minCoeff()), 1e-13));
            const double transpose_norm = face.factor.cwiseAbs().colwise().sum().maxCoeff();
            out.push_back(bound_record(id, "face-transpose-norm", params,
                                       std::abs(transpose_norm - 1.0), 1e-10));
            const Eigen::VectorXd xi = face.inv_l1.back();
            const double scaled_norm =
                matrix_inf_norm(xi.asDiagonal() * face.factor) / static_cast<double>(K);
            out.push_back(bound_record(id, "scaled-face-norm", params, scaled_norm,
                                       static_cast<double>(m) / knots.c_lower()));

            bool grid_feasible = true;
            GridSchedule sched{0, 0, 1};
            try {
                sched = property_h_grid(config.m, knots.c_lower(), K, 1);
            } catch (const std::overflow_error&) {
                grid_feasible = false;
            }
            if (grid_feasible && sched.grid <= kGridColumnCap) {
                const FaceGridBasis fg = face_grid_basis(alpha, knots, sched.grid);
                const auto L = sched.grid;
                const double M = static_cast<double>(sched.resolution);
                for (int p = 1; p <= m; ++p) {
                    const Eigen::MatrixXd& stage = fg.stages[static_cast<size_t>(p - 1)];
                    const std::int64_t stride = std::max<std::int64_t>(1, L / 20000);
                    double worst = 0.0;
                    for (std::int64_t l = 1; l <= L; l += stride) {
                        const double x = static_cast<double>(l - 1) / static_cast<double>(L);
                        const Eigen::VectorXd exact = eval_basis(SplineOrder(p), V, x);
                        worst = std::max(
                            worst, (stage.col(l - 1).head(exact.size()) - exact)
                                       .cwiseAbs()
                                       .maxCoeff());
                    }
                    const double bound = 6.0 * (std::pow(2.0, p - 1) - 1.0) *
                                         std::pow(M, p - 1) / static_cast<double>(L);
                    std::ostringstream stage_tag;
                    stage_tag << params << " p=" << p << " J=" << sched.factor << " L=" << L;
                    out.push_back(
                        bound_record(id, "grid-surrogate-error", stage_tag.str(), worst, bound));
                }
                const GramianReport report = gramian(alpha, knots);
                const Eigen::MatrixXd surrogate =
                    (xi.asDiagonal() * (fg.trunc * fg.trunc.transpose())) /
                    static_cast<double>(L);
                const double gap = matrix_inf_norm(report.gramian - surrogate);
                const double gramian_bound = 6.0 * knots.c_lower() *
                                             (3.0 * std::pow(2.0, m - 1) - 2.0) /
                                             static_cast<double>(sched.factor);
                out.push_back(
                    bound_record(id, "face-gramian-grid-gap", params, gap, gramian_bound));
            }

            const DesignSystem system = build_design_system(
                config.m, knots, design, Eigen::VectorXd::Zero(design.count()));
            const std::int64_t quad_grid = std::max<std::int64_t>(
                256, static_cast<std::int64_t>(std::ceil(4.0 * K / knots.c_lower())));
            const LimitGramians limits = limit_gramians(config.m, knots, quad_grid);
            const double lambda_gap = matrix_inf_norm(system.Lambda - limits.quadrature);
            const double lambda_bound =
                (2.0 * m - 1.0) *
                (6.0 * m * m * design.c_omega() * knots.c_upper() / knots.c_lower() +
                 3.0 * design.c_omega()) *
                static_cast<double>(K) / static_cast<double>(gc.n);
            out.push_back(
                bound_record(id, "design-gramian-gap", params, lambda_gap, lambda_bound));
        } catch (const std::exception& error) {
            ResultRecord failure;
            failure.experiment = id;
            failure.check = "computation-error";
            failure.params = params + " error=" + error.what();
            failure.measured = std::numeric_limits<double>::quiet_NaN();
            failure.passed = false;
            out.push_back(failure);
        }
        const double elapsed = seconds_since(started);
        for (auto& record : out) record.wall_seconds = elapsed;
    });

    std::vector<ResultRecord> records;
    for (auto& slot : slots)
        for (auto& record : slot) records.push_back(std::move(record));
    return records;
}

GramianSweep gramian_sweep(const std::vector<int>& orders, const std::vector<int>& interval_counts,
                           int knot_samples, int alpha_samples, std::uint64_t seed,
                           const MeshConstants& mesh) {
    if (orders.empty() || interval_counts.empty())
        throw std::invalid_argument("gramian sweep needs orders and interval counts");
    for (const int m : orders)
        if (m < 1) throw std::invalid_argument("orders must be positive");
    for (const int K : interval_counts)
        if (K < 1) throw std::invalid_argument("interval counts must be positive");
    if (knot_samples < 1 || alpha_samples < 1)
        throw std::invalid_argument("sample counts must be at least 1");

    const std::string id = "gramian-sweep";
    struct CellStats {
        double max_norm = 0.0;
        int nonfinite = 0;
        double identity_gap = 0.0;
        double seconds = 0.0;
    };
    const int order_count = static_cast<int>(orders.size());
    const int k_count = static_cast<int>(interval_counts.size());
    const int cells = order_count * k_count;
    std::vector<CellStats> stats(static_cast<size_t>(cells));

    parallel_for(cells, [&](int cell) {
        const int m = orders[static_cast<size_t>(cell / k_count)];
        const int K = interval_counts[static_cast<size_t>(cell % k_count)];
        auto& entry = stats[static_cast<size_t>(cell)];
        const auto started = Clock::now();
        for (int s = 0; s < knot_samples; ++s) {
            CounterRng knot_rng(seed, stream_id(cell, s, 0));
            const KnotSequence knots = sample_knots(K, mesh, knot_rng);
            CounterRng alpha_rng(seed, stream_id(cell, s, 1));
            for (int a = 0; a < alpha_samples; ++a) {
                const ActiveSet alpha = sample_active_set(SplineOrder(m), K, alpha_rng);
                const GramianReport report = gramian(alpha, knots);
                if (!std::isfinite(report.inv_inf_norm)) {
                    entry.nonfinite += 1;
                    continue;
                }
                entry.max_norm = std::max(entry.max_norm, report.inv_inf_norm);
                if (m == 1)
                    entry.identity_gap =
                        std::max(entry.identity_gap, std::abs(report.inv_inf_norm - 1.0));
            }
        }
        entry.seconds = seconds_since(started);
    });

    GramianSweep sweep;
    for (int cell = 0; cell < cells; ++cell) {
        const int m = orders[static_cast<size_t>(cell / k_count)];
        const int K = interval_counts[static_cast<size_t>(cell % k_count)];
        const CellStats& entry = stats[static_cast<size_t>(cell)];
        std::ostringstream tag;
        tag << "m=" << m << " K=" << K << " knots=" << knot_samples
            << " alphas=" << alpha_samples;
        ResultRecord norm_record = bound_record(id, "inverse-gramian-norm", tag.str(),
                                                entry.max_norm,
                                                std::numeric_limits<double>::quiet_NaN());
        norm_record.wall_seconds = entry.seconds;
        sweep.records.push_back(std::move(norm_record));
        ResultRecord finite_record = bound_record(id, "inverse-gramian-finite", tag.str(),
                                                  static_cast<double>(entry.nonfinite), 0.0);
        finite_record.wall_seconds = entry.seconds;
        sweep.records.push_back(std::move(finite_record));
        if (m == 1) {
            ResultRecord identity = bound_record(id, "order-one-inverse-identity", tag.str(),
                                                 entry.identity_gap, 1e-10);
            identity.wall_seconds = entry.seconds;
            sweep.records.push_back(std::move(identity));
        }
        auto& rho = sweep.rho_hat[m];
        rho = std::max(rho, entry.max_norm);
    }

    // Plateau of the running max between the K >= 20 and K >= 40 windows.
    for (int oi = 0; oi < order_count; ++oi) {
        const int m = orders[static_cast<size_t>(oi)];
        double wide = 0.0;
        double tail = 0.0;
        bool has_wide = false;
        bool has_tail = false;
        for (int ki = 0; ki < k_count; ++ki) {
            const int K = interval_counts[static_cast<size_t>(ki)];
            const double value = stats[static_cast<size_t>(oi * k_count + ki)].max_norm;
            if (K >= 20) {
                wide = std::max(wide, value);
                has_wide = true;
            }
            if (K >= 40) {
                tail = std::max(tail, value);
                has_tail = true;
            }
        }
        if (has_wide && has_tail && tail > 0.0) {
            std::ostringstream tag;
            tag << "m=" << m << " windows=K>=20,K>=40";
            sweep.records.push_back(
                bound_record(id, "inverse-gramian-plateau", tag.str(), wide / tail, 1.1));
        }
    }

    // Grid-surrogate Gramian inverse ceiling on the cheapest feasible cell
    // per order.
    for (int oi = 0; oi < order_count; ++oi) {
        const int m = orders[static_cast<size_t>(oi)];
        int best_ki = -1;
        for (int ki = 0; ki < k_count; ++ki) {
            const int K = interval_counts[static_cast<size_t>(ki)];
            try {
                const GridSchedule sched = property_h_grid(SplineOrder(m), mesh.c_lower, K, 1);
                if (sched.grid > kGridColumnCap) continue;
            } catch (const std::overflow_error&) {
                continue;
            }
            if (best_ki < 0 ||
                interval_counts[static_cast<size_t>(ki)] <
                    interval_counts[static_cast<size_t>(best_ki)])
                best_ki = ki;
        }
        if (best_ki < 0) continue;
        const int K = interval_counts[static_cast<size_t>(best_ki)];
        const int cell = oi * k_count + best_ki;
        CounterRng knot_rng(seed, stream_id(cell, 0, 0));
        const KnotSequence knots = sample_knots(K, mesh, knot_rng);
        CounterRng alpha_rng(seed, stream_id(cell, 0, 1));
        const ActiveSet alpha = sample_active_set(SplineOrder(m), K, alpha_rng);
        const GridSchedule sched = property_h_grid(SplineOrder(m), mesh.c_lower, K, 1);
        const FaceGridBasis fg = face_grid_basis(alpha, knots, sched.grid);
        const FaceBasis face = face_basis(alpha, knots);
        const Eigen::VectorXd xi = face.inv_l1.back();
        const Eigen::MatrixXd surrogate =
            (xi.asDiagonal() * (fg.trunc * fg.trunc.transpose())) /
            static_cast<double>(sched.grid);
        const Eigen::MatrixXd inverse =
            Eigen::PartialPivLU<Eigen::MatrixXd>(surrogate).solve(
                Eigen::MatrixXd::Identity(surrogate.rows(), surrogate.cols()));
        std::ostringstream tag;
        tag << "m=" << m << " K=" << K << " J=" << sched.factor << " L=" << sched.grid;
        sweep.records.push_back(bound_record(id, "grid-gramian-inverse-ceiling", tag.str(),
                                             matrix_inf_norm(inverse),
                                             1.5 * sweep.rho_hat[m]));
    }

    // One extended-precision recomputation of the inverse norm.
    {
        const int m = orders.front();
        const int K = interval_counts.front();
        CounterRng knot_rng(seed, stream_id(0, 0, 0));
        const KnotSequence knots = sample_knots(K, mesh, knot_rng);
        CounterRng alpha_rng(seed, stream_id(0, 0, 1));
        const ActiveSet alpha = sample_active_set(SplineOrder(m), K, alpha_rng);
        const GramianReport report = gramian(alpha, knots);
        const double refined = inverse_inf_norm_long_double(report.gramian);
        std::ostringstream tag;
        tag << "m=" << m << " K=" << K;
        sweep.records.push_back(bound_record(id, "extended-precision-inverse-agreement", tag.str(),
                                             std::abs(report.inv_inf_norm - refined), 1e-8));
    }
    return sweep;
}

std::vector<ResultRecord> lipschitz_sweep(const ExperimentConfig& config, double rho_hat,
                                          int probe_pairs) {
    config.validate();
    if (config.kind != ExperimentKind::LipschitzSweep)
        throw std::invalid_argument("lipschitz_sweep needs kind 'lipschitz-sweep'");
    if (!(rho_hat > 0.0) || !std::isfinite(rho_hat))
        throw std::invalid_argument("rho_hat must be positive and finite");
    if (probe_pairs < 1) throw std::invalid_argument("probe_pairs must be at least 1");
    const TruthFunction& truth =
        truth_by_name(config.truth.empty() ? "square" : config.truth);
    const int m = config.m.value();
    const std::string id = to_string(config.kind);

    struct TaskResult {
        std::vector<ResultRecord> records;
        double exact = std::numeric_limits<double>::quiet_NaN();
        int intervals = 0;
    };
    const int tasks = static_cast<int>(config.grid.size()) * config.replicates;
    std::vector<TaskResult> slots(static_cast<size_t>(tasks));

    parallel_for(tasks, [&](int task) {
        const int cell = task / config.replicates;
        const int rep = task % config.replicates;
        const GridCell& gc = config.grid[static_cast<size_t>(cell)];
        auto& slot = slots[static_cast<size_t>(task)];
        slot.intervals = gc.intervals;
        const auto started = Clock::now();
        std::ostringstream tag;
        tag << cell_params(m, gc.intervals, gc.n) << " rep=" << rep;
        const std::string params = tag.str();

        CounterRng knot_rng(config.seed, stream_id(cell, rep, 0));
        const KnotSequence knots = sample_knots(gc.intervals, config.mesh, knot_rng);
        CounterRng design_rng(config.seed, stream_id(cell, rep, 1));
        const DesignPoints design = sample_design(gc.n, config.mesh, design_rng);
        const std::uint64_t noise_seed =
            CounterRng(config.seed, stream_id(cell, rep, 2)).next_u64();
        const Eigen::VectorXd y = simulate_model(truth.f, design, config.sigma, noise_seed);
        const DesignSystem system = build_design_system(config.m, knots, design, y);

        const double ceiling = 1.5 * 9.0 * m * rho_hat / (4.0 * knots.c_lower());
        if (gc.intervals <= 9) {
            slot.exact = lipschitz_constant(system, LipschitzMode::Exact);
            slot.records.push_back(
                bound_record(id, "exact-lipschitz-ceiling", params, slot.exact, ceiling));
        }
        const std::uint64_t probe_seed =
            CounterRng(config.seed, stream_id(cell, rep, 3)).next_u64();
        const double probe =
            lipschitz_constant(system, LipschitzMode::Probe, probe_seed, probe_pairs);
        if (std::isfinite(slot.exact)) {
            slot.records.push_back(
                bound_record(id, "probe-within-exact", params, probe, slot.exact + 1e-6));
        } else {
            slot.records.push_back(
                bound_record(id, "probe-lipschitz-ceiling", params, probe, ceiling));
        }
        const double elapsed = seconds_since(started);
        for (auto& record : slot.records) record.wall_seconds = elapsed;
    });

    std::vector<ResultRecord> records;
    for (auto& slot : slots)
        for (auto& record : slot.records) records.push_back(std::move(record));

    // Spread of the exact constant across tasks sharing K.
    std::map<int, std::pair<double, double>> spread;  // K -> (min, max)
    std::map<int, int> exact_counts;
    for (const auto& slot : slots) {
        if (!std::isfinite(slot.exact)) continue;
        auto [it, inserted] = spread.try_emplace(slot.intervals, slot.exact, slot.exact);
        if (!inserted) {
            it->second.first = std::min(it->second.first, slot.exact);
            it->second.second = std::max(it->second.second, slot.exact);
        }
        exact_counts[slot.intervals] += 1;
    }
    for (const auto& [K, extent] : spread) {
        if (exact_counts[K] < 2 || !(extent.first > 0.0)) continue;
        std::ostringstream tag;
        tag << "m=" << m << " K=" << K << " cells=" << exact_counts[K];
        records.push_back(bound_record(id, "exact-constant-plateau", tag.str(),
                                       (extent.second - extent.first) / extent.first, 0.10));
    }
    return records;
}

std::vector<ResultRecord> rate_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.kind != ExperimentKind::BiasRate &&
        config.kind != ExperimentKind::StochasticRate && config.kind != ExperimentKind::TotalRisk)
        throw std::invalid_argument("rate_experiment needs a rate kind");
    if (config.grid.size() < 3)
        throw std::invalid_argument("rate experiments need at least 3 cells");
    const TruthFunction& truth = truth_by_name(config.truth);
    if (truth.holder.order().value() != config.m.value())
        throw std::invalid_argument("truth '" + truth.name + "' has order " +
                                    std::to_string(truth.holder.order().value()) +
                                    ", config asks for order " + std::to_string(config.m.value()));
    const bool stochastic = config.kind != ExperimentKind::BiasRate;
    if (config.kind == ExperimentKind::BiasRate && config.sigma != 0.0)
        throw std::invalid_argument("bias-rate runs are noise free; set sigma = 0");
    if (stochastic && !(config.sigma > 0.0))
        throw std::invalid_argument("stochastic rate experiments need sigma > 0");

    const int m = config.m.value();
    const std::string id = to_string(config.kind);
    constexpr int kGrid = 1001;
    std::vector<double> grid_x(kGrid);
    for (int g = 0; g < kGrid; ++g) grid_x[static_cast<size_t>(g)] = static_cast<double>(g) / (kGrid - 1);

    struct CellData {
        KnotSequence knots = KnotSequence::uniform(1);
        DesignPoints design = DesignPoints::uniform(1);
        std::vector<double> truth_grid;
        std::vector<double> projection_grid;
        double bias = 0.0;
        double seconds = 0.0;
    };
    const int cells = static_cast<int>(config.grid.size());
    std::vector<CellData> data(static_cast<size_t>(cells));

    parallel_for(cells, [&](int cell) {
        const GridCell& gc = config.grid[static_cast<size_t>(cell)];
        auto& cd = data[static_cast<size_t>(cell)];
        const auto started = Clock::now();
        CounterRng knot_rng(config.seed, stream_id(cell, 0, 0));
        cd.knots = sample_knots(gc.intervals, config.mesh, knot_rng);
        CounterRng design_rng(config.seed, stream_id(cell, 0, 1));
        cd.design = sample_design(gc.n, config.mesh, design_rng);
        Eigen::VectorXd f_values(cd.design.count());
        for (int i = 0; i < cd.design.count(); ++i) f_values(i) = truth.f(cd.design.point(i));
        const FitResult projection = project_noise_free(config.m, cd.knots, cd.design, f_values);
        cd.truth_grid.resize(static_cast<size_t>(kGrid));
        cd.projection_grid.resize(static_cast<size_t>(kGrid));
        for (int g = 0; g < kGrid; ++g) {
            const double x = grid_x[static_cast<size_t>(g)];
            cd.truth_grid[static_cast<size_t>(g)] = truth.f(x);
            cd.projection_grid[static_cast<size_t>(g)] = projection(x);
            cd.bias = std::max(cd.bias, std::abs(cd.projection_grid[static_cast<size_t>(g)] -
                                                 cd.truth_grid[static_cast<size_t>(g)]));
        }
        cd.seconds = seconds_since(started);
    });

    struct RepResult {
        double stochastic = 0.0;
        double total = 0.0;
    };
    std::vector<RepResult> reps;
    if (stochastic) {
        const int fits = cells * config.replicates;
        reps.resize(static_cast<size_t>(fits));
        parallel_for(fits, [&](int task) {
            const int cell = task / config.replicates;
            const int rep = task % config.replicates;
            const CellData& cd = data[static_cast<size_t>(cell)];
            const std::uint64_t noise_seed =
                CounterRng(config.seed, stream_id(cell, rep, 2)).next_u64();
            const Eigen::VectorXd y =
                simulate_model(truth.f, cd.design, config.sigma, noise_seed);
            const FitResult estimate = fit(config.m, cd.knots, cd.design, y);
            auto& rr = reps[static_cast<size_t>(task)];
            for (int g = 0; g < kGrid; ++g) {
                const double value = estimate(grid_x[static_cast<size_t>(g)]);
                rr.stochastic = std::max(
                    rr.stochastic,
                    std::abs(value - cd.projection_grid[static_cast<size_t>(g)]));
                rr.total = std::max(
                    rr.total, std::abs(value - cd.truth_grid[static_cast<size_t>(g)]));
            }
        });
    }

    std::vector<ResultRecord> records;
    std::vector<double> errors(static_cast<size_t>(cells));
    std::vector<double> predictors(static_cast<size_t>(cells));
    for (int cell = 0; cell < cells; ++cell) {
        const GridCell& gc = config.grid[static_cast<size_t>(cell)];
        const CellData& cd = data[static_cast<size_t>(cell)];
        std::ostringstream tag;
        tag << cell_params(m, gc.intervals, gc.n) << " reps=" << config.replicates;
        const std::string params = tag.str();

        ResultRecord bias = bound_record(id, "bias-sup-error", params, cd.bias,
                                         std::numeric_limits<double>::quiet_NaN());
        bias.wall_seconds = cd.seconds;
        records.push_back(std::move(bias));

        double stochastic_mean = 0.0;
        double total_mean = 0.0;
        double triangle_slack = -std::numeric_limits<double>::infinity();
        if (stochastic) {
            for (int rep = 0; rep < config.replicates; ++rep) {
                const RepResult& rr =
                    reps[static_cast<size_t>(cell * config.replicates + rep)];
                stochastic_mean += rr.stochastic;
                total_mean += rr.total;
                triangle_slack = std::max(triangle_slack, rr.total - cd.bias - rr.stochastic);
            }
            stochastic_mean /= config.replicates;
            total_mean /= config.replicates;
            records.push_back(bound_record(id, "stochastic-mean-error", params, stochastic_mean,
                                           std::numeric_limits<double>::quiet_NaN()));
            if (config.kind == ExperimentKind::TotalRisk) {
                records.push_back(bound_record(id, "total-mean-error", params, total_mean,
                                               std::numeric_limits<double>::quiet_NaN()));
                records.push_back(
                    bound_record(id, "risk-triangle-slack", params, triangle_slack, 0.0));
            }
        }

        const double log_n = std::log(static_cast<double>(gc.n));
        const double deviation = std::sqrt(gc.intervals * log_n / gc.n);
        switch (config.kind) {
            case ExperimentKind::BiasRate:
                errors[static_cast<size_t>(cell)] = cd.bias;
                predictors[static_cast<size_t>(cell)] =
                    std::pow(static_cast<double>(gc.intervals), -truth.holder.gamma);
                break;
            case ExperimentKind::StochasticRate:
                errors[static_cast<size_t>(cell)] = stochastic_mean;
                predictors[static_cast<size_t>(cell)] = deviation;
                break;
            default:
                errors[static_cast<size_t>(cell)] = total_mean;
                predictors[static_cast<size_t>(cell)] =
                    std::pow(static_cast<double>(gc.intervals), -truth.holder.gamma) + deviation;
                break;
        }
    }

    // Consecutive-cell consistency of the stochastic error against the
    // deviation predictor.
    if (config.kind == ExperimentKind::StochasticRate) {
        for (int cell = 0; cell + 1 < cells; ++cell) {
            const double e0 = errors[static_cast<size_t>(cell)];
            const double e1 = errors[static_cast<size_t>(cell + 1)];
            const double p0 = predictors[static_cast<size_t>(cell)];
            const double p1 = predictors[static_cast<size_t>(cell + 1)];
            if (!(e0 > 0.0) || !(e1 > 0.0)) continue;
            const double ratio = (e0 / e1) / (p0 / p1);
            std::ostringstream tag;
            tag << "cells=" << cell << "," << cell + 1 << " n="
                << config.grid[static_cast<size_t>(cell)].n << ","
                << config.grid[static_cast<size_t>(cell + 1)].n;
            records.push_back(bound_record(id, "error-ratio-consistency", tag.str(),
                                           std::max(ratio, 1.0 / ratio), 2.0));
        }
    }

    // Flag (never fail) cells whose error grew while the predictor shrank.
    {
        std::vector<int> order(static_cast<size_t>(cells));
        for (int cell = 0; cell < cells; ++cell) order[static_cast<size_t>(cell)] = cell;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return predictors[static_cast<size_t>(a)] > predictors[static_cast<size_t>(b)];
        });
        for (size_t i = 1; i < order.size(); ++i) {
            const double prev = errors[static_cast<size_t>(order[i - 1])];
            const double curr = errors[static_cast<size_t>(order[i])];
            if (prev > 0.0 && curr > prev) {
                std::ostringstream tag;
                tag << "cell=" << order[i] << " n="
                    << config.grid[static_cast<size_t>(order[i])].n << " K="
                    << config.grid[static_cast<size_t>(order[i])].intervals;
                records.push_back(bound_record(id, "rate-cell-preasymptotic", tag.str(),
                                               curr / prev,
                                               std::numeric_limits<double>::quiet_NaN()));
            }
        }
    }

    const double floor = 1e-12;
    const bool degenerate =
        std::all_of(errors.begin(), errors.end(), [&](double e) { return e <= floor; });
    if (degenerate) {
        const double worst = *std::max_element(errors.begin(), errors.end());
        records.push_back(bound_record(id, "rate-degenerate-zero", "all cells", worst,
                                       std::numeric_limits<double>::quiet_NaN()));
        return records;
    }
    std::vector<double> log_pred;
    std::vector<double> log_err;
    for (int cell = 0; cell < cells; ++cell) {
        if (errors[static_cast<size_t>(cell)] <= floor) continue;
        log_pred.push_back(std::log(predictors[static_cast<size_t>(cell)]));
        log_err.push_back(std::log(errors[static_cast<size_t>(cell)]));
    }
    if (log_pred.size() < 3) {
        records.push_back(bound_record(id, "rate-degenerate-zero", "most cells at zero error",
                                       floor, std::numeric_limits<double>::quiet_NaN()));
        return records;
    }
    const double slope = ls_slope(log_pred, log_err);
    std::ostringstream tag;
    tag << "cells=" << log_pred.size() << " slope=" << format_double(slope);
    if (log_pred.size() >= 4) {
        records.push_back(
            bound_record(id, "rate-slope-window", tag.str(), std::abs(slope - 1.0), 0.3));
    } else {
        records.push_back(bound_record(id, "rate-slope", tag.str(), slope,
                                       std::numeric_limits<double>::quiet_NaN()));
    }
    return records;
}

} // namespace shapespline
