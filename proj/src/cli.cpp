#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "shapespline/csv.hpp"
#include "shapespline/errors.hpp"
#include "shapespline/experiments.hpp"
#include "shapespline/qp.hpp"

// Command-line front end.  Exit codes: 0 when every declared check passed,
// 1 when a check failed or a computation broke down, 2 for malformed input
// or usage errors.

namespace shapespline {

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFailedCheck = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> items;
    std::string current;
    std::istringstream in(text);
    while (std::getline(in, current, sep)) items.push_back(current);
    return items;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> values;
    for (const auto& item : split_list(text, ',')) {
        try {
            size_t used = 0;
            const int value = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            values.push_back(value);
        } catch (const std::exception&) {
            throw std::invalid_argument(what + ": expected a comma-separated integer list, got '" +
                                        text + "'");
        }
    }
    if (values.empty()) throw std::invalid_argument(what + ": the list is empty");
    return values;
}

// "n:K,n:K" pairs for experiment cells.
std::vector<GridCell> parse_cells(const std::string& text) {
    std::vector<GridCell> cells;
    for (const auto& item : split_list(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("--cells: expected n:K pairs, got '" + item + "'");
        try {
            size_t used = 0;
            const int n = std::stoi(item.substr(0, colon), &used);
            if (used != colon) throw std::invalid_argument(item);
            const std::string k_part = item.substr(colon + 1);
            const int k = std::stoi(k_part, &used);
            if (used != k_part.size()) throw std::invalid_argument(item);
            cells.push_back({n, k});
        } catch (const std::exception&) {
            throw std::invalid_argument("--cells: expected n:K pairs, got '" + item + "'");
        }
    }
    if (cells.empty()) throw std::invalid_argument("--cells: the list is empty");
    return cells;
}

// Flat key=value file; '#' starts a comment line.  Values fill in flags the
// command line did not set; explicit flags win.
std::map<std::string, std::string> load_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(path + ":0: cannot open config file");
    std::map<std::string, std::string> values;
    std::string line;
    long line_number = 0;
    auto trim = [](std::string text) {
        const auto lo = text.find_first_not_of(" \t\r");
        if (lo == std::string::npos) return std::string();
        const auto hi = text.find_last_not_of(" \t\r");
        return text.substr(lo, hi - lo + 1);
    };
    while (std::getline(in, line)) {
        ++line_number;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                        ": expected key=value, got '" + body + "'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                        ": empty key before '='");
        values[key] = value;
    }
    return values;
}

void write_text_file(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file '" + path + "'");
    out << content;
}

void print_record_table(const std::vector<ResultRecord>& records) {
    struct Row {
        int count = 0;
        int failed = 0;
        double worst = std::numeric_limits<double>::quiet_NaN();
    };
    std::map<std::string, Row> rows;
    for (const auto& r : records) {
        auto& row = rows[r.check];
        row.count += 1;
        if (!r.passed) row.failed += 1;
        if (!std::isnan(r.margin) && (std::isnan(row.worst) || r.margin < row.worst))
            row.worst = r.margin;
    }
    size_t width = 5;
    for (const auto& [check, row] : rows) width = std::max(width, check.size());
    std::cout << std::left << std::setw(static_cast<int>(width) + 2) << "check" << std::right
              << std::setw(8) << "records" << std::setw(8) << "failed" << std::setw(16)
              << "worst margin" << '\n';
    for (const auto& [check, row] : rows) {
        std::cout << std::left << std::setw(static_cast<int>(width) + 2) << check << std::right
                  << std::setw(8) << row.count << std::setw(8) << row.failed;
        if (std::isnan(row.worst)) {
            std::cout << std::setw(16) << "-";
        } else {
            std::ostringstream margin;
            margin << std::setprecision(4) << std::scientific << row.worst;
            std::cout << std::setw(16) << margin.str();
        }
        std::cout << '\n';
    }
}

// Writes records/summary files, prints the aggregate table, and converts
// the outcome into the exit code.
int finish_suite(const std::string& experiment, const std::vector<ResultRecord>& records,
                 const std::map<std::string, std::string>& echo, const std::string& output,
                 const std::string& summary) {
    if (!output.empty()) write_text_file(output, records_csv(records));
    if (!summary.empty()) write_text_file(summary, records_summary_json(experiment, echo, records));
    print_record_table(records);
    const long failed = std::count_if(records.begin(), records.end(),
                                      [](const ResultRecord& r) { return !r.passed; });
    std::cout << experiment << ": " << records.size() << " records, " << failed << " failed -> "
              << (failed == 0 ? "PASS" : "FAIL") << '\n';
    return failed == 0 ? kExitPass : kExitFailedCheck;
}

std::string format_u64(std::uint64_t value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

int run_fit(const std::string& input, int m, int knots, int grid, double c_omega,
            const std::string& output, const std::string& coefficients) {
    if (m < 1 || m > 10) throw std::invalid_argument("--m must be between 1 and 10");
    if (knots < 1) throw std::invalid_argument("--knots must be at least 1");
    if (grid < 2) throw std::invalid_argument("--grid must be at least 2");
    const XySeries series = read_xy_csv_file(input);
    if (series.x.front() != 0.0 || series.x.back() != 1.0)
        throw std::invalid_argument(input + ": design points must start at 0 and end at 1 (got " +
                                    format_double(series.x.front()) + " .. " +
                                    format_double(series.x.back()) + "); rescale the data first");
    const DesignPoints design(series.x, c_omega, MeshPolicy::Relaxed);
    if (!design.in_mesh_class())
        std::cerr << "warning: design gaps exceed c_omega/n = " << format_double(c_omega) << "/"
                  << (design.count() - 1)
                  << "; the computed fit is fine but class-based guarantees do not apply\n";
    const KnotSequence knot_seq = KnotSequence::uniform(knots);
    Eigen::VectorXd y(static_cast<Eigen::Index>(series.y.size()));
    for (size_t i = 0; i < series.y.size(); ++i) y(static_cast<Eigen::Index>(i)) = series.y[i];
    const FitResult result = fit(SplineOrder(m), knot_seq, design, y);

    std::ostringstream evals;
    evals << "x,fitted\n";
    for (int g = 0; g < grid; ++g) {
        const double x = static_cast<double>(g) / (grid - 1);
        evals << format_double(x) << ',' << format_double(result(x)) << '\n';
    }
    write_text_file(output, evals.str());
    if (!coefficients.empty()) {
        std::ostringstream coeff;
        coeff << "index,coefficient\n";
        for (Eigen::Index i = 0; i < result.coefficients.size(); ++i)
            coeff << (i + 1) << ',' << format_double(result.coefficients(i)) << '\n';
        write_text_file(coefficients, coeff.str());
    }
    std::cerr << "fit: m=" << m << " K=" << knots << " points=" << design.count()
              << " active-constraints=" << result.active.active().size() << '\n';
    return kExitPass;
}

MeshConstants mesh_from(double c_omega, double c_lower, double c_upper) {
    MeshConstants mesh;
    mesh.c_omega = c_omega;
    mesh.c_lower = c_lower;
    mesh.c_upper = c_upper;
    return mesh;
}

} // namespace

int cli_run(int argc, const char* const* argv) {
    CLI::App app{"Shape-constrained B-spline regression toolkit"};
    app.require_subcommand(1);

    // Shared option state.
    std::string config_path;
    std::string input;
    std::string output = "-";
    std::string summary;
    std::string coefficients;
    std::string truth = "square";
    std::string kind_text = "bias";
    std::string cells_text;
    std::string n_list_text;
    std::string k_list_text = "10,20,40";
    std::string orders_text = "1,2,3";
    int m = 2;
    int knots = 8;
    int grid = 1001;
    int replicates = 1;
    int knot_samples = 50;
    int alpha_samples = 20;
    int pairs = 10000;
    int k_fixed = 5;
    int n_points = 256;
    double sigma = 0.0;
    double q_exponent = 3.0;
    double c_omega = 1.0;
    double c_lower = 1.0;
    double c_upper = 1.0;
    double rho_override = 0.0;
    std::uint64_t seed = 0;

    const auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "Flat key=value file supplying defaults for unset flags");
    };
    const auto add_outputs = [&](CLI::App* cmd) {
        cmd->add_option("--output", output, "Records CSV path ('-' for stdout, empty to skip)");
        cmd->add_option("--summary", summary, "JSON summary path");
    };
    const auto add_mesh = [&](CLI::App* cmd, bool with_omega) {
        if (with_omega) cmd->add_option("--c-omega", c_omega, "Design gap constant (>= 1)");
        cmd->add_option("--c-lower", c_lower, "Knot gap lower constant (0 < c <= 1)");
        cmd->add_option("--c-upper", c_upper, "Knot gap upper constant (>= 1)");
    };

    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a shape-constrained spline to x,y data");
    fit_cmd->add_option("--input", input, "Input CSV with header x,y")->required();
    fit_cmd->add_option("--m", m, "Spline order (1 monotone, 2 convex, ...)")->required();
    fit_cmd->add_option("--knots", knots, "Number of uniform knot intervals K")->required();
    fit_cmd->add_option("--grid", grid, "Evaluation grid size for the output");
    fit_cmd->add_option("--c-omega", c_omega, "Design gap constant for the class warning");
    fit_cmd->add_option("--output", output, "Fitted values CSV ('-' for stdout)");
    fit_cmd->add_option("--coefficients", coefficients, "Optional coefficient CSV path");
    add_config(fit_cmd);

    CLI::App* sim_cmd = app.add_subcommand("simulate", "Sample y = f(x) + sigma z on a uniform design");
    sim_cmd->add_option("--truth", truth, "Truth name from the catalog")->required();
    sim_cmd->add_option("--sigma", sigma, "Noise level (>= 0)")->required();
    sim_cmd->add_option("--n", n_points, "Number of design intervals")->required();
    sim_cmd->add_option("--seed", seed, "RNG seed")->required();
    sim_cmd->add_option("--output", output, "Output CSV ('-' for stdout)");
    add_config(sim_cmd);

    CLI::App* bounds_cmd = app.add_subcommand("bounds", "Certify the finite-sample inequalities");
    bounds_cmd->add_option("--orders", orders_text, "Comma-separated spline orders");
    bounds_cmd->add_option("--cells", cells_text, "n:K pairs (default 48:4,96:6,128:8)");
    bounds_cmd->add_option("--replicates", replicates, "Sampled instances per cell");
    bounds_cmd->add_option("--seed", seed, "RNG seed")->required();
    add_mesh(bounds_cmd, true);
    add_outputs(bounds_cmd);
    add_config(bounds_cmd);

    CLI::App* gramian_cmd = app.add_subcommand("gramian", "Sweep inverse-Gramian norms");
    gramian_cmd->add_option("--orders", orders_text, "Comma-separated spline orders");
    gramian_cmd->add_option("--k-list", k_list_text, "Comma-separated interval counts");
    gramian_cmd->add_option("--knot-samples", knot_samples, "Meshes per cell");
    gramian_cmd->add_option("--alpha-samples", alpha_samples, "Active sets per mesh");
    gramian_cmd->add_option("--seed", seed, "RNG seed")->required();
    add_mesh(gramian_cmd, false);
    add_outputs(gramian_cmd);
    add_config(gramian_cmd);

    CLI::App* lip_cmd = app.add_subcommand("lipschitz", "Exact and probed Lipschitz constants");
    lip_cmd->add_option("--m", m, "Spline order");
    lip_cmd->add_option("--k", k_fixed, "Knot intervals K (exact mode needs K <= 9)");
    lip_cmd->add_option("--n-list", n_list_text, "Comma-separated design sizes");
    lip_cmd->add_option("--truth", truth, "Truth used to generate probe data");
    lip_cmd->add_option("--sigma", sigma, "Noise level for probe data");
    lip_cmd->add_option("--replicates", replicates, "Sampled instances per cell");
    lip_cmd->add_option("--pairs", pairs, "Probe pairs per instance");
    lip_cmd->add_option("--rho", rho_override, "Inverse-Gramian norm bound (0: estimate)");
    lip_cmd->add_option("--seed", seed, "RNG seed")->required();
    add_mesh(lip_cmd, true);
    add_outputs(lip_cmd);
    add_config(lip_cmd);

    CLI::App* rates_cmd = app.add_subcommand("rates", "Convergence-rate study");
    rates_cmd->add_option("--kind", kind_text, "bias, stochastic, or total");
    rates_cmd->add_option("--truth", truth, "Truth name from the catalog")->required();
    rates_cmd->add_option("--m", m, "Spline order (must match the truth)")->required();
    rates_cmd->add_option("--cells", cells_text, "n:K pairs; overrides --n-list/--q");
    rates_cmd->add_option("--n-list", n_list_text, "Design sizes; K from the schedule");
    rates_cmd->add_option("--q", q_exponent, "Schedule exponent for K = ceil((n/log n)^(1/q))");
    rates_cmd->add_option("--sigma", sigma, "Noise level");
    rates_cmd->add_option("--replicates", replicates, "Monte Carlo replicates per cell");
    CLI::Option* rates_seed = rates_cmd->add_option("--seed", seed, "RNG seed (required unless bias)");
    add_mesh(rates_cmd, true);
    add_outputs(rates_cmd);
    add_config(rates_cmd);

    CLI::App* report_cmd = app.add_subcommand("report", "Summarize a records CSV");
    report_cmd->add_option("--input", input, "Records CSV produced by a suite")->required();
    add_config(report_cmd);

    try {
        // Apply config-file defaults: flags given on the command line win,
        // file values fill in the rest.
        std::vector<std::string> args(argv + 1, argv + argc);
        std::string pre_config;
        for (size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) pre_config = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) pre_config = args[i].substr(9);
        }
        if (!pre_config.empty()) {
            const auto defaults = load_flat_config(pre_config);
            for (const auto& [key, value] : defaults) {
                const std::string flag = "--" + key;
                const bool present = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
                    return a == flag || a.rfind(flag + "=", 0) == 0;
                });
                if (!present) {
                    args.push_back(flag);
                    args.push_back(value);
                }
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);

        if (*fit_cmd) return run_fit(input, m, knots, grid, c_omega, output, coefficients);

        if (*sim_cmd) {
            const TruthFunction& f = truth_by_name(truth);
            if (n_points < 1) throw std::invalid_argument("--n must be at least 1");
            if (!(sigma >= 0.0)) throw std::invalid_argument("--sigma must be nonnegative");
            const DesignPoints design = DesignPoints::uniform(n_points);
            const Eigen::VectorXd y = simulate_model(f.f, design, sigma, seed);
            XySeries series;
            for (int i = 0; i < design.count(); ++i) {
                series.x.push_back(design.point(i));
                series.y.push_back(y(i));
            }
            std::ostringstream out;
            write_xy_csv(out, series);
            write_text_file(output, out.str());
            return kExitPass;
        }

        if (*bounds_cmd) {
            ExperimentConfig config;
            config.kind = ExperimentKind::Bounds;
            config.seed = seed;
            config.replicates = replicates;
            config.mesh = mesh_from(c_omega, c_lower, c_upper);
            config.grid = parse_cells(cells_text.empty() ? "48:4,96:6,128:8" : cells_text);
            std::vector<ResultRecord> records;
            for (const int order : parse_int_list(orders_text, "--orders")) {
                config.m = SplineOrder(order);
                auto batch = run_bound_suite(config);
                records.insert(records.end(), std::make_move_iterator(batch.begin()),
                               std::make_move_iterator(batch.end()));
            }
            const std::map<std::string, std::string> echo = {
                {"cells", cells_text.empty() ? "48:4,96:6,128:8" : cells_text},
                {"c_lower", format_double(c_lower)},
                {"c_omega", format_double(c_omega)},
                {"c_upper", format_double(c_upper)},
                {"kind", "bounds"},
                {"orders", orders_text},
                {"replicates", std::to_string(replicates)},
                {"seed", format_u64(seed)},
            };
            return finish_suite("bounds", records, echo, output, summary);
        }

        if (*gramian_cmd) {
            const auto orders = parse_int_list(orders_text, "--orders");
            const auto k_list = parse_int_list(k_list_text, "--k-list");
            const GramianSweep sweep =
                gramian_sweep(orders, k_list, knot_samples, alpha_samples, seed,
                              mesh_from(1.0, c_lower, c_upper));
            for (const auto& [order, rho] : sweep.rho_hat)
                std::cout << "rho_hat[m=" << order << "] = " << format_double(rho) << '\n';
            const std::map<std::string, std::string> echo = {
                {"alpha_samples", std::to_string(alpha_samples)},
                {"c_lower", format_double(c_lower)},
                {"c_upper", format_double(c_upper)},
                {"k_list", k_list_text},
                {"kind", "gramian-sweep"},
                {"knot_samples", std::to_string(knot_samples)},
                {"orders", orders_text},
                {"seed", format_u64(seed)},
            };
            return finish_suite("gramian-sweep", sweep.records, echo, output, summary);
        }

        if (*lip_cmd) {
            if (n_list_text.empty()) n_list_text = "128,512,2048";
            ExperimentConfig config;
            config.kind = ExperimentKind::LipschitzSweep;
            config.m = SplineOrder(m);
            config.seed = seed;
            config.replicates = replicates;
            config.mesh = mesh_from(c_omega, c_lower, c_upper);
            config.sigma = sigma > 0.0 ? sigma : 0.25;
            config.truth = truth;
            for (const int n : parse_int_list(n_list_text, "--n-list"))
                config.grid.push_back({n, k_fixed});
            double rho = rho_override;
            if (!(rho > 0.0)) {
                const GramianSweep sweep = gramian_sweep({m}, {10, 20, 40}, 15, 8, seed ^ 0x9E3779B97F4A7C15ULL,
                                                         mesh_from(1.0, c_lower, c_upper));
                rho = sweep.rho_hat.at(m);
                std::cout << "rho_hat[m=" << m << "] = " << format_double(rho)
                          << " (estimated)\n";
            }
            const auto records = lipschitz_sweep(config, rho, pairs);
            const std::map<std::string, std::string> echo = {
                {"c_lower", format_double(c_lower)},
                {"c_omega", format_double(c_omega)},
                {"c_upper", format_double(c_upper)},
                {"k", std::to_string(k_fixed)},
                {"kind", "lipschitz-sweep"},
                {"m", std::to_string(m)},
                {"n_list", n_list_text},
                {"pairs", std::to_string(pairs)},
                {"replicates", std::to_string(replicates)},
                {"rho", format_double(rho)},
                {"seed", format_u64(seed)},
                {"sigma", format_double(config.sigma)},
                {"truth", truth},
            };
            return finish_suite("lipschitz-sweep", records, echo, output, summary);
        }

        if (*rates_cmd) {
            ExperimentConfig config;
            if (kind_text == "bias") {
                config.kind = ExperimentKind::BiasRate;
            } else if (kind_text == "stochastic") {
                config.kind = ExperimentKind::StochasticRate;
            } else if (kind_text == "total") {
                config.kind = ExperimentKind::TotalRisk;
            } else {
                throw std::invalid_argument("--kind must be bias, stochastic, or total");
            }
            if (config.kind != ExperimentKind::BiasRate && rates_seed->count() == 0)
                throw std::invalid_argument("--seed is required for stochastic experiments");
            config.m = SplineOrder(m);
            config.seed = seed;
            config.replicates = replicates;
            config.mesh = mesh_from(c_omega, c_lower, c_upper);
            config.sigma = sigma;
            config.truth = truth;
            if (!cells_text.empty()) {
                config.grid = parse_cells(cells_text);
            } else if (!n_list_text.empty()) {
                for (const int n : parse_int_list(n_list_text, "--n-list"))
                    config.grid.push_back({n, schedule_intervals(n, q_exponent)});
            } else {
                throw std::invalid_argument("rates needs --cells or --n-list");
            }
            const auto records = rate_experiment(config);
            const std::map<std::string, std::string> echo = {
                {"cells", cells_text},
                {"kind", kind_text},
                {"m", std::to_string(m)},
                {"n_list", n_list_text},
                {"q", format_double(q_exponent)},
                {"replicates", std::to_string(replicates)},
                {"seed", format_u64(seed)},
                {"sigma", format_double(sigma)},
                {"truth", truth},
            };
            return finish_suite(to_string(config.kind), records, echo, output, summary);
        }

        if (*report_cmd) {
            std::ifstream in(input);
            if (!in) throw CsvError(input + ":0: cannot open file");
            const auto records = read_records_csv(in, input);
            print_record_table(records);
            const long failed = std::count_if(records.begin(), records.end(),
                                              [](const ResultRecord& r) { return !r.passed; });
            std::cout << "report: " << records.size() << " records, " << failed << " failed -> "
                      << (failed == 0 ? "PASS" : "FAIL") << '\n';
            return failed == 0 ? kExitPass : kExitFailedCheck;
        }

        std::cerr << "no subcommand selected\n";
        return kExitUsage;
    } catch (const CLI::CallForHelp& help) {
        std::cout << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& error) {
        std::cerr << error.what() << '\n';
        return kExitUsage;
    } catch (const CsvError& error) {
        std::cerr << error.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& error) {
        std::cerr << error.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& error) {
        std::cerr << "computation failed: " << error.what() << '\n';
        return kExitFailedCheck;
    }
}

} // namespace shapespline
