#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tvreg/common.hpp"
#include "tvreg/covariance.hpp"
#include "tvreg/processes.hpp"
#include "tvreg/replication.hpp"
#include "tvreg/report.hpp"
#include "tvreg/selection.hpp"
#include "tvreg/testing.hpp"

namespace {

using nlohmann::json;
using namespace tvreg;

struct GlobalOpts {
    std::string kernel = "epanechnikov";
    std::uint64_t seed = 1;
    std::string out;
    int grid_size = 0;
};

struct InputOpts {
    std::string path;
    CsvSchema schema;
};

void add_global(CLI::App* cmd, GlobalOpts& g) {
    cmd->add_option("--kernel", g.kernel, "Kernel name: epanechnikov | bartlett");
    cmd->add_option("--seed", g.seed, "Master seed");
    cmd->add_option("--out", g.out, "Output path (JSON report; plot CSVs derive from it)");
    cmd->add_option("--grid-size", g.grid_size, "Evaluation grid size (0 = observation times)");
}

void add_input(CLI::App* cmd, InputOpts& in) {
    cmd->add_option("--input", in.path, "Input CSV (header row required)")->required();
    cmd->add_option("--response", in.schema.response, "Response column (default: first)");
    cmd->add_option("--predictors", in.schema.predictors,
                    "Predictor columns (default: all others)");
    cmd->add_option("--lags", in.schema.lags, "Response lags appended as columns");
    cmd->add_flag("--standardize", in.schema.standardize,
                  "Scale every variable to zero mean, unit variance");
    cmd->add_flag("--intercept", in.schema.intercept, "Prepend a constant column");
}

json schema_config(const InputOpts& in) {
    json c;
    c["input"] = in.path;
    c["response"] = in.schema.response;
    c["predictors"] = in.schema.predictors;
    c["lags"] = in.schema.lags;
    c["standardize"] = in.schema.standardize;
    c["intercept"] = in.schema.intercept;
    return c;
}

double resolve_bandwidth(const std::string& policy, const RegressionData& data,
                         const Kernel& kernel, bool full_gcv) {
    if (policy != "auto") {
        try {
            return std::stod(policy);
        } catch (const std::exception&) {
            throw config_error("bandwidth must be 'auto' or a number, got: " + policy);
        }
    }
    if (!full_gcv) return std::pow(static_cast<double>(data.n()), -0.2);
    const LocalLinearFit pilot =
        local_linear_fit(data, kernel, std::pow(static_cast<double>(data.n()), -0.2));
    const BandedCovariance gamma = banded_gamma(pilot.residuals);
    return select_gcv_bandwidth(data, kernel, default_b_grid(), gamma);
}

std::vector<int> resolve_columns(const std::vector<std::string>& spec,
                                 const RegressionData& data) {
    std::vector<int> cols;
    for (const auto& token : spec) {
        int idx = -1;
        for (std::size_t j = 0; j < data.column_names.size(); ++j)
            if (data.column_names[j] == token) idx = static_cast<int>(j);
        if (idx < 0) {
            try {
                idx = std::stoi(token);
            } catch (const std::exception&) {
                throw config_error("unknown column: " + token);
            }
            if (idx < 0 || idx >= data.p()) throw config_error("column index out of range: " + token);
        }
        cols.push_back(idx);
    }
    if (cols.empty()) throw config_error("restriction selects no columns");
    return cols;
}

void emit_or_print(const json& report, const std::string& out) {
    if (out.empty())
        std::cout << report.dump(2) << '\n';
    else
        emit_report(report, out);
}

int cmd_estimate(const GlobalOpts& g, const InputOpts& in, const std::string& bandwidth,
                 double level) {
    const Kernel kernel = Kernel::by_name(g.kernel);
    const RegressionData data = ingest_csv(in.path, in.schema);
    const double b = resolve_bandwidth(bandwidth, data, kernel, true);

    const EvaluationGrid grid = g.grid_size > 0 ? EvaluationGrid::uniform(g.grid_size)
                                                : EvaluationGrid::default_for(data.n());
    const LocalLinearFit fit = local_linear_fit(data, kernel, b, grid);
    const CovarianceField cov = estimate_covariance_field(data, fit, kernel);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(data.p(), data.p());
    const Theorem1Ci ci = theorem1_ci(fit, A, cov, level, kernel);

    json config;
    config["data"] = schema_config(in);
    config["kernel"] = g.kernel;
    config["seed"] = g.seed;
    config["grid_size"] = g.grid_size;
    config["bandwidth"] = b;
    config["bandwidth_policy"] = bandwidth;
    config["level"] = level;

    json report = report_skeleton("estimate", config);
    json res;
    res["columns"] = data.column_names;
    res["integrated_coefficients"] = std::vector<double>(ci.point.data(), ci.point.data() + ci.point.size());
    res["ci_lower"] = std::vector<double>(ci.lower.data(), ci.lower.data() + ci.lower.size());
    res["ci_upper"] = std::vector<double>(ci.upper.data(), ci.upper.data() + ci.upper.size());
    res["bias_diagnostic"] =
        std::vector<double>(ci.bias_diagnostic.data(), ci.bias_diagnostic.data() + ci.bias_diagnostic.size());
    res["hat_trace"] = fit.hat_trace;
    res["singular_grid_points"] = fit.n_singular;
    res["covariance"] = {{"varpi", cov.varpi},
                         {"tau", cov.tau},
                         {"rho", cov.rho},
                         {"truncation_lag", cov.truncation_lag}};
    report["results"] = res;
    emit_or_print(report, g.out);
    if (!g.out.empty()) emit_curves_csv(fit, data.column_names, g.out + ".curves.csv");
    return 0;
}

int cmd_test(const GlobalOpts& g, const InputOpts& in, const std::string& bandwidth,
             const std::vector<std::string>& restrict_spec, const std::string& null_spec,
             const std::string& weight, double alpha, int nsim) {
    if (nsim > 0 && nsim < 200)
        throw config_error("simulated calibration needs at least 200 replicates");
    const Kernel kernel = Kernel::by_name(g.kernel);
    const RegressionData data = ingest_csv(in.path, in.schema);
    const double b = resolve_bandwidth(bandwidth, data, kernel, false);

    const std::vector<int> cols = resolve_columns(restrict_spec, data);
    Hypothesis hyp;
    hyp.A = Eigen::MatrixXd::Zero(cols.size(), data.p());
    for (std::size_t r = 0; r < cols.size(); ++r) hyp.A(r, cols[r]) = 1.0;
    hyp.weight = weight_scheme_by_name(weight);
    if (null_spec == "estimate") {
        hyp.estimate_a = true;
    } else {
        std::vector<double> vals;
        std::stringstream ss(null_spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                vals.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw config_error("null value must be 'estimate' or numbers, got: " + tok);
            }
        }
        if (vals.size() != cols.size())
            throw config_error("null value dimension does not match restriction");
        hyp.a = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    }

    TestConfig tc;
    tc.b = b;
    tc.kernel = kernel;
    tc.alpha = alpha;
    tc.n_sim = nsim;
    tc.seed = g.seed;
    tc.grid_size = g.grid_size;
    const TestReport tr = run_test(data, hyp, tc);

    json config;
    config["data"] = schema_config(in);
    config["kernel"] = g.kernel;
    config["seed"] = g.seed;
    config["grid_size"] = g.grid_size;
    config["bandwidth"] = b;
    config["bandwidth_policy"] = bandwidth;
    config["restrict"] = restrict_spec;
    config["null"] = null_spec;
    config["weight"] = weight;
    config["alpha"] = alpha;
    config["nsim"] = nsim;

    json report = report_skeleton("test", config);
    json res;
    res["Tn"] = tr.Tn;
    res["centering"] = tr.centering;
    res["scale"] = tr.scale;
    res["Delta"] = tr.Delta;
    res["alpha"] = tr.alpha;
    res["critical_value"] = tr.critical_value;
    res["critical_source"] = tr.critical_source;
    res["p_value"] = tr.p_value;
    res["reject"] = tr.reject;
    res["n_sim"] = tr.n_sim;
    res["seed"] = tr.seed;
    report["results"] = res;
    emit_or_print(report, g.out);
    return 0;
}

int cmd_select(const GlobalOpts& g, const InputOpts& in, const std::string& bandwidth,
               const std::string& chi) {
    const Kernel kernel = Kernel::by_name(g.kernel);
    const RegressionData data = ingest_csv(in.path, in.schema);
    double chi_n = 0.0;
    if (chi != "auto") {
        try {
            chi_n = std::stod(chi);
        } catch (const std::exception&) {
            throw config_error("chi must be 'auto' or a number, got: " + chi);
        }
        if (!(chi_n > 0.0)) throw config_error("chi must be positive");
    }

    SelectionReport sel;
    if (bandwidth == "auto") {
        sel = two_stage_bandwidth(data, kernel, chi_n).selection;
    } else {
        sel = select_subset(data, kernel, resolve_bandwidth(bandwidth, data, kernel, false), chi_n);
    }

    json config;
    config["data"] = schema_config(in);
    config["kernel"] = g.kernel;
    config["seed"] = g.seed;
    config["bandwidth_policy"] = bandwidth;
    config["chi_policy"] = chi;

    json report = report_skeleton("select", config);
    json res;
    res["chi_n"] = sel.chi_n;
    res["chosen"] = sel.chosen;
    std::vector<std::string> chosen_names;
    for (int j : sel.chosen)
        chosen_names.push_back(j < static_cast<int>(data.column_names.size())
                                   ? data.column_names[j]
                                   : "col" + std::to_string(j));
    res["chosen_names"] = chosen_names;
    if (sel.bandwidth_pilot > 0.0) res["bandwidth_pilot"] = sel.bandwidth_pilot;
    if (sel.bandwidth_final > 0.0) res["bandwidth_final"] = sel.bandwidth_final;
    json cand = json::array();
    for (std::size_t k = 0; k < sel.candidates.size(); ++k) {
        json c;
        c["subset"] = sel.candidates[k];
        c["rss"] = sel.rss[k];
        c["vic"] = sel.vic[k];
        cand.push_back(c);
    }
    res["candidates"] = cand;
    report["results"] = res;
    emit_or_print(report, g.out);
    return 0;
}

int cmd_bandwidth(const GlobalOpts& g, const InputOpts& in, bool refine) {
    const Kernel kernel = Kernel::by_name(g.kernel);
    const RegressionData data = ingest_csv(in.path, in.schema);
    const TwoStageResult ts = two_stage_bandwidth(data, kernel);

    json config;
    config["data"] = schema_config(in);
    config["kernel"] = g.kernel;
    config["seed"] = g.seed;
    config["refine"] = refine;

    json report = report_skeleton("bandwidth", config);
    json res;
    res["bandwidth_pilot"] = ts.b_pilot;
    res["chosen"] = ts.selection.chosen;
    res["bandwidth_final"] = ts.b_final;
    res["gamma_band"] = ts.gamma.band;
    res["gamma_diag_shift"] = ts.gamma.diag_shift;
    if (refine) {
        RegressionData sub;
        sub.y = data.y;
        sub.X.resize(data.n(), ts.selection.chosen.size());
        for (std::size_t j = 0; j < ts.selection.chosen.size(); ++j)
            sub.X.col(j) = data.X.col(ts.selection.chosen[j]);
        const double lo = std::max(0.01, ts.b_final - 0.01);
        const double hi = std::min(0.99, ts.b_final + 0.01);
        res["bandwidth_refined"] = refine_bandwidth(sub, kernel, lo, hi, ts.gamma);
    }
    report["results"] = res;
    emit_or_print(report, g.out);
    return 0;
}

int cmd_simulate(const GlobalOpts& g, const std::string& model, int n) {
    if (g.out.empty()) throw config_error("simulate requires --out");
    if (model == "i") {
        write_regression_csv(simulate_model_i(n, g.seed).data, g.out);
    } else if (model == "ii") {
        write_regression_csv(simulate_model_ii(n, g.seed).data, g.out);
    } else if (model == "tvar") {
        // Demonstration specification: one smoothly varying lag coefficient.
        const std::vector<std::function<double(double)>> coeffs = {
            [](double t) { return 0.4 * std::sin(2.0 * 3.14159265358979323846 * t); }};
        const Eigen::VectorXd path = simulate_tvar(coeffs, NoiseSpec{}, n, 200, g.seed);
        Eigen::MatrixXd col(path.size(), 1);
        col.col(0) = path;
        emit_table_csv({"y"}, col, g.out);
    } else if (model == "ararch") {
        const Eigen::VectorXd path = simulate_ar_arch(n, g.seed);
        Eigen::MatrixXd col(path.size(), 1);
        col.col(0) = path;
        emit_table_csv({"y"}, col, g.out);
    } else {
        throw config_error("unknown model: " + model);
    }
    return 0;
}

int cmd_replicate(const GlobalOpts& g, const std::string& table, int reps, int n,
                  const std::string& model, const std::vector<double>& bandwidths,
                  const std::string& weight, const std::vector<double>& alphas, int nsim,
                  bool bandwidth_median) {
    ReplicationSpec spec;
    spec.table_id = table;
    spec.reps = reps;
    spec.n = n;
    spec.seed = g.seed;
    spec.model = model;
    spec.bandwidths = bandwidths;
    spec.weight = weight;
    spec.alphas = alphas;
    spec.n_sim = nsim;
    spec.kernel = Kernel::by_name(g.kernel);
    spec.bandwidth_median = bandwidth_median;
    const ReplicationSummary summary = run_replication(spec);

    json config;
    config["table"] = table;
    config["reps"] = reps;
    config["n"] = n;
    config["seed"] = g.seed;
    config["kernel"] = g.kernel;
    config["model"] = model;
    config["bandwidths"] = bandwidths;
    config["weight"] = weight;
    config["alphas"] = alphas;
    config["nsim"] = nsim;

    json report = report_skeleton("replicate", config);
    report["results"]["cells"] = summary.cells;
    report["results"]["reps"] = summary.reps;
    report["runtime_seconds"] = summary.runtime_seconds;
    emit_or_print(report, g.out);
    if (!g.out.empty() && summary.plot_data.size() > 0)
        emit_table_csv(summary.plot_header, summary.plot_data, g.out + ".plot.csv");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-varying coefficient regression toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    InputOpts in_est, in_test, in_sel, in_bw;

    auto* est = app.add_subcommand("estimate", "Fit coefficient curves and integrated CIs");
    add_global(est, g);
    add_input(est, in_est);
    std::string est_bandwidth = "auto";
    double est_level = 0.95;
    est->add_option("--bandwidth", est_bandwidth, "Bandwidth: auto | value");
    est->add_option("--level", est_level, "Confidence level");

    auto* tst = app.add_subcommand("test", "Constancy / restriction test");
    add_global(tst, g);
    add_input(tst, in_test);
    std::string tst_bandwidth = "auto", tst_null = "estimate", tst_weight = "identity";
    std::vector<std::string> tst_restrict;
    double tst_alpha = 0.05;
    int tst_nsim = 0;
    tst->add_option("--bandwidth", tst_bandwidth, "Bandwidth: auto | value");
    tst->add_option("--restrict", tst_restrict, "Columns whose coefficients are restricted")
        ->required();
    tst->add_option("--null", tst_null, "Null value: estimate | comma-separated numbers");
    tst->add_option("--weight", tst_weight, "identity | inverse_covariance | design_moment");
    tst->add_option("--alpha", tst_alpha, "Test level");
    tst->add_option("--nsim", tst_nsim, "Simulated-calibration replicates (0 = asymptotic)");

    auto* sel = app.add_subcommand("select", "VIC subset selection");
    add_global(sel, g);
    add_input(sel, in_sel);
    std::string sel_bandwidth = "auto", sel_chi = "auto";
    sel->add_option("--bandwidth", sel_bandwidth, "Bandwidth: auto | value");
    sel->add_option("--chi", sel_chi, "Penalty: auto | value");

    auto* bw = app.add_subcommand("bandwidth", "Two-stage bandwidth selection");
    add_global(bw, g);
    add_input(bw, in_bw);
    bool bw_refine = false;
    bw->add_flag("--refine", bw_refine, "Golden-section refinement around the grid minimum");

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
    add_global(sim, g);
    std::string sim_model;
    int sim_n = 500;
    sim->add_option("--model", sim_model, "i | ii | tvar | ararch")->required();
    sim->add_option("--n", sim_n, "Sample size");

    auto* rep = app.add_subcommand("replicate", "Monte Carlo study driver");
    add_global(rep, g);
    std::string rep_table, rep_model = "i", rep_weight = "identity";
    int rep_reps = 200, rep_n = 500, rep_nsim = 2000;
    std::vector<double> rep_bandwidths, rep_alphas;
    bool rep_bwmed = false;
    rep->add_option("--table", rep_table, "table1 | table2 | glrt_qq")->required();
    rep->add_option("--reps", rep_reps, "Replications");
    rep->add_option("--n", rep_n, "Sample size per replication");
    rep->add_option("--model", rep_model, "i | ii");
    rep->add_option("--bandwidth", rep_bandwidths, "Bandwidth(s)");
    rep->add_option("--weight", rep_weight, "identity | inverse_covariance | design_moment");
    rep->add_option("--alpha", rep_alphas, "Nominal level(s)");
    rep->add_option("--nsim", rep_nsim, "Calibration / bootstrap replicates");
    rep->add_flag("--bandwidth-median", rep_bwmed, "Also report the median two-stage bandwidth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (est->parsed()) return cmd_estimate(g, in_est, est_bandwidth, est_level);
        if (tst->parsed())
            return cmd_test(g, in_test, tst_bandwidth, tst_restrict, tst_null, tst_weight,
                            tst_alpha, tst_nsim);
        if (sel->parsed()) return cmd_select(g, in_sel, sel_bandwidth, sel_chi);
        if (bw->parsed()) return cmd_bandwidth(g, in_bw, bw_refine);
        if (sim->parsed()) return cmd_simulate(g, sim_model, sim_n);
        if (rep->parsed())
            return cmd_replicate(g, rep_table, rep_reps, rep_n, rep_model, rep_bandwidths,
                                 rep_weight, rep_alphas, rep_nsim, rep_bwmed);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
