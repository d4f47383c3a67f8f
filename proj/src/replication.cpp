#include "tvreg/replication.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tvreg/common.hpp"
#include "tvreg/processes.hpp"
#include "tvreg/rng.hpp"
#include "tvreg/selection.hpp"
#include "tvreg/stats.hpp"
#include "tvreg/testing.hpp"

namespace tvreg {

namespace {

SimulatedRegression simulate_by_name(const std::string& model, int n, std::uint64_t seed) {
    if (model == "i") return simulate_model_i(n, seed);
    if (model == "ii") return simulate_model_ii(n, seed);
    throw config_error("unknown model: " + model);
}

// Exact / superset / missing classification against the true active set.
enum class FitClass { under, correct, over };

FitClass classify(const std::vector<int>& chosen, const std::vector<int>& truth) {
    for (int j : truth)
        if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) return FitClass::under;
    return chosen.size() == truth.size() ? FitClass::correct : FitClass::over;
}

double pct(int count, int total) { return 100.0 * count / total; }

double pct_se(int count, int total) {
    const double p = static_cast<double>(count) / total;
    return 100.0 * std::sqrt(p * (1.0 - p) / total);
}

ReplicationSummary run_table1(const ReplicationSpec& spec) {
    std::vector<double> bs = spec.bandwidths;
    if (bs.empty())
        bs = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

    ReplicationSummary out;
    out.table_id = spec.table_id;
    out.reps = spec.reps;

    nlohmann::json rows = nlohmann::json::array();
    std::vector<double> two_stage;
    for (double b : bs) {
        int under = 0, correct = 0, over = 0;
        for (int r = 0; r < spec.reps; ++r) {
            try {
                const SimulatedRegression sim =
                    simulate_by_name(spec.model, spec.n, derive_seed(spec.seed, spec.table_id, r));
                const SelectionReport sel = select_subset(sim.data, spec.kernel, b);
                switch (classify(sel.chosen, sim.truth)) {
                    case FitClass::under: ++under; break;
                    case FitClass::correct: ++correct; break;
                    case FitClass::over: ++over; break;
                }
            } catch (const numeric_error& e) {
                throw numeric_error("replicate " + std::to_string(r) + ": " + e.what());
            }
        }
        nlohmann::json row;
        row["bandwidth"] = b;
        row["over_percent"] = pct(over, spec.reps);
        row["correct_percent"] = pct(correct, spec.reps);
        row["under_percent"] = pct(under, spec.reps);
        row["correct_se"] = pct_se(correct, spec.reps);
        rows.push_back(row);
    }
    if (spec.bandwidth_median) {
        for (int r = 0; r < spec.reps; ++r) {
            try {
                const SimulatedRegression sim =
                    simulate_by_name(spec.model, spec.n, derive_seed(spec.seed, spec.table_id, r));
                two_stage.push_back(two_stage_bandwidth(sim.data, spec.kernel).b_final);
            } catch (const numeric_error& e) {
                throw numeric_error("replicate " + std::to_string(r) + ": " + e.what());
            }
        }
    }

    out.cells["model"] = spec.model;
    out.cells["n"] = spec.n;
    out.cells["rows"] = rows;
    if (!two_stage.empty()) out.cells["median_two_stage_bandwidth"] = median(two_stage);
    return out;
}

// Constancy restriction on the first predictor's coefficient, null value
// estimated: model i design is [intercept, x1..x5], model ii is
// [x1..x5, ylag1..3].
Hypothesis table2_hypothesis(const std::string& model, WeightScheme weight) {
    const int p = model == "i" ? 6 : 8;
    const int col = model == "i" ? 1 : 0;
    Hypothesis hyp;
    hyp.A = Eigen::MatrixXd::Zero(1, p);
    hyp.A(0, col) = 1.0;
    hyp.estimate_a = true;
    hyp.weight = weight;
    return hyp;
}

Eigen::MatrixXd qq_pairs(std::vector<double> observed, const std::vector<double>& reference) {
    std::sort(observed.begin(), observed.end());
    const int R = static_cast<int>(observed.size());
    Eigen::MatrixXd pairs(R, 2);
    for (int k = 1; k <= R; ++k) {
        pairs(k - 1, 0) = observed[k - 1];
        pairs(k - 1, 1) = empirical_quantile(reference, static_cast<double>(k) / (R + 1));
    }
    return pairs;
}

ReplicationSummary run_table2(const ReplicationSpec& spec) {
    const double b = spec.bandwidths.empty() ? 0.3 : spec.bandwidths[0];
    std::vector<double> alphas = spec.alphas;
    if (alphas.empty()) alphas = {0.10, 0.05};

    const Hypothesis hyp = table2_hypothesis(spec.model, weight_scheme_by_name(spec.weight));
    const int rows_n = spec.model == "i" ? spec.n : spec.n - 3;
    const int p = static_cast<int>(hyp.A.cols());

    PipelineConfig pc;
    pc.b = b;
    pc.kernel = spec.kernel;

    // The studentized statistic is asymptotically pivotal, so one null panel
    // calibrates every replicate.
    std::vector<double> null_deltas = simulated_null_deltas(
        rows_n, p, hyp, pc, spec.n_sim, derive_seed(spec.seed, spec.table_id + "-calibration", 0));
    std::vector<double> crit(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a)
        crit[a] = empirical_quantile(null_deltas, 1.0 - alphas[a]);

    std::vector<int> accept(alphas.size(), 0);
    std::vector<double> deltas;
    deltas.reserve(spec.reps);
    for (int r = 0; r < spec.reps; ++r) {
        try {
            const SimulatedRegression sim =
                simulate_by_name(spec.model, spec.n, derive_seed(spec.seed, spec.table_id, r));
            const double delta = run_test_pipeline(sim.data, hyp, pc).Delta;
            deltas.push_back(delta);
            for (std::size_t a = 0; a < alphas.size(); ++a)
                if (delta <= crit[a]) ++accept[a];
        } catch (const numeric_error& e) {
            throw numeric_error("replicate " + std::to_string(r) + ": " + e.what());
        }
    }

    ReplicationSummary out;
    out.table_id = spec.table_id;
    out.reps = spec.reps;
    out.cells["model"] = spec.model;
    out.cells["n"] = spec.n;
    out.cells["bandwidth"] = b;
    out.cells["weight"] = spec.weight;
    out.cells["n_sim"] = spec.n_sim;
    out.cells["alphas"] = alphas;
    out.cells["critical_values"] = crit;
    nlohmann::json acc = nlohmann::json::array(), se = nlohmann::json::array();
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        acc.push_back(pct(accept[a], spec.reps));
        se.push_back(pct_se(accept[a], spec.reps));
    }
    out.cells["acceptance_percent"] = acc;
    out.cells["acceptance_se"] = se;

    out.plot_header = {"delta_observed", "delta_null"};
    out.plot_data = qq_pairs(deltas, null_deltas);
    return out;
}

ReplicationSummary run_glrt_qq(const ReplicationSpec& spec) {
    std::vector<double> alphas = spec.alphas;
    if (alphas.empty()) alphas = {0.10, 0.05, 0.01};
    const double b =
        spec.bandwidths.empty() ? std::pow(static_cast<double>(spec.n), -0.2) : spec.bandwidths[0];

    Hypothesis hyp;
    hyp.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
    hyp.estimate_a = true;
    hyp.weight = WeightScheme::identity;

    PipelineConfig pc;
    pc.b = b;
    pc.kernel = spec.kernel;

    std::vector<double> null_deltas = simulated_null_deltas(
        spec.n, 1, hyp, pc, spec.n_sim, derive_seed(spec.seed, spec.table_id + "-calibration", 0));
    std::vector<double> crit(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a)
        crit[a] = empirical_quantile(null_deltas, 1.0 - alphas[a]);

    std::vector<int> accept_glrt(alphas.size(), 0), accept_delta(alphas.size(), 0);
    std::vector<double> glrt_stats, deltas, glrt_null_pool;
    glrt_stats.reserve(spec.reps);
    deltas.reserve(spec.reps);
    glrt_null_pool.reserve(static_cast<std::size_t>(spec.reps) * spec.n_sim);
    for (int r = 0; r < spec.reps; ++r) {
        try {
            const RegressionData data =
                ar_arch_regression(spec.n, derive_seed(spec.seed, spec.table_id, r));

            const GlrtBootstrap boot = glrt_bootstrap(data, spec.kernel, b, spec.n_sim,
                                                      derive_seed(spec.seed, "glrt-bootstrap", r));
            glrt_stats.push_back(boot.statistic);
            glrt_null_pool.insert(glrt_null_pool.end(), boot.null_stats.begin(),
                                  boot.null_stats.end());
            for (std::size_t a = 0; a < alphas.size(); ++a)
                if (boot.statistic <= empirical_quantile(boot.null_stats, 1.0 - alphas[a]))
                    ++accept_glrt[a];

            const double delta = run_test_pipeline(data, hyp, pc).Delta;
            deltas.push_back(delta);
            for (std::size_t a = 0; a < alphas.size(); ++a)
                if (delta <= crit[a]) ++accept_delta[a];
        } catch (const numeric_error& e) {
            throw numeric_error("replicate " + std::to_string(r) + ": " + e.what());
        }
    }

    ReplicationSummary out;
    out.table_id = spec.table_id;
    out.reps = spec.reps;
    out.cells["n"] = spec.n;
    out.cells["bandwidth"] = b;
    out.cells["n_sim"] = spec.n_sim;
    out.cells["alphas"] = alphas;
    out.cells["delta_critical_values"] = crit;
    nlohmann::json ag = nlohmann::json::array(), ad = nlohmann::json::array(),
                   sg = nlohmann::json::array(), sd = nlohmann::json::array();
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        ag.push_back(pct(accept_glrt[a], spec.reps));
        ad.push_back(pct(accept_delta[a], spec.reps));
        sg.push_back(pct_se(accept_glrt[a], spec.reps));
        sd.push_back(pct_se(accept_delta[a], spec.reps));
    }
    out.cells["glrt_acceptance_percent"] = ag;
    out.cells["glrt_acceptance_se"] = sg;
    out.cells["delta_acceptance_percent"] = ad;
    out.cells["delta_acceptance_se"] = sd;

    const Eigen::MatrixXd qq_glrt = qq_pairs(glrt_stats, glrt_null_pool);
    const Eigen::MatrixXd qq_delta = qq_pairs(deltas, null_deltas);
    out.plot_header = {"glrt_observed", "glrt_null", "delta_observed", "delta_null"};
    out.plot_data.resize(spec.reps, 4);
    out.plot_data.leftCols(2) = qq_glrt;
    out.plot_data.rightCols(2) = qq_delta;
    return out;
}

} // namespace

ReplicationSummary run_replication(const ReplicationSpec& spec) {
    if (spec.reps < 1) throw config_error("need at least one replication");
    if (spec.n < 100) throw config_error("replications require n >= 100");

    const auto start = std::chrono::steady_clock::now();
    ReplicationSummary out;
    if (spec.table_id == "table1")
        out = run_table1(spec);
    else if (spec.table_id == "table2")
        out = run_table2(spec);
    else if (spec.table_id == "glrt_qq")
        out = run_glrt_qq(spec);
    else
        throw config_error("unknown table id: " + spec.table_id);
    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace tvreg
