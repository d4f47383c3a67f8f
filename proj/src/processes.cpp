#include "tvreg/processes.hpp"

#include <algorithm>
#include <cmath>

#include "tvreg/common.hpp"
#include "tvreg/rng.hpp"

namespace tvreg {

namespace {

constexpr int kSeriesTerms = 60;   // geometric ratio <= 1/4 -> error < 4^-60
constexpr int kArArchBurn = 200;

} // namespace

double legendre(int j, double x) {
    if (j < 0 || j > 10) throw config_error("legendre order must lie in [0, 10]");
    if (x < -1.0 || x > 1.0) throw config_error("legendre argument must lie in [-1, 1]");
    if (j == 0) return 1.0;
    double pm = 1.0, pc = x;
    for (int k = 1; k < j; ++k) {
        const double pn = ((2.0 * k + 1.0) * x * pc - k * pm) / (k + 1.0);
        pm = pc;
        pc = pn;
    }
    return pc;
}

Eigen::MatrixXd model_innovations(int n, std::uint64_t seed) {
    if (n < 1) throw config_error("sample size must be positive");
    Eigen::MatrixXd eps(n + kSeriesTerms, 6);
    SeedStream rng(derive_seed(seed, "model-innovations", 0));
    for (int r = 0; r < eps.rows(); ++r)
        for (int c = 0; c < 6; ++c) eps(r, c) = static_cast<double>(rng.next_rademacher());
    return eps;
}

namespace {

// x_{i,l} and e_i as truncated geometric moving averages of the innovation
// columns; ratio r_l(t) = P_l(2t-1)/4. Row k of eps corresponds to time
// k + 1 - kSeriesTerms.
void build_ma_series(int n, const Eigen::MatrixXd& eps, Eigen::MatrixXd& x, Eigen::VectorXd& e) {
    Eigen::MatrixXd M(5, 5);
    for (int a = 0; a < 5; ++a)
        for (int c = 0; c < 5; ++c) M(a, c) = std::pow(0.2, std::abs(a - c));
    const Eigen::MatrixXd xi = eps.leftCols(5) * M.transpose();  // xi_k = M eps_{k,1:5}

    x.resize(n, 5);
    e.resize(n);
    for (int i = 1; i <= n; ++i) {
        const double u = 2.0 * i / n - 1.0;
        const int base = i - 1 + kSeriesTerms;  // row of time i
        for (int l = 1; l <= 5; ++l) {
            const double r = legendre(l, u) / 4.0;
            double s = xi(base - (kSeriesTerms - 1), l - 1);
            for (int j = kSeriesTerms - 2; j >= 0; --j) s = xi(base - j, l - 1) + r * s;
            x(i - 1, l - 1) = s;
        }
        const double r6 = legendre(6, u) / 4.0;
        double s = eps(base - (kSeriesTerms - 1), 5);
        for (int j = kSeriesTerms - 2; j >= 0; --j) s = eps(base - j, 5) + r6 * s;
        e[i - 1] = s;
    }
}

} // namespace

SimulatedRegression simulate_model_i(int n, std::uint64_t seed) {
    if (n < 100) throw config_error("model (i) requires n >= 100");
    const Eigen::MatrixXd eps = model_innovations(n, seed);
    Eigen::MatrixXd x;
    Eigen::VectorXd e;
    build_ma_series(n, eps, x, e);

    SimulatedRegression out;
    out.data.y.resize(n);
    out.data.X.resize(n, 6);
    out.data.column_names = {"intercept", "x1", "x2", "x3", "x4", "x5"};
    for (int i = 1; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        const double u = 2.0 * t - 1.0;
        out.data.X(i - 1, 0) = 1.0;
        for (int l = 0; l < 5; ++l) out.data.X(i - 1, l + 1) = x(i - 1, l);
        const double scale = 0.5 * std::sqrt(x(i - 1, 1) * x(i - 1, 1) + x(i - 1, 2) * x(i - 1, 2));
        out.data.y[i - 1] = u * u + 2.0 * x(i - 1, 0) + 2.0 * std::log(t + 1.0) * x(i - 1, 1) +
                            scale * e[i - 1];
    }
    out.truth = {0, 1, 2};
    return out;
}

SimulatedRegression simulate_model_ii(int n, std::uint64_t seed) {
    if (n < 100) throw config_error("model (ii) requires n >= 100");
    const Eigen::MatrixXd eps = model_innovations(n, seed);
    Eigen::MatrixXd x;
    Eigen::VectorXd e;
    build_ma_series(n, eps, x, e);

    Eigen::VectorXd y(n + 1);  // y[0] is the zero initial condition y_0
    y[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        const double u = 2.0 * t - 1.0;
        const int base = i - 1 + kSeriesTerms;
        y[i] = 0.4 * std::sin(2.0 * M_PI * t) * y[i - 1] + 0.3 * x(i - 1, 0) +
               0.4 * u * u * u * x(i - 1, 1) + std::exp(0.5 * t - 2.0) * eps(base, 5);
    }

    const int rows = n - 3;
    SimulatedRegression out;
    out.data.y.resize(rows);
    out.data.X.resize(rows, 8);
    out.data.column_names = {"x1", "x2", "x3", "x4", "x5", "ylag1", "ylag2", "ylag3"};
    for (int i = 4; i <= n; ++i) {
        const int r = i - 4;
        out.data.y[r] = y[i];
        for (int l = 0; l < 5; ++l) out.data.X(r, l) = x(i - 1, l);
        out.data.X(r, 5) = y[i - 1];
        out.data.X(r, 6) = y[i - 2];
        out.data.X(r, 7) = y[i - 3];
    }
    out.truth = {0, 1, 5};
    return out;
}

namespace {

double companion_spectral_radius(const std::vector<double>& a) {
    const int p = static_cast<int>(a.size());
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) C(0, j) = a[j];
    for (int j = 1; j < p; ++j) C(j, j - 1) = 1.0;
    return C.eigenvalues().cwiseAbs().maxCoeff();
}

double draw_noise(SeedStream& rng, const std::string& law) {
    if (law == "gaussian") return rng.next_gaussian();
    if (law == "rademacher") return static_cast<double>(rng.next_rademacher());
    throw config_error("unknown innovation law: " + law);
}

} // namespace

Eigen::VectorXd simulate_tvar(const std::vector<std::function<double(double)>>& coeffs,
                              const NoiseSpec& noise, int n, int burn_in, std::uint64_t seed) {
    const int p = static_cast<int>(coeffs.size());
    if (p < 1) throw config_error("need at least one coefficient function");
    if (n < 1) throw config_error("sample size must be positive");
    if (burn_in < 0) throw config_error("burn-in must be nonnegative");

    std::vector<double> a(p);
    for (int g = 0; g <= 400; ++g) {
        const double t = static_cast<double>(g) / 400.0;
        for (int j = 0; j < p; ++j) a[j] = coeffs[j](t);
        if (companion_spectral_radius(a) >= 1.0 - 1e-6)
            throw config_error("coefficient functions violate the stability condition");
    }

    SeedStream rng(derive_seed(seed, "tvar", 0));
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd out(n);
    for (int i = 1 - burn_in; i <= n; ++i) {
        const double t = std::clamp(static_cast<double>(i) / n, 0.0, 1.0);
        double v = 0.0;
        for (int j = 0; j < p; ++j) v += coeffs[j](t) * hist[j];
        const double s = noise.sigma ? noise.sigma(t) : 1.0;
        v += s * draw_noise(rng, noise.law);
        for (int j = p - 1; j > 0; --j) hist[j] = hist[j - 1];
        hist[0] = v;
        if (i >= 1) out[i - 1] = v;
    }
    return out;
}

double tvar_coupling_gap(const std::vector<std::function<double(double)>>& coeffs,
                         const NoiseSpec& noise, int n, std::uint64_t seed, int window) {
    const int p = static_cast<int>(coeffs.size());
    if (p < 1) throw config_error("need at least one coefficient function");
    if (window < p + 1) throw config_error("coupling window too short");

    // Draw one innovation panel for times 1-window .. n.
    SeedStream rng(derive_seed(seed, "tvar-coupling", 0));
    Eigen::VectorXd eps(n + window);
    for (int k = 0; k < eps.size(); ++k) eps[k] = draw_noise(rng, noise.law);
    const auto eps_at = [&](int i) { return eps[i - 1 + window]; };

    // Actual path with the same pre-sample innovations as burn-in.
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n + 1);
    for (int i = 1 - window; i <= n; ++i) {
        const double t = std::clamp(static_cast<double>(i) / n, 0.0, 1.0);
        double v = 0.0;
        for (int j = 0; j < p; ++j) v += coeffs[j](t) * hist[j];
        const double s = noise.sigma ? noise.sigma(t) : 1.0;
        v += s * eps_at(i);
        for (int j = p - 1; j > 0; --j) hist[j] = hist[j - 1];
        hist[0] = v;
        if (i >= 1) y[i] = v;
    }

    // Frozen-coefficient counterpart at each time, same innovations.
    std::vector<double> a(p);
    double gap = 0.0;
    Eigen::VectorXd zhist(p);
    for (int i = 1; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        for (int j = 0; j < p; ++j) a[j] = coeffs[j](t);
        const double s = noise.sigma ? noise.sigma(t) : 1.0;
        zhist.setZero();
        double z = 0.0;
        for (int k = i - window + 1; k <= i; ++k) {
            z = 0.0;
            for (int j = 0; j < p; ++j) z += a[j] * zhist[j];
            z += s * eps_at(k);
            for (int j = p - 1; j > 0; --j) zhist[j] = zhist[j - 1];
            zhist[0] = z;
        }
        gap = std::max(gap, std::abs(y[i] - z));
    }
    return gap;
}

Eigen::VectorXd ar_arch_path(int n, const Eigen::VectorXd& eps) {
    if (n < 1) throw config_error("sample size must be positive");
    if (eps.size() != n + kArArchBurn) throw config_error("innovation vector has wrong length");
    double e_prev = 0.0, y_prev = 0.0;
    Eigen::VectorXd out(n);
    for (int i = 1 - kArArchBurn; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        const double e = std::sqrt(1.0 + 0.25 * e_prev * e_prev) * eps[i - 1 + kArArchBurn];
        const double mod = 0.25 * (1.0 + 1.0 / (1.0 + std::exp(3.0 - 6.0 * t)));
        const double y = 0.5 * y_prev + mod * e;
        e_prev = e;
        y_prev = y;
        if (i >= 1) out[i - 1] = y;
    }
    return out;
}

Eigen::VectorXd simulate_ar_arch(int n, std::uint64_t seed) {
    if (n < 100) throw config_error("AR-ARCH requires n >= 100");
    SeedStream rng(derive_seed(seed, "ar-arch", 0));
    Eigen::VectorXd eps(n + kArArchBurn);
    for (int k = 0; k < eps.size(); ++k) eps[k] = rng.next_gaussian();
    return ar_arch_path(n, eps);
}

RegressionData ar_arch_regression(int n, std::uint64_t seed) {
    const Eigen::VectorXd path = simulate_ar_arch(n + 1, seed);
    RegressionData data;
    data.y = path.tail(n);
    data.X.resize(n, 1);
    data.X.col(0) = path.head(n);
    data.column_names = {"ylag1"};
    return data;
}

} // namespace tvreg
