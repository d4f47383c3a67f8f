#include "tvreg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tvreg/common.hpp"

namespace tvreg {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw config_error("normal_quantile: p must be in (0,1)");

    static const double a[8] = {
        3.3871328727963666080e0,  1.3314166789178437745e2,
        1.9715909503065514427e3,  1.3731693765509461125e4,
        4.5921953931549871457e4,  6.7265770927008700853e4,
        3.3430575583588128105e4,  2.5090809287301226727e3};
    static const double b[8] = {
        1.0,                      4.2313330701600911252e1,
        6.8718700749205790830e2,  5.3941960214247511077e3,
        2.1213794301586595867e4,  3.9307895800092710610e4,
        2.8729085735721942674e4,  5.2264952788528545610e3};
    static const double c[8] = {
        1.42343711074968357734e0, 4.63033784615654529590e0,
        5.76949722146069140550e0, 3.64784832476320460504e0,
        1.27045825245236838258e0, 2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static const double d[8] = {
        1.0,                      2.05319162663775882187e0,
        1.67638483018380384940e0, 6.89767334985100004550e-1,
        1.48103976427480074590e-1, 1.51986665636164571966e-2,
        5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static const double e[8] = {
        6.65790464350110377720e0, 5.46378491116411436990e0,
        1.78482653991729133580e0, 2.96560571828504891230e-1,
        2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static const double f[8] = {
        1.0,                      5.99832206555887937690e-1,
        1.36929880922735805310e-1, 1.48753612908506148525e-2,
        7.86869131145613259100e-4, 1.84631831751005468180e-5,
        1.42151175831644588870e-7, 2.04426310338993978564e-15};

    auto ratio = [](const double* num, const double* den, double r) {
        double n = num[7], m = den[7];
        for (int k = 6; k >= 0; --k) {
            n = n * r + num[k];
            m = m * r + den[k];
        }
        return n / m;
    };

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * ratio(a, b, r);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        val = ratio(c, d, r - 1.6);
    } else {
        val = ratio(e, f, r - 5.0);
    }
    return (q < 0.0) ? -val : val;
}

double empirical_quantile(std::vector<double> sample, double q) {
    if (sample.empty()) throw config_error("empirical_quantile: empty sample");
    if (!(q > 0.0 && q < 1.0)) throw config_error("empirical_quantile: q must be in (0,1)");
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (k < 1) k = 1;
    if (k > n) k = n;
    return sample[k - 1];
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw config_error("mean: empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw config_error("sample_variance: need at least 2 points");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
    if (v.empty()) throw config_error("median: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw config_error("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

} // namespace tvreg
