#ifndef TVREG_STATS_HPP
#define TVREG_STATS_HPP

#include <vector>

namespace tvreg {

// Standard normal CDF, Phi(x) = erfc(-x/sqrt(2))/2.
double normal_cdf(double x);

// Standard normal quantile by the AS241 rational approximation (Wichura
// 1988), absolute error below 1e-9 over p in (0,1).
double normal_quantile(double p);

// Order-statistic empirical quantile: ascending sort, index ceil(q*N)
// (1-based, clamped to [1, N]).
double empirical_quantile(std::vector<double> sample, double q);

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v); // divisor N-1
double median(std::vector<double> v);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

} // namespace tvreg

#endif
