#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace committor {

// Scalar sample statistics, two-pass free functions.
double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // unbiased, n-1 denominator
// standard error of the sample mean
double standard_error(std::span<const double> xs);

double normal_cdf(double z);
// inverse standard normal CDF (Acklam's rational approximation, |err| < 1.2e-9)
double normal_quantile(double p);

// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);

struct KsResult {
  double statistic;  // sup |F_emp - F|
  double p_value;    // asymptotic, finite-n corrected (Stephens)
};

// One-sample Kolmogorov-Smirnov test of xs against Normal(mu, sigma).
KsResult ks_test_normal(std::span<const double> xs, double mu, double sigma);

// (empirical quantile, normal quantile) pairs at probabilities (i - 1/2)/n
std::vector<std::pair<double, double>> qq_pairs_normal(std::span<const double> xs, double mu,
                                                       double sigma);

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace committor
