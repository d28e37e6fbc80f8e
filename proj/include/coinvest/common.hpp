#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coinvest {

// Error taxonomy. The CLI maps these onto its exit codes; library code throws
// them directly.
struct param_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct budget_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct resolution_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Beliefs are carried in log-odds space so that long horizons cannot
// underflow them. Magnitudes beyond this cap are saturated; logistic() is
// exactly 0.0 or 1.0 in double precision long before that point.
inline constexpr double kLogOddsCap = 700.0;

inline double clamp_log_odds(double x) {
  if (x > kLogOddsCap) return kLogOddsCap;
  if (x < -kLogOddsCap) return -kLogOddsCap;
  return x;
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// Order-deterministic pairwise summation. Batch aggregation must not depend
// on worker count, so every mean in the project funnels through this.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

// z for a two-sided 99% normal interval.
inline constexpr double kZ99 = 2.5758293035489004;

struct WilsonInterval {
  double estimate;
  double lo;
  double hi;
};

inline WilsonInterval wilson_99(std::size_t successes, std::size_t n) {
  if (n == 0) return {0.0, 0.0, 1.0};
  const double z = kZ99;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = p + z2 / (2.0 * nn);
  const double spread =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {p, (center - spread) / denom, (center + spread) / denom};
}

}  // namespace coinvest
