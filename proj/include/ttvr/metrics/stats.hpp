#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string>

namespace ttvr::metrics {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Royston's approximation (AS R94), 3 <= n <= 5000. Throws Error for
/// constant samples or n out of range.
TestResult shapiro_wilk(std::span<const double> x);
/// Brown-Forsythe variant (median centering) for two groups.
TestResult levene(std::span<const double> a, std::span<const double> b);
/// Two-sided pooled-variance t-test.
TestResult t_test(std::span<const double> a, std::span<const double> b);
/// Two-sided Mann-Whitney U; statistic is U of `a`. Exact null distribution
/// when both groups have at most 20 values and there are no ties, otherwise
/// the normal approximation with tie and continuity correction.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b);

struct Comparison {
  std::string test_used;  // "t_test" or "mann_whitney"
  double statistic = 0.0;
  double p_value = 1.0;
  double mean_a = 0.0, mean_b = 0.0;
  nlohmann::json gate;  // Shapiro-Wilk and Levene outcomes
};

/// t-test when both groups pass Shapiro-Wilk and Levene at alpha, otherwise
/// Mann-Whitney. Each group needs n >= 3.
Comparison compare_groups(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

nlohmann::json to_json(const Comparison& c);

}  // namespace ttvr::metrics
