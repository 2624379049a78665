#pragma once

#include "ttvr/core/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace ttvr::probmap {

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
};

struct Gmm2D {
  std::vector<GaussianComponent> components;
  /// Total log-likelihood of the training rows before each M-step, then after the last.
  std::vector<double> log_likelihood_trace;

  double pdf(const Vec2& x) const;
  double log_likelihood(const std::vector<Vec2>& rows) const;
  /// Bayesian information criterion, 6k - 1 free parameters.
  double bic(const std::vector<Vec2>& rows) const;

  nlohmann::json to_json() const;
  static Gmm2D from_json(const nlohmann::json& doc);
};

struct GmmFitOptions {
  int k = 5;
  double tol = 1e-8;  // stop when the mean per-row log-likelihood gain drops below this
  int max_iter = 500;
  std::uint64_t seed = 0;
  double eigen_floor = 1e-3;  // units^2
};

/// EM from k-means++ seeds; covariance eigenvalues are floored in every
/// M-step. Deterministic per seed. Throws Error when k exceeds the number of
/// distinct rows, or when a component empties after one re-seed.
Gmm2D fit_gmm(const std::vector<Vec2>& rows, const GmmFitOptions& options);

/// Fits k = k_min..k_max and returns the fit with the lowest BIC.
Gmm2D select_by_bic(const std::vector<Vec2>& rows, int k_min, int k_max, GmmFitOptions options);

/// Symmetric matrix with eigenvalues raised to at least `floor`.
Mat2 floor_eigenvalues(const Mat2& m, double floor);

}  // namespace ttvr::probmap
