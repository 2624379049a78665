#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <random>
#include <string>
#include <vector>

namespace ttvr::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { identity, tanh, relu };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Fully connected network. Samples are columns. All parameters live in one
/// flat vector (per layer: weights column-major, then bias) so optimizers and
/// target-network updates can treat the model as a single vector.
class Mlp {
 public:
  /// Per-sample intermediate values kept by forward() for backward().
  struct Tape {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> activations;  // output of each layer after its nonlinearity
  };

  Mlp() = default;
  /// Weights drawn uniformly in +-sqrt(6 / (fan_in + fan_out)); biases zero.
  Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output, std::mt19937_64& rng);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Tape& tape) const;

  /// Adds dL/dparams into `grad` (size parameter_count()) and returns dL/dx.
  Matrix backward(const Tape& tape, const Matrix& grad_output, Vector& grad) const;

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  /// this <- (1 - tau) * this + tau * online
  void soft_update(const Mlp& online, double tau);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& doc);

 private:
  void layout();
  Eigen::Map<const Matrix> weight(std::size_t layer) const;
  Eigen::Map<const Vector> bias(std::size_t layer) const;
  Activation activation_of(std::size_t layer) const {
    return layer + 1 == offsets_.size() ? output_ : hidden_;
  }

  std::vector<int> sizes_;
  Activation hidden_ = Activation::tanh;
  Activation output_ = Activation::identity;
  Vector params_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's block
};

/// Adam with bias correction (Kingma & Ba).
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(Vector& params, const Vector& grad);
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

  nlohmann::json to_json() const;
  static Adam from_json(const nlohmann::json& doc);

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
  Vector m_, v_;
};

/// Flat list of doubles with full round-trip precision.
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& doc);

}  // namespace ttvr::nn
