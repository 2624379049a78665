#pragma once

#include "ttvr/kinematics/catheter.hpp"
#include "ttvr/nn/mlp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace ttvr::kinematics {

struct ShapeSample {
  double bending = 0.0;  // deg
  CatheterShape shape;   // local frame
};

/// `n` bending values drawn uniformly over `bending_range`, paired with the
/// ground-truth arc. Deterministic per seed.
std::vector<ShapeSample> generate_shape_dataset(std::size_t n, std::uint64_t seed, const Interval& bending_range,
                                                double active_length);

struct ShapeFitOptions {
  std::vector<int> hidden_layers{64, 64};
  nn::Activation activation = nn::Activation::tanh;
  int epochs = 4000;
  double learning_rate = 3e-3;
  double final_learning_rate = 1e-4;  // Adam step is annealed geometrically towards this
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct ShapeFitReport {
  double train_mean_error = 0.0;       // mm, mean over samples and points
  double validation_mean_error = 0.0;  // mm
  double validation_max_error = 0.0;   // mm, worst single point
  std::vector<double> validation_point_mean;  // per point index, mm
  std::vector<double> loss_curve;             // training mean error per epoch, mm
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  int epochs = 0;
};

/// Regressor from bending angle to the 100 local-frame points of the flexible segment.
class ShapeModel {
 public:
  ShapeModel() = default;
  ShapeModel(nn::Mlp net, Interval bending_range, double length_scale);

  /// Raw network output: 100 points, not necessarily equally spaced.
  std::array<Vec3, kShapePoints> predict_points(double bending_deg) const;
  /// Same prediction resampled to equal arc length along its own polyline.
  std::array<Vec3, kShapePoints> predict_points_equal_arc(double bending_deg) const;

  const nn::Mlp& network() const { return net_; }
  nn::Mlp& network() { return net_; }
  const Interval& bending_range() const { return bending_range_; }
  double length_scale() const { return length_scale_; }
  ShapeFitReport& report() { return report_; }
  const ShapeFitReport& report() const { return report_; }

  /// Network input for a batch of bending values (1 x n).
  nn::Matrix encode(const std::vector<double>& bending_deg) const;
  /// Training target for a shape (300 x 1), in units of length_scale.
  nn::Vector encode_target(const CatheterShape& shape) const;

  nlohmann::json to_json() const;
  static ShapeModel from_json(const nlohmann::json& doc);

 private:
  nn::Mlp net_;
  Interval bending_range_{0.0, 160.0};
  double length_scale_ = 120.0;
  ShapeFitReport report_;
};

/// Mean per-point Euclidean error (mm) of `model` over `samples`, evaluated
/// point by point without the training code path.
double mean_point_error(const ShapeModel& model, const std::vector<ShapeSample>& samples);

/// Full-batch Adam on the mean per-point Euclidean error with a seeded,
/// disjoint train/validation split. Throws Error on a non-finite loss.
ShapeModel fit_shape_model(const std::vector<ShapeSample>& dataset, const Interval& bending_range,
                           double active_length, const ShapeFitOptions& options);

/// Shape model used as FK back end: model prediction placed in the rig frame.
CatheterShape predict_shape(const ShapeModel& model, double bending_deg);

}  // namespace ttvr::kinematics
