#include "ttvr/kinematics/shape_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ttvr::kinematics {

std::vector<ShapeSample> generate_shape_dataset(std::size_t n, std::uint64_t seed, const Interval& bending_range,
                                                double active_length) {
  if (n < 2) throw Error("shape dataset needs at least 2 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(bending_range.min, bending_range.max);
  std::vector<ShapeSample> out(n);
  for (auto& s : out) {
    s.bending = u(rng);
    s.shape = bend_shape(s.bending, active_length);
  }
  return out;
}

ShapeModel::ShapeModel(nn::Mlp net, Interval bending_range, double length_scale)
    : net_(std::move(net)), bending_range_(bending_range), length_scale_(length_scale) {
  if (net_.input_size() != 1 || net_.output_size() != 3 * static_cast<int>(kShapePoints))
    throw Error("shape model network must map 1 input to 300 outputs");
}

nn::Matrix ShapeModel::encode(const std::vector<double>& bending_deg) const {
  nn::Matrix x(1, static_cast<Eigen::Index>(bending_deg.size()));
  for (std::size_t i = 0; i < bending_deg.size(); ++i)
    x(0, static_cast<Eigen::Index>(i)) =
        2.0 * (bending_deg[i] - bending_range_.min) / bending_range_.width() - 1.0;
  return x;
}

nn::Vector ShapeModel::encode_target(const CatheterShape& shape) const {
  nn::Vector t(3 * kShapePoints);
  for (std::size_t i = 0; i < kShapePoints; ++i) t.segment<3>(3 * i) = shape.points[i] / length_scale_;
  return t;
}

std::array<Vec3, kShapePoints> ShapeModel::predict_points(double bending_deg) const {
  const nn::Matrix y = net_.forward(encode({bending_deg}));
  std::array<Vec3, kShapePoints> pts;
  for (std::size_t i = 0; i < kShapePoints; ++i)
    pts[i] = y.block<3, 1>(3 * static_cast<Eigen::Index>(i), 0) * length_scale_;
  return pts;
}

std::array<Vec3, kShapePoints> ShapeModel::predict_points_equal_arc(double bending_deg) const {
  return resample_equal_arc(predict_points(bending_deg));
}

CatheterShape predict_shape(const ShapeModel& model, double bending_deg) {
  CatheterShape shape;
  shape.points = model.predict_points(bending_deg);
  const Vec3 z = (shape.points[kShapePoints - 1] - shape.points[kShapePoints - 2]).normalized();
  // Bend plane stays x-z; complete the frame with y as the binormal.
  const Vec3 x = Vec3::UnitY().cross(z).normalized();
  shape.tip_frame.position = shape.points.back();
  shape.tip_frame.rotation.col(0) = x;
  shape.tip_frame.rotation.col(1) = z.cross(x);
  shape.tip_frame.rotation.col(2) = z;
  return shape;
}

double mean_point_error(const ShapeModel& model, const std::vector<ShapeSample>& samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) {
    const auto pred = model.predict_points(s.bending);
    for (std::size_t i = 0; i < kShapePoints; ++i) total += (pred[i] - s.shape.points[i]).norm();
  }
  return total / static_cast<double>(samples.size() * kShapePoints);
}

namespace {

// Smoothed Euclidean error (normalized units); quadratic near zero residual.
constexpr double kErrorSmoothing = 1e-4;

struct Batch {
  nn::Matrix x;
  nn::Matrix target;
};

Batch make_batch(const ShapeModel& model, const std::vector<ShapeSample>& data, const std::vector<std::size_t>& idx) {
  std::vector<double> bending;
  nn::Matrix target(3 * kShapePoints, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    bending.push_back(data[idx[c]].bending);
    target.col(static_cast<Eigen::Index>(c)) = model.encode_target(data[idx[c]].shape);
  }
  return {model.encode(bending), std::move(target)};
}

// Mean smoothed point error (normalized units) and optionally its gradient w.r.t. the output.
double point_error(const nn::Matrix& out, const nn::Matrix& target, nn::Matrix* grad) {
  const Eigen::Index n = out.cols();
  const double denom = static_cast<double>(n * kShapePoints);
  if (grad) grad->resize(out.rows(), n);
  double total = 0.0;
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(kShapePoints); ++i) {
      const Vec3 d = out.block<3, 1>(3 * i, c) - target.block<3, 1>(3 * i, c);
      const double e = std::sqrt(d.squaredNorm() + kErrorSmoothing * kErrorSmoothing);
      total += e;
      if (grad) grad->block<3, 1>(3 * i, c) = d / (e * denom);
    }
  return total / denom;
}

}  // namespace

ShapeModel fit_shape_model(const std::vector<ShapeSample>& dataset, const Interval& bending_range,
                           double active_length, const ShapeFitOptions& options) {
  if (dataset.size() < 2) throw Error("shape fit needs at least 2 samples (disjoint train/validation split)");
  std::mt19937_64 rng(options.seed);

  std::vector<int> sizes{1};
  sizes.insert(sizes.end(), options.hidden_layers.begin(), options.hidden_layers.end());
  sizes.push_back(3 * static_cast<int>(kShapePoints));
  ShapeModel model(nn::Mlp(sizes, options.activation, nn::Activation::identity, rng), bending_range, active_length);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::round(options.validation_fraction * dataset.size()));
  n_val = std::clamp<std::size_t>(n_val, 1, dataset.size() - 1);
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  const std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());

  const Batch train = make_batch(model, dataset, train_idx);
  nn::Adam adam(model.network().parameter_count(), options.learning_rate);
  ShapeFitReport& report = model.report();
  report.train_size = train_idx.size();
  report.validation_size = val_idx.size();
  report.epochs = options.epochs;
  report.loss_curve.reserve(options.epochs);

  nn::Mlp::Tape tape;
  nn::Matrix grad_out;
  nn::Vector grad(model.network().parameter_count());
  const double decay = options.epochs > 0 ? std::log(options.final_learning_rate / options.learning_rate) / options.epochs : 0.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    adam.set_learning_rate(options.learning_rate * std::exp(decay * epoch));
    const nn::Matrix out = model.network().forward(train.x, tape);
    const double loss = point_error(out, train.target, &grad_out);
    if (!std::isfinite(loss)) throw Error("shape fit diverged: non-finite loss at epoch " + std::to_string(epoch));
    report.loss_curve.push_back(loss * active_length);
    grad.setZero();
    model.network().backward(tape, grad_out, grad);
    adam.step(model.network().parameters(), grad);
  }

  std::vector<ShapeSample> train_set, val_set;
  for (auto i : train_idx) train_set.push_back(dataset[i]);
  for (auto i : val_idx) val_set.push_back(dataset[i]);
  report.train_mean_error = mean_point_error(model, train_set);
  report.validation_point_mean.assign(kShapePoints, 0.0);
  double total = 0.0, worst = 0.0;
  for (const auto& s : val_set) {
    const auto pred = model.predict_points(s.bending);
    for (std::size_t i = 0; i < kShapePoints; ++i) {
      const double e = (pred[i] - s.shape.points[i]).norm();
      total += e;
      worst = std::max(worst, e);
      report.validation_point_mean[i] += e / static_cast<double>(val_set.size());
    }
  }
  report.validation_mean_error = total / static_cast<double>(val_set.size() * kShapePoints);
  report.validation_max_error = worst;
  return model;
}

nlohmann::json ShapeModel::to_json() const {
  return {{"format", "ttvr.shape_model"},
          {"version", 1},
          {"bending_range", {bending_range_.min, bending_range_.max}},
          {"length_scale", length_scale_},
          {"network", net_.to_json()},
          {"fit_report",
           {{"train_mean_error", report_.train_mean_error},
            {"validation_mean_error", report_.validation_mean_error},
            {"validation_max_error", report_.validation_max_error},
            {"validation_point_mean", report_.validation_point_mean},
            {"train_size", report_.train_size},
            {"validation_size", report_.validation_size},
            {"epochs", report_.epochs}}}};
}

ShapeModel ShapeModel::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "ttvr.shape_model") throw Error("not a shape model document");
  if (doc.value("version", 0) != 1) throw Error("unsupported shape model version");
  const auto range = doc.at("bending_range").get<std::array<double, 2>>();
  ShapeModel m(nn::Mlp::from_json(doc.at("network")), {range[0], range[1]}, doc.at("length_scale").get<double>());
  const auto& r = doc.at("fit_report");
  m.report_.train_mean_error = r.at("train_mean_error").get<double>();
  m.report_.validation_mean_error = r.at("validation_mean_error").get<double>();
  m.report_.validation_max_error = r.at("validation_max_error").get<double>();
  m.report_.validation_point_mean = r.at("validation_point_mean").get<std::vector<double>>();
  m.report_.train_size = r.at("train_size").get<std::size_t>();
  m.report_.validation_size = r.at("validation_size").get<std::size_t>();
  m.report_.epochs = r.at("epochs").get<int>();
  return m;
}

}  // namespace ttvr::kinematics
