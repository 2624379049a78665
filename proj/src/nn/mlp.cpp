#include "ttvr/nn/mlp.hpp"

#include "ttvr/core/types.hpp"

#include <cmath>

namespace ttvr::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw Error("unknown activation '" + name + "'");
}

namespace {

void apply(Activation a, Matrix& z) {
  switch (a) {
    case Activation::identity: break;
    case Activation::tanh: z = z.array().tanh(); break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the activation output.
void apply_derivative(Activation a, const Matrix& out, Matrix& grad) {
  switch (a) {
    case Activation::identity: break;
    case Activation::tanh: grad.array() *= 1.0 - out.array().square(); break;
    case Activation::relu: grad.array() *= (out.array() > 0.0).cast<double>(); break;
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output, std::mt19937_64& rng)
    : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw Error("mlp needs at least input and output sizes");
  layout();
  params_.setZero();
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(fan_in) * fan_out; ++i) params_[offsets_[l] + i] = u(rng);
  }
}

void Mlp::layout() {
  offsets_.clear();
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.resize(total);
}

Eigen::Map<const Matrix> Mlp::weight(std::size_t l) const {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Vector> Mlp::bias(std::size_t l) const {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1], sizes_[l + 1]};
}

Matrix Mlp::forward(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t l = 0; l < offsets_.size(); ++l) {
    Matrix z = weight(l) * h;
    z.colwise() += bias(l);
    apply(activation_of(l), z);
    h = std::move(z);
  }
  return h;
}

Matrix Mlp::forward(const Matrix& x, Tape& tape) const {
  tape.inputs.assign(1, x);
  tape.activations.clear();
  for (std::size_t l = 0; l < offsets_.size(); ++l) {
    Matrix z = weight(l) * tape.inputs.back();
    z.colwise() += bias(l);
    apply(activation_of(l), z);
    tape.activations.push_back(z);
    if (l + 1 < offsets_.size()) tape.inputs.push_back(std::move(z));
  }
  return tape.activations.back();
}

Matrix Mlp::backward(const Tape& tape, const Matrix& grad_output, Vector& grad) const {
  if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());
  Matrix g = grad_output;
  for (std::size_t l = offsets_.size(); l-- > 0;) {
    apply_derivative(activation_of(l), tape.activations[l], g);
    Eigen::Map<Matrix> dw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<Vector> db(grad.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1],
                          sizes_[l + 1]);
    dw.noalias() += g * tape.inputs[l].transpose();
    db.noalias() += g.rowwise().sum();
    g = weight(l).transpose() * g;
  }
  return g;
}

void Mlp::soft_update(const Mlp& online, double tau) {
  params_ = (1.0 - tau) * params_ + tau * online.params_;
}

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const nlohmann::json& doc) {
  const auto values = doc.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json Mlp::to_json() const {
  return {{"layer_sizes", sizes_},
          {"hidden_activation", to_string(hidden_)},
          {"output_activation", to_string(output_)},
          {"parameters", vector_to_json(params_)}};
}

Mlp Mlp::from_json(const nlohmann::json& doc) {
  Mlp m;
  m.sizes_ = doc.at("layer_sizes").get<std::vector<int>>();
  if (m.sizes_.size() < 2) throw Error("mlp document: layer_sizes needs at least 2 entries");
  m.hidden_ = parse_activation(doc.at("hidden_activation").get<std::string>());
  m.output_ = parse_activation(doc.at("output_activation").get<std::string>());
  m.layout();
  const Vector p = vector_from_json(doc.at("parameters"));
  if (p.size() != m.params_.size())
    throw Error("mlp document: expected " + std::to_string(m.params_.size()) + " parameters, found " +
                std::to_string(p.size()));
  m.params_ = p;
  return m;
}

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

nlohmann::json Adam::to_json() const {
  return {{"learning_rate", lr_}, {"beta1", beta1_}, {"beta2", beta2_}, {"epsilon", eps_},
          {"step", t_},          {"m", vector_to_json(m_)}, {"v", vector_to_json(v_)}};
}

Adam Adam::from_json(const nlohmann::json& doc) {
  Adam a;
  a.lr_ = doc.at("learning_rate").get<double>();
  a.beta1_ = doc.at("beta1").get<double>();
  a.beta2_ = doc.at("beta2").get<double>();
  a.eps_ = doc.at("epsilon").get<double>();
  a.t_ = doc.at("step").get<long long>();
  a.m_ = vector_from_json(doc.at("m"));
  a.v_ = vector_from_json(doc.at("v"));
  return a;
}

}  // namespace ttvr::nn
