#include "ttvr/probmap/gmm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <random>
#include <set>

namespace ttvr::probmap {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

double log_normal(const Vec2& x, const Vec2& mean, const Mat2& cov) {
  const Eigen::LLT<Mat2> llt(cov);
  const Vec2 z = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * std::log(llt.matrixL()(0, 0) * llt.matrixL()(1, 1));
  return -kLog2Pi - 0.5 * log_det - 0.5 * z.squaredNorm();
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Mat2 scatter(const std::vector<Vec2>& rows, const Vec2& mean) {
  Mat2 c = Mat2::Zero();
  for (const auto& r : rows) c += (r - mean) * (r - mean).transpose();
  return c / static_cast<double>(rows.size());
}

// Responsibilities (n x k) and total log-likelihood.
double e_step(const Gmm2D& g, const std::vector<Vec2>& rows, Eigen::MatrixXd& resp) {
  const auto k = g.components.size();
  resp.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
  std::vector<double> lp(k);
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j)
      lp[j] = std::log(g.components[j].weight) + log_normal(rows[i], g.components[j].mean, g.components[j].cov);
    const double norm = log_sum_exp(lp);
    total += norm;
    for (std::size_t j = 0; j < k; ++j)
      resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::exp(lp[j] - norm);
  }
  return total;
}

std::vector<Vec2> kmeanspp(const std::vector<Vec2>& rows, int k, std::mt19937_64& rng) {
  std::vector<Vec2> centers;
  std::uniform_int_distribution<std::size_t> first(0, rows.size() - 1);
  centers.push_back(rows[first(rng)]);
  std::vector<double> d2(rows.size());
  while (static_cast<int>(centers.size()) < k) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, (rows[i] - c).squaredNorm());
      d2[i] = best;
    }
    std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
    centers.push_back(rows[pick(rng)]);
  }
  return centers;
}

}  // namespace

Mat2 floor_eigenvalues(const Mat2& m, double floor) {
  const Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (m + m.transpose()));
  const Vec2 ev = es.eigenvalues().cwiseMax(floor);
  Mat2 out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double Gmm2D::pdf(const Vec2& x) const {
  double s = 0.0;
  for (const auto& c : components) s += c.weight * std::exp(log_normal(x, c.mean, c.cov));
  return s;
}

double Gmm2D::log_likelihood(const std::vector<Vec2>& rows) const {
  std::vector<double> lp(components.size());
  double total = 0.0;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < components.size(); ++j)
      lp[j] = std::log(components[j].weight) + log_normal(r, components[j].mean, components[j].cov);
    total += log_sum_exp(lp);
  }
  return total;
}

double Gmm2D::bic(const std::vector<Vec2>& rows) const {
  const double p = 6.0 * static_cast<double>(components.size()) - 1.0;
  return -2.0 * log_likelihood(rows) + p * std::log(static_cast<double>(rows.size()));
}

nlohmann::json Gmm2D::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components)
    comps.push_back({{"weight", c.weight},
                     {"mean", {c.mean.x(), c.mean.y()}},
                     {"covariance", {{c.cov(0, 0), c.cov(0, 1)}, {c.cov(1, 0), c.cov(1, 1)}}}});
  return {{"components", comps}, {"log_likelihood_trace", log_likelihood_trace}};
}

Gmm2D Gmm2D::from_json(const nlohmann::json& doc) {
  Gmm2D g;
  for (const auto& c : doc.at("components")) {
    GaussianComponent gc;
    gc.weight = c.at("weight").get<double>();
    const auto m = c.at("mean").get<std::array<double, 2>>();
    gc.mean = {m[0], m[1]};
    const auto cv = c.at("covariance").get<std::array<std::array<double, 2>, 2>>();
    gc.cov << cv[0][0], cv[0][1], cv[1][0], cv[1][1];
    g.components.push_back(gc);
  }
  g.log_likelihood_trace = doc.value("log_likelihood_trace", std::vector<double>{});
  return g;
}

Gmm2D fit_gmm(const std::vector<Vec2>& rows, const GmmFitOptions& options) {
  if (options.k < 1) throw Error("gmm: k must be >= 1");
  if (rows.size() < static_cast<std::size_t>(options.k)) throw Error("gmm: fewer rows than components");
  std::set<std::pair<double, double>> distinct;
  for (const auto& r : rows) {
    distinct.insert({r.x(), r.y()});
    if (static_cast<int>(distinct.size()) >= options.k) break;
  }
  if (static_cast<int>(distinct.size()) < options.k) throw Error("gmm: k exceeds the number of distinct points");

  std::mt19937_64 rng(options.seed);
  const double n = static_cast<double>(rows.size());
  Vec2 mean = Vec2::Zero();
  for (const auto& r : rows) mean += r / n;
  const Mat2 global = floor_eigenvalues(scatter(rows, mean), options.eigen_floor);

  Gmm2D g;
  for (const auto& c : kmeanspp(rows, options.k, rng))
    g.components.push_back({1.0 / options.k, c, global});

  Eigen::MatrixXd resp;
  bool reseeded = false;
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const double ll = e_step(g, rows, resp);
    g.log_likelihood_trace.push_back(ll);
    if (iter > 0 && (ll - prev) / n < options.tol) break;
    prev = ll;
    for (int j = 0; j < options.k; ++j) {
      const double nk = resp.col(j).sum();
      if (nk < 1e-10) {
        if (reseeded) throw Error("gmm: component emptied twice");
        reseeded = true;
        // Move it to the worst-explained row.
        std::size_t worst = 0;
        double worst_pdf = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double p = g.pdf(rows[i]);
          if (p < worst_pdf) worst_pdf = p, worst = i;
        }
        g.components[static_cast<std::size_t>(j)] = {1.0 / options.k, rows[worst], global};
        continue;
      }
      Vec2 m = Vec2::Zero();
      for (std::size_t i = 0; i < rows.size(); ++i) m += resp(static_cast<Eigen::Index>(i), j) * rows[i];
      m /= nk;
      Mat2 c = Mat2::Zero();
      for (std::size_t i = 0; i < rows.size(); ++i)
        c += resp(static_cast<Eigen::Index>(i), j) * (rows[i] - m) * (rows[i] - m).transpose();
      auto& comp = g.components[static_cast<std::size_t>(j)];
      comp.weight = nk / n;
      comp.mean = m;
      comp.cov = floor_eigenvalues(c / nk, options.eigen_floor);
    }
    double wsum = 0.0;
    for (const auto& c : g.components) wsum += c.weight;
    for (auto& c : g.components) c.weight /= wsum;
  }
  if (g.log_likelihood_trace.size() == static_cast<std::size_t>(options.max_iter))
    g.log_likelihood_trace.push_back(g.log_likelihood(rows));
  return g;
}

Gmm2D select_by_bic(const std::vector<Vec2>& rows, int k_min, int k_max, GmmFitOptions options) {
  Gmm2D best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    options.k = k;
    Gmm2D g = fit_gmm(rows, options);
    const double b = g.bic(rows);
    if (b < best_bic) best_bic = b, best = std::move(g);
  }
  return best;
}

}  // namespace ttvr::probmap
