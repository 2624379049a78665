#include "ttvr/metrics/stats.hpp"

#include "ttvr/core/types.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace ttvr::metrics {

namespace {

double poly(std::initializer_list<double> c, double x) {
  double r = 0.0, p = 1.0;
  for (double v : c) r += v * p, p *= x;
  return r;
}

double mean(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

double upper_normal(double z) { return boost::math::cdf(boost::math::complement(boost::math::normal(), z)); }

}  // namespace

TestResult shapiro_wilk(std::span<const double> data) {
  const std::size_t n = data.size();
  if (n < 3 || n > 5000) throw Error("shapiro_wilk needs 3 <= n <= 5000");
  std::vector<double> x(data.begin(), data.end());
  std::sort(x.begin(), x.end());
  if (x.back() - x.front() == 0.0) throw Error("shapiro_wilk undefined for a constant sample");
  const double an = static_cast<double>(n);

  std::vector<double> a(n);
  if (n == 3) {
    a = {-std::sqrt(0.5), 0.0, std::sqrt(0.5)};
  } else {
    const boost::math::normal nd;
    std::vector<double> m(n);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = boost::math::quantile(nd, (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double an_last = m[n - 1] / ssumm2 + poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, rsn);
    double phi;
    std::size_t i1;
    a[n - 1] = an_last;
    a[0] = -an_last;
    if (n > 5) {
      const double an_prev = m[n - 2] / ssumm2 + poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn);
      a[n - 2] = an_prev;
      a[1] = -an_prev;
      phi = (summ2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
            (1.0 - 2.0 * an_last * an_last - 2.0 * an_prev * an_prev);
      i1 = 2;
    } else {
      phi = (summ2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an_last * an_last);
      i1 = 1;
    }
    for (std::size_t i = i1; i < n - i1; ++i) a[i] = m[i] / std::sqrt(phi);
  }

  const double xm = mean(x);
  double num = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += a[i] * x[i];
    ss += (x[i] - xm) * (x[i] - xm);
  }
  const double w = std::min(1.0, num * num / ss);

  TestResult r;
  r.statistic = w;
  if (n == 3) {
    constexpr double pi6 = 6.0 / kPi;
    const double stqr = std::asin(std::sqrt(0.75));
    r.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    return r;
  }
  double y = std::log(1.0 - w);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly({-2.273, 0.459}, an);
    if (y >= gamma) {
      r.p_value = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mu = poly({0.5440, -0.39978, 0.025054, -6.714e-4}, an);
    sigma = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, an));
  } else {
    const double ln = std::log(an);
    mu = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, ln);
    sigma = std::exp(poly({-0.4803, -0.082676, 0.0030302}, ln));
  }
  r.p_value = upper_normal((y - mu) / sigma);
  return r;
}

TestResult levene(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> ma(a.begin(), a.end()), mb(b.begin(), b.end());
  const double meda = median(ma), medb = median(mb);
  std::vector<double> za, zb;
  for (double v : a) za.push_back(std::abs(v - meda));
  for (double v : b) zb.push_back(std::abs(v - medb));
  const double na = static_cast<double>(za.size()), nb = static_cast<double>(zb.size());
  const double mza = mean(za), mzb = mean(zb);
  const double mz = (na * mza + nb * mzb) / (na + nb);
  const double between = na * (mza - mz) * (mza - mz) + nb * (mzb - mz) * (mzb - mz);
  double within = 0.0;
  for (double v : za) within += (v - mza) * (v - mza);
  for (double v : zb) within += (v - mzb) * (v - mzb);
  const double df1 = 1.0, df2 = na + nb - 2.0;
  TestResult r;
  if (within == 0.0) {
    r.statistic = between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    r.p_value = between == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = (df2 / df1) * between / within;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), r.statistic));
  return r;
}

TestResult t_test(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  double ssa = 0.0, ssb = 0.0;
  for (double v : a) ssa += (v - ma) * (v - ma);
  for (double v : b) ssb += (v - mb) * (v - mb);
  const double df = na + nb - 2.0;
  const double sp2 = (ssa + ssb) / df;
  TestResult r;
  if (sp2 == 0.0) {
    r.statistic = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    r.p_value = ma == mb ? 1.0 : 0.0;
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), std::abs(r.statistic)));
  r.p_value = std::min(1.0, r.p_value);
  return r;
}

namespace {

// Number of arrangements of na ranks among na + nb giving each U value.
std::vector<double> exact_u_counts(int na, int nb) {
  // f[i][j][u]: arrangements of i a-values and j b-values with statistic u.
  std::vector<std::vector<std::vector<double>>> f(
      static_cast<std::size_t>(na + 1),
      std::vector<std::vector<double>>(static_cast<std::size_t>(nb + 1)));
  for (int i = 0; i <= na; ++i)
    for (int j = 0; j <= nb; ++j) {
      auto& cell = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      cell.assign(static_cast<std::size_t>(i * j + 1), 0.0);
      if (i == 0 || j == 0) {
        cell[0] = 1.0;
        continue;
      }
      // Largest value is from a (contributes j to U) or from b (contributes 0).
      const auto& from_a = f[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
      const auto& from_b = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)];
      for (std::size_t u = 0; u < from_a.size(); ++u) cell[u + static_cast<std::size_t>(j)] += from_a[u];
      for (std::size_t u = 0; u < from_b.size(); ++u) cell[u] += from_b[u];
    }
  return f[static_cast<std::size_t>(na)][static_cast<std::size_t>(nb)];
}

}  // namespace

TestResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na == 0 || nb == 0) throw Error("mann_whitney needs non-empty groups");
  std::vector<std::pair<double, int>> all;
  for (double v : a) all.push_back({v, 0});
  for (double v : b) all.push_back({v, 1});
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  const std::size_t n = all.size();
  double rank_sum_a = 0.0, tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    if (t > 1) ties = true;
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_sum_a += avg;
    i = j;
  }
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
  TestResult r;
  r.statistic = rank_sum_a - dna * (dna + 1.0) / 2.0;
  const double u_max = std::max(r.statistic, dna * dnb - r.statistic);
  if (!ties && na <= 20 && nb <= 20) {
    const auto counts = exact_u_counts(static_cast<int>(na), static_cast<int>(nb));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double tail = 0.0;
    for (std::size_t u = static_cast<std::size_t>(std::llround(u_max)); u < counts.size(); ++u) tail += counts[u];
    r.p_value = std::min(1.0, 2.0 * tail / total);
    return r;
  }
  const double dn = dna + dnb;
  const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double z = (u_max - dna * dnb / 2.0 - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, 2.0 * upper_normal(z));
  return r;
}

Comparison compare_groups(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() < 3 || b.size() < 3) throw Error("compare_groups needs n >= 3 per group");
  Comparison c;
  c.mean_a = mean(a);
  c.mean_b = mean(b);
  bool normal = true;
  nlohmann::json gate;
  for (const auto& [name, g] : {std::pair{"shapiro_a", a}, std::pair{"shapiro_b", b}}) {
    try {
      const TestResult sw = shapiro_wilk(g);
      gate[name] = {{"w", sw.statistic}, {"p", sw.p_value}};
      normal = normal && sw.p_value >= alpha;
    } catch (const Error& e) {
      gate[name] = {{"error", e.what()}};
      normal = false;
    }
  }
  const TestResult lv = levene(a, b);
  gate["levene"] = {{"f", lv.statistic}, {"p", lv.p_value}};
  const bool equal_var = lv.p_value >= alpha;
  gate["alpha"] = alpha;
  c.gate = gate;
  const TestResult r = normal && equal_var ? t_test(a, b) : mann_whitney(a, b);
  c.test_used = normal && equal_var ? "t_test" : "mann_whitney";
  c.statistic = r.statistic;
  c.p_value = r.p_value;
  return c;
}

nlohmann::json to_json(const Comparison& c) {
  return {{"test_used", c.test_used},
          {"statistic", c.statistic},
          {"p_value", c.p_value},
          {"mean_a", c.mean_a},
          {"mean_b", c.mean_b},
          {"gate", c.gate}};
}

}  // namespace ttvr::metrics
