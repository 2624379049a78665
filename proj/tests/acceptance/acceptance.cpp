// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.
// Arguments restrict the run to the named criteria.

#include "ttvr/metrics/stats.hpp"
#include "ttvr/session/cli.hpp"
#include "ttvr/session/run.hpp"

#include "../support/fixtures.hpp"
#include "../support/metric_oracle.hpp"

#include <spdlog/spdlog.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace ttvr;
namespace fs = std::filesystem;
using kinematics::Dof;
using kinematics::JointState;
using probmap::MapPair;

namespace {

// Pinned tolerances.
constexpr double kShapeErrorMax = 0.285;         // mm
constexpr double kShapeSecondsMax = 120.0;
constexpr double kLengthStdRatioMax = 0.20;
constexpr double kSuccessRateMin = 0.90;
constexpr double kPositionMax = 10.0;            // mm
constexpr double kOrientationMax = 10.0;         // deg
constexpr double kTrainSecondsMax = 30.0 * 60.0;
constexpr double kGmmWeightTol = 0.03;
constexpr double kGmmMeanTol = 0.15;
constexpr double kGmmCovTol = 0.15;
constexpr double kGmmLlSlack = 1e-9;             // relative
constexpr double kGovernorFloor = 0.20;
constexpr double kMetricTol = 1e-9;
constexpr double kSimulateSecondsMax = 5.0 * 60.0;
constexpr double kAlpha = 0.05;
constexpr double kStatsTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;
std::set<std::string> selected;  // empty: all

void report(const std::string& name, const std::function<Outcome()>& fn) {
  if (!selected.empty() && !selected.count(name)) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.note(std::string("exception: ") + e.what());
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt("%.1f s", seconds_since(t0)) << "): " << o.detail
            << std::endl;
}

// Reward cases.

Outcome reward_cases() {
  Outcome o;
  const rl::EnvConfig cfg;
  const TipPose tip;  // origin, pointing +z
  const auto off_axis = anatomy::ValveTarget::from_points(Vec3(3, 4, 10), Vec3(0, 0, 20));
  const auto on_axis = anatomy::ValveTarget::from_points(Vec3(0, 0, 10), Vec3(0, 0, 20));
  const double collision = rl::reward(tip, off_axis, rl::Terminal::collision, cfg).total();
  const double step = rl::reward(tip, off_axis, rl::Terminal::running, cfg).total();
  const double success = rl::reward(tip, on_axis, rl::Terminal::success, cfg).total();
  const auto timeout = rl::reward(tip, off_axis, rl::Terminal::timeout, cfg);
  o.check(collision == -350.0, "collision -350");
  o.check(step == -50.0, "step -50");
  o.check(success == 250.0, "success on axis 250");
  // Lateral offsets 5 at p1 and 0 at p2.
  o.check(timeout.error == -5.0 && timeout.total() == -50.0 + timeout.error, "timeout -50 + error");
  o.note(fmt("collision %g, step %g, success %g, timeout %g", collision, step, success, timeout.total()));
  return o;
}

// Shape model.

Outcome shape_fit(const fs::path& dir) {
  Outcome o;
  session::RunConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = session::run_fit_shape(cfg, dir);
  const double secs = seconds_since(t0);
  const double held_out = model.report().validation_mean_error;
  const auto fresh = kinematics::generate_shape_dataset(200, cfg.seeds.shape + 1000, cfg.limits[Dof::bending],
                                                        cfg.rig.active_length);
  const double fresh_err = kinematics::mean_point_error(model, fresh);
  o.check(model.report().train_size + model.report().validation_size == 1000, "n = 1000");
  o.check(held_out <= kShapeErrorMax, "held-out error");
  o.check(fresh_err <= kShapeErrorMax, "fresh-set error");
  o.check(secs <= kShapeSecondsMax, "runtime");
  o.note(fmt("held-out %.4f mm, fresh %.4f mm (bar %.3f), fit %.1f s", held_out, fresh_err, kShapeErrorMax, secs));
  return o;
}

// SAC training and evaluation; keeps the policy for later criteria.

std::shared_ptr<const rl::Policy> trained;

double ols_slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  const double xm = (n - 1.0) / 2.0;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (i - xm) * (y[i] - ym);
    sxx += (i - xm) * (i - xm);
  }
  return sxy / sxx;
}

Outcome sac_training(const fs::path& dir) {
  Outcome o;
  session::RunConfig cfg;
  auto ws = session::build_workspace(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = session::run_train(cfg, ws, dir);
  const double secs = seconds_since(t0);
  trained = std::make_shared<const rl::Policy>(result.policy);

  const auto ma = result.curves.moving_average(50);
  const std::vector<double> tail(ma.end() - static_cast<std::ptrdiff_t>(ma.size() / 3), ma.end());
  const double slope = ols_slope(tail);
  o.check(slope >= 0.0 && tail.back() >= tail.front(), "moving average non-decreasing over final third");

  const auto& eps = result.curves.episodes;
  std::vector<double> lengths;
  for (auto it = eps.end() - 100; it != eps.end(); ++it) lengths.push_back(it->length);
  const double mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / lengths.size();
  double var = 0.0;
  for (double l : lengths) var += (l - mean) * (l - mean);
  const double sd = std::sqrt(var / lengths.size());
  o.check(sd <= kLengthStdRatioMax * mean, "episode length stable");

  const auto stats = session::run_evaluate(cfg, ws, result.policy, dir);
  o.check(stats.records.size() == 100, "100 rollouts");
  o.check(stats.success_rate >= kSuccessRateMin, "success rate");
  o.check(stats.position_max <= kPositionMax, "max position error");
  o.check(stats.orientation_max <= kOrientationMax, "max orientation error");
  o.check(secs <= kTrainSecondsMax, "runtime");
  o.note(fmt("MA %.2f -> %.2f slope %.4f/ep; length sd/mean %.3f; success %.2f; pos %.2f +- %.2f max %.2f mm; "
             "ori %.2f +- %.2f max %.2f deg; train %.0f s",
             tail.front(), tail.back(), slope, sd / mean, stats.success_rate, stats.position_mean, stats.position_std,
             stats.position_max, stats.orientation_mean, stats.orientation_std, stats.orientation_max, secs));
  return o;
}

// GMM and maps.

std::vector<Vec2> sample_gaussian(std::mt19937_64& rng, int n, const Vec2& mean, const Mat2& cov) {
  const Mat2 L = cov.llt().matrixL();
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec2> out;
  for (int i = 0; i < n; ++i) out.push_back(mean + L * Vec2(g(rng), g(rng)));
  return out;
}

bool ll_monotone(const probmap::Gmm2D& g) {
  const auto& ll = g.log_likelihood_trace;
  if (ll.empty()) return false;
  for (std::size_t i = 1; i < ll.size(); ++i)
    if (ll[i] < ll[i - 1] - kGmmLlSlack * std::abs(ll[i - 1])) return false;
  return true;
}

Outcome gmm_maps() {
  Outcome o;
  std::mt19937_64 rng(2);
  Mat2 c1, c2;
  c1 << 1.0, 0.3, 0.3, 0.5;
  c2 << 0.6, -0.2, -0.2, 1.2;
  auto rows = sample_gaussian(rng, 900, Vec2(-4, 0), c1);
  const auto b_rows = sample_gaussian(rng, 2100, Vec2(5, 3), c2);
  rows.insert(rows.end(), b_rows.begin(), b_rows.end());

  probmap::GmmFitOptions opt;
  opt.k = 2;
  opt.seed = 3;
  const auto g = probmap::fit_gmm(rows, opt);
  o.check(g.components.size() == 2, "two components");
  const bool first_is_a = g.components[0].mean.x() < 0;
  const auto& a = g.components[first_is_a ? 0 : 1];
  const auto& b = g.components[first_is_a ? 1 : 0];
  const double werr = std::max(std::abs(a.weight - 0.3), std::abs(b.weight - 0.7));
  const double merr = std::max((a.mean - Vec2(-4, 0)).norm(), (b.mean - Vec2(5, 3)).norm());
  const double cerr = std::max((a.cov - c1).cwiseAbs().maxCoeff(), (b.cov - c2).cwiseAbs().maxCoeff());
  o.check(werr <= kGmmWeightTol, "weights");
  o.check(merr <= kGmmMeanTol, "means");
  o.check(cerr <= kGmmCovTol, "covariances");

  int fits = 0, monotone = 0;
  for (int k = 1; k <= 6; ++k)
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      probmap::GmmFitOptions f;
      f.k = k;
      f.seed = seed;
      ++fits;
      monotone += ll_monotone(probmap::fit_gmm(rows, f));
    }

  const auto& maps = *fixtures::trained_maps();
  monotone += ll_monotone(maps.tb.gmm) + ll_monotone(maps.rb.gmm);
  fits += 2;
  o.check(monotone == fits, "log-likelihood monotone");

  double lo = 1.0, hi = 0.0;
  for (auto pair : {MapPair::tb, MapPair::rb}) {
    const auto& layer = maps.layer(pair);
    for (int i = 0; i < layer.grid; ++i)
      for (int j = 0; j < layer.grid; ++j) {
        const Vec2 p(layer.x_range.min + layer.x_range.width() * i / (layer.grid - 1),
                     layer.y_range.min + layer.y_range.width() * j / (layer.grid - 1));
        const double d = probmap::density(maps, pair, p);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
  }
  std::mt19937_64 r2(4);
  std::uniform_real_distribution<double> wide(-1000.0, 1000.0);
  for (int i = 0; i < 10000; ++i) {
    const double d = probmap::density(maps, i % 2 ? MapPair::tb : MapPair::rb, Vec2(wide(r2), wide(r2)));
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  o.check(lo >= 0.0 && hi <= 1.0, "density in [0, 1]");
  o.check(std::abs(hi - 1.0) <= 1e-12, "grid max 1");
  o.note(fmt("planted |dw| %.4f |dmu| %.4f |dcov| %.4f; %d/%d fits monotone; density range [%.3g, %.15g]", werr,
             merr, cerr, monotone, fits, lo, hi));
  return o;
}

// Speed governor on the trained maps.

Vec2 project(MapPair p, const JointState& j) {
  return p == MapPair::tb ? Vec2(j.translation, j.bending) : Vec2(j.rotation, j.bending);
}

Outcome speed_governor() {
  Outcome o;
  const auto& maps = *fixtures::trained_maps();
  const kinematics::JointLimits limits;
  std::mt19937_64 rng(10);
  auto uniform = [&](const kinematics::Interval& iv) {
    return std::uniform_real_distribution<double>(iv.min, iv.max)(rng);
  };

  int full = 0, full_ok = 0, bounded = 0, checked = 0;
  for (int i = 0; i < 5000; ++i) {
    JointState j;
    j.translation = uniform(maps.tb.x_range);
    j.rotation = uniform(maps.rb.x_range);
    j.bending = uniform(maps.tb.y_range);
    const double look = std::uniform_real_distribution<double>(0.1, 40.0)(rng);
    for (auto dof : kinematics::kPlanningDofs)
      for (double dir : {-1.0, 1.0}) {
        JointState n = j;
        n[dof] += dir * look;
        bool non_decreasing = true;
        if (dof != Dof::rotation)
          non_decreasing &= probmap::density(maps, MapPair::tb, project(MapPair::tb, n)) >=
                            probmap::density(maps, MapPair::tb, project(MapPair::tb, j));
        if (dof != Dof::translation)
          non_decreasing &= probmap::density(maps, MapPair::rb, project(MapPair::rb, n)) >=
                            probmap::density(maps, MapPair::rb, project(MapPair::rb, j));
        const double s = probmap::speed_scale(maps, j, dof, dir, look);
        ++checked;
        bounded += s >= kGovernorFloor && s <= 1.0;
        if (non_decreasing) {
          ++full;
          full_ok += s == 1.0;
        }
      }
  }
  o.check(full_ok == full, "scale 1 toward non-decreasing density");
  o.check(bounded == checked, "scale within [floor, 1]");

  // Densest tb grid point, then excursions far outside the visited region.
  const auto& tb = maps.tb;
  JointState peak;
  double best = -1.0;
  for (int i = 0; i < tb.grid; ++i)
    for (int k = 0; k < tb.grid; ++k) {
      const Vec2 p(tb.x_range.min + tb.x_range.width() * i / (tb.grid - 1),
                   tb.y_range.min + tb.y_range.width() * k / (tb.grid - 1));
      const double d = tb.normalized(p);
      if (d > best) {
        best = d;
        peak.translation = p.x();
        peak.bending = p.y();
      }
    }
  double best_rb = -1.0;
  for (int i = 0; i < maps.rb.grid; ++i) {
    const double r = maps.rb.x_range.min + maps.rb.x_range.width() * i / (maps.rb.grid - 1);
    const double d = maps.rb.normalized({r, peak.bending});
    if (d > best_rb) {
      best_rb = d;
      peak.rotation = r;
    }
  }
  const double deep_t = probmap::speed_scale(maps, peak, Dof::translation, 1.0, 2.0 * limits[Dof::translation].width());
  const double deep_r = probmap::speed_scale(maps, peak, Dof::rotation, 1.0, 2.0 * limits[Dof::rotation].width());
  const double deep_b = probmap::speed_scale(maps, peak, Dof::bending, 1.0, 2.0 * limits[Dof::bending].width());
  o.check(deep_t == kGovernorFloor && deep_r == kGovernorFloor && deep_b == kGovernorFloor, "floor 0.20");

  // Scale against projected density along one translation ray.
  std::vector<std::pair<double, double>> pts;
  for (double look = 0.25; look < 2.0 * limits[Dof::translation].width(); look += 0.25) {
    JointState n = peak;
    n.translation += look;
    pts.emplace_back(probmap::density(maps, MapPair::tb, project(MapPair::tb, n)),
                     probmap::speed_scale(maps, peak, Dof::translation, 1.0, look));
  }
  std::sort(pts.begin(), pts.end());
  bool monotone = true;
  for (std::size_t i = 1; i < pts.size(); ++i) monotone &= pts[i].second >= pts[i - 1].second;
  o.check(monotone, "monotone in projected density");
  o.note(fmt("%d/%d moves toward non-decreasing density at 1.0; deep excursions %.2f/%.2f/%.2f; %zu ray points "
             "monotone from %.2f to %.2f",
             full, checked, deep_t, deep_r, deep_b, pts.size(), pts.front().second, pts.back().second));
  return o;
}

// Metrics against the brute-force oracle.

Outcome metrics_oracle() {
  Outcome o;
  session::RunConfig cfg;
  const auto ws = session::build_workspace(cfg);
  const auto ctx = ws.metric_context();
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(2, 60);
  double worst = 0.0;
  int triangle = 0, refine = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto frames = oracle::random_run(rng, len(rng));
    const auto m = metrics::compute_run_metrics(frames, ctx);
    const auto r = oracle::oracle_metrics(frames, ctx);
    worst = std::max({worst, std::abs(m.accumulated_error - r.accumulated_error), std::abs(m.ptl - r.ptl),
                      std::abs(m.ttl - r.ttl), std::abs(m.total_time - r.total_time),
                      std::abs(m.intervention_time - r.intervention_time)});
    if (m.me.has_value() != r.me.has_value()) worst = INFINITY;
    if (m.me && r.me) worst = std::max(worst, std::abs(*m.me - *r.me));

    // Path length is at least the endpoint distance in each space.
    const auto first = oracle::oracle_shape(frames.front().joints, ctx.rig).back();
    const auto last = oracle::oracle_shape(frames.back().joints, ctx.rig).back();
    const double px = (oracle::oracle_project(ctx.top, last) - oracle::oracle_project(ctx.top, first)).norm() +
                      (oracle::oracle_project(ctx.sagittal, last) - oracle::oracle_project(ctx.sagittal, first)).norm();
    triangle += m.ttl >= (last - first).norm() - kMetricTol && m.ptl >= px - kMetricTol;

    std::vector<metrics::Frame> fine;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (i > 0) {
        const auto a = frames[i - 1].joints.to_array(), b = frames[i].joints.to_array();
        std::array<double, kinematics::kDofCount> mid{};
        for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (a[k] + b[k]);
        fine.push_back({0.5 * (frames[i - 1].t + frames[i].t), JointState::from_array(mid), frames[i].intervening});
      }
      fine.push_back(frames[i]);
    }
    const auto mf = metrics::compute_run_metrics(fine, ctx);
    refine += mf.ttl >= m.ttl - kMetricTol && mf.ptl >= m.ptl - kMetricTol;
  }
  o.check(worst <= kMetricTol, "oracle agreement");
  o.check(triangle == 100, "triangle inequality");
  o.check(refine == 100, "refinement");
  o.note(fmt("worst |impl - oracle| %.3g over 100 runs; triangle %d/100; refinement %d/100", worst, triangle, refine));
  return o;
}

// Copilot against master-slave with the scripted operator.

Outcome copilot_vs_master_slave(const fs::path& dir) {
  Outcome o;
  if (!trained) throw Error("no trained policy");
  session::RunConfig cfg;
  auto ws = session::build_workspace(cfg);
  const auto maps =
      std::make_shared<const probmap::ProbabilityMap>(session::run_probmap(cfg, ws, *trained, dir));
  const auto t0 = std::chrono::steady_clock::now();
  const auto ms = session::simulate_runs(cfg, ws, copilot::ControlMode::master_slave, nullptr, nullptr);
  const auto cp = session::simulate_runs(cfg, ws, copilot::ControlMode::copilot, trained, maps);
  const double secs = seconds_since(t0);

  std::vector<double> it_cp, it_ms;
  double ttl_cp = 0.0, ttl_ms = 0.0;
  for (const auto& r : cp) {
    it_cp.push_back(r.metrics.intervention_time);
    ttl_cp += r.metrics.ttl / cp.size();
  }
  for (const auto& r : ms) {
    it_ms.push_back(r.metrics.intervention_time);
    ttl_ms += r.metrics.ttl / ms.size();
  }
  const auto cmp = metrics::compare_groups(it_cp, it_ms, kAlpha);
  o.check(cp.size() == 10 && ms.size() == 10, "10 runs per mode");
  o.check(cmp.mean_a < cmp.mean_b, "lower mean intervention time");
  o.check(ttl_cp <= ttl_ms, "lower-or-equal mean TTL");
  o.check(cmp.p_value < kAlpha, "p < 0.05");
  o.check(secs <= kSimulateSecondsMax, "runtime");
  o.note(fmt("IT %.2f vs %.2f s; TTL %.1f vs %.1f mm; %s p = %.3g; simulate %.0f s", cmp.mean_a, cmp.mean_b, ttl_cp,
             ttl_ms, cmp.test_used.c_str(), cmp.p_value, secs));
  return o;
}

// Statistical gate.

Outcome stats_gate() {
  Outcome o;
  // Exact U: only 2 of the 20 rank splits are as extreme.
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  const auto mw = metrics::mann_whitney(a, b);
  o.check(mw.statistic == 0.0 && std::abs(mw.p_value - 0.1) <= kStatsTol, "Mann-Whitney exact case");
  // Pooled variance 25/6 gives t = -sqrt(3) on 6 df with p = 1 - sqrt(3)/2.
  const std::vector<double> c{1, 2, 3, 4}, d{2, 4, 6, 8};
  const auto t = metrics::t_test(c, d);
  o.check(std::abs(t.statistic + std::sqrt(3.0)) <= kStatsTol &&
              std::abs(t.p_value - (1.0 - std::sqrt(3.0) / 2.0)) <= kStatsTol,
          "t-test closed form");
  o.note(fmt("U = %g p = %.15g; t = %.15g p = %.15g", mw.statistic, mw.p_value, t.statistic, t.p_value));
  return o;
}

// Determinism of repeated CLI runs.

constexpr const char* kSmallConfig = R"(
[sac]
episodes = 40
warmup_steps = 200

[shape]
samples = 100
epochs = 60

[evaluate]
rollouts = 10

[probmap]
n_inits = 20
grid = 40

[simulation]
runs = 3
time_limit = 20.0
)";

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = session::read_file(e.path());
  return out;
}

void run_or_throw(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int rc = session::run_cli(args, out, err);
  if (rc != session::kExitOk) {
    std::string line;
    for (const auto& s : args) line += s + " ";
    throw Error("`ttvr " + line + "` exited " + std::to_string(rc) + ": " + err.str());
  }
}

void pipeline(const fs::path& config, const fs::path& dir) {
  const std::string c = config.string(), d = dir.string();
  for (const char* step : {"phantom", "fit-shape", "train", "evaluate", "probmap"}) run_or_throw({step, "-c", c, "-o", d});
  run_or_throw({"simulate", "-c", c, "-o", d + "/master_slave", "-m", "master_slave"});
  // The short training run is not expected to localize; copilot uses the trained fixtures.
  run_or_throw({"simulate", "-c", c, "-o", d + "/copilot", "-m", "copilot", "-p", fixtures::data_path("policy.json"),
                "--maps", fixtures::data_path("probability_map.json")});
  std::ostringstream out, err;
  session::run_cli({"metrics", "-r", d + "/copilot", "-o", d + "/copilot_recomputed.csv"}, out, err);
}

Outcome determinism(const fs::path& dir) {
  Outcome o;
  const fs::path config = dir / "small.toml";
  session::write_file(config, kSmallConfig);
  pipeline(config, dir / "a");
  pipeline(config, dir / "b");
  const auto a = tree(dir / "a"), b = tree(dir / "b");
  std::size_t differing = 0;
  std::string first;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) {
      if (first.empty()) first = name;
      ++differing;
    }
  }
  o.check(a.size() == b.size() && differing == 0, "byte-identical trees" + (first.empty() ? "" : " (" + first + ")"));
  o.check(a.count("manifest.json") && a.count("copilot/manifest.json") && a.count("master_slave/manifest.json"),
          "manifests present");
  o.check(a.count("copilot_recomputed.csv") && a.at("copilot_recomputed.csv") == a.at("copilot/metrics.csv"),
          "recomputed metrics equal recorded");
  o.note(fmt("%zu files compared, %zu differ", a.size(), differing));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  selected.insert(argv + 1, argv + argc);
  spdlog::set_level(spdlog::level::warn);
  const fs::path work = fs::temp_directory_path() / ("ttvr_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);

  report("reward_cases", reward_cases);
  report("shape_fit", [&] { return shape_fit(work / "shape"); });
  report("sac_training", [&] { return sac_training(work / "train"); });
  report("gmm_probability_maps", gmm_maps);
  report("speed_governor", speed_governor);
  report("metrics_oracle", metrics_oracle);
  report("copilot_vs_master_slave", [&] { return copilot_vs_master_slave(work / "train"); });
  report("statistical_gate", stats_gate);
  report("determinism", [&] { return determinism(work / "determinism"); });

  fs::remove_all(work);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
