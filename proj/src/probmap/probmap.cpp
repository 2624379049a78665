#include "ttvr/probmap/probmap.hpp"

#include <ostream>
#include <set>

namespace ttvr::probmap {

std::uint64_t rollout_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

JointSampleSet sample_trajectories(const rl::Policy& policy, rl::LocalizationEnv& env, int n_inits,
                                   std::uint64_t seed, bool successful_only) {
  if (n_inits < 1) throw Error("sample_trajectories needs n_inits >= 1");
  JointSampleSet set;
  set.n_inits = n_inits;
  set.seed = seed;
  set.successful_only = successful_only;
  for (int i = 0; i < n_inits; ++i) {
    const std::uint64_t s = rollout_seed(seed, static_cast<std::uint64_t>(i));
    env.reseed(s);
    env.reset();
    std::mt19937_64 rng(s);
    const rl::Trajectory t = rl::rollout(policy, env, false, &rng);
    const bool success = t.terminal() == rl::Terminal::success;
    set.successes += success ? 1 : 0;
    if (successful_only && !success) continue;
    for (const auto& step : t.steps) set.rows.emplace_back(step.joints.translation, step.joints.rotation, step.joints.bending);
  }
  return set;
}

std::string_view to_string(MapPair p) { return p == MapPair::tb ? "tb" : "rb"; }

double MapLayer::normalized(const Vec2& p) const { return std::clamp(gmm.pdf(p) / density_max, 0.0, 1.0); }

void MapLayer::write_grid_csv(std::ostream& os) const {
  os << "x,y,density\n";
  os.precision(17);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double x = x_range.min + x_range.width() * i / (grid - 1);
      const double y = y_range.min + y_range.width() * j / (grid - 1);
      os << x << ',' << y << ',' << normalized({x, y}) << '\n';
    }
}

namespace {

MapLayer fit_layer(const std::vector<Vec2>& rows, int k, kinematics::Interval xr, kinematics::Interval yr, int grid,
                   GmmFitOptions fit) {
  std::set<std::pair<double, double>> distinct;
  for (const auto& r : rows) {
    distinct.insert({r.x(), r.y()});
    if (static_cast<int>(distinct.size()) >= k) break;
  }
  fit.k = std::min<int>(k, static_cast<int>(distinct.size()));
  MapLayer layer;
  layer.gmm = fit_gmm(rows, fit);
  layer.x_range = xr;
  layer.y_range = yr;
  layer.grid = grid;
  double best = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      best = std::max(best, layer.gmm.pdf({xr.min + xr.width() * i / (grid - 1), yr.min + yr.width() * j / (grid - 1)}));
  if (!(best > 0.0)) throw Error("probability map has zero density over the whole grid");
  layer.density_max = best;
  return layer;
}

nlohmann::json layer_json(const MapLayer& l) {
  return {{"gmm", l.gmm.to_json()},
          {"x_range", {l.x_range.min, l.x_range.max}},
          {"y_range", {l.y_range.min, l.y_range.max}},
          {"density_max", l.density_max},
          {"grid", l.grid}};
}

MapLayer layer_from_json(const nlohmann::json& d) {
  MapLayer l;
  l.gmm = Gmm2D::from_json(d.at("gmm"));
  const auto x = d.at("x_range").get<std::array<double, 2>>();
  const auto y = d.at("y_range").get<std::array<double, 2>>();
  l.x_range = {x[0], x[1]};
  l.y_range = {y[0], y[1]};
  l.density_max = d.at("density_max").get<double>();
  l.grid = d.at("grid").get<int>();
  return l;
}

}  // namespace

ProbabilityMap build_probability_maps(const JointSampleSet& samples, const JointLimits& limits,
                                      const MapOptions& options) {
  if (samples.rows.empty()) throw Error("probability maps need at least one sample");
  if (options.grid < 2) throw Error("probability map grid must be >= 2");
  std::vector<Vec2> tb, rb;
  for (const auto& r : samples.rows) {
    tb.emplace_back(r[0], r[2]);
    rb.emplace_back(r[1], r[2]);
  }
  ProbabilityMap m;
  m.tb = fit_layer(tb, options.k_tb, limits[Dof::translation], limits[Dof::bending], options.grid, options.fit);
  m.rb = fit_layer(rb, options.k_rb, limits[Dof::rotation], limits[Dof::bending], options.grid, options.fit);
  m.provenance = {{"rows", samples.rows.size()},
                  {"n_inits", samples.n_inits},
                  {"successes", samples.successes},
                  {"seed", samples.seed},
                  {"successful_only", samples.successful_only},
                  {"fit_seed", options.fit.seed}};
  return m;
}

nlohmann::json ProbabilityMap::to_json() const {
  return {{"format", "ttvr.probability_map"},
          {"version", 1},
          {"tb", layer_json(tb)},
          {"rb", layer_json(rb)},
          {"provenance", provenance}};
}

ProbabilityMap ProbabilityMap::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "ttvr.probability_map") throw Error("not a probability map document");
  if (doc.value("version", 0) != 1) throw Error("unsupported probability map version");
  ProbabilityMap m;
  m.tb = layer_from_json(doc.at("tb"));
  m.rb = layer_from_json(doc.at("rb"));
  m.provenance = doc.value("provenance", nlohmann::json::object());
  return m;
}

double density(const ProbabilityMap& map, MapPair pair, const Vec2& point) {
  return map.layer(pair).normalized(point);
}

namespace {

Vec2 project(MapPair pair, const JointState& j) {
  return pair == MapPair::tb ? Vec2(j.translation, j.bending) : Vec2(j.rotation, j.bending);
}

double layer_scale(const ProbabilityMap& map, MapPair pair, const JointState& from, const JointState& to,
                   const GovernorConfig& cfg) {
  const double d0 = density(map, pair, project(pair, from));
  const double d1 = density(map, pair, project(pair, to));
  if (d1 >= d0) return 1.0;
  return std::clamp(d1 / std::max(d0, cfg.epsilon), cfg.floor, 1.0);
}

}  // namespace

double speed_scale(const ProbabilityMap& map, const JointState& current, Dof dof, double direction,
                   double lookahead, const GovernorConfig& cfg) {
  if (direction == 0.0) return 1.0;
  JointState next = current;
  next[dof] += (direction > 0.0 ? 1.0 : -1.0) * lookahead;
  switch (dof) {
    case Dof::translation: return layer_scale(map, MapPair::tb, current, next, cfg);
    case Dof::rotation: return layer_scale(map, MapPair::rb, current, next, cfg);
    case Dof::bending:
      return std::min(layer_scale(map, MapPair::tb, current, next, cfg), layer_scale(map, MapPair::rb, current, next, cfg));
    default: return 1.0;
  }
}

std::array<double, kinematics::kDofCount> speed_scales(const ProbabilityMap& map, const JointState& current,
                                                       const std::array<double, kinematics::kDofCount>& direction,
                                                       const JointLimits& limits, const GovernorConfig& cfg) {
  std::array<double, kinematics::kDofCount> out{};
  for (Dof d : kinematics::kAllDofs) {
    const auto i = static_cast<std::size_t>(d);
    out[i] = speed_scale(map, current, d, direction[i], cfg.horizon * limits.velocity(d), cfg);
  }
  return out;
}

}  // namespace ttvr::probmap
