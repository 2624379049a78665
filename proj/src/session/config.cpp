#include "ttvr/session/config.hpp"

#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ttvr::session {

namespace {

using kinematics::Dof;
using kinematics::Interval;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Typed view of one table that remembers which keys were read.
class Section {
 public:
  Section(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  bool has(std::string_view key) const { return table_ && table_->contains(key); }
  std::string key_path(std::string_view key) const { return join(path_, key); }

  void get(std::string_view key, double& out) { if (auto* n = node(key)) out = as_double(*n, key_path(key)); }
  void get(std::string_view key, bool& out) {
    if (auto* n = node(key)) {
      if (!n->is_boolean()) throw ConfigError(key_path(key), "expected a boolean");
      out = n->as_boolean()->get();
    }
  }
  void get(std::string_view key, int& out) {
    if (auto* n = node(key)) {
      const std::int64_t v = as_integer(*n, key_path(key));
      if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError(key_path(key), "integer out of range");
      out = static_cast<int>(v);
    }
  }
  void get(std::string_view key, std::uint64_t& out) {
    if (auto* n = node(key)) {
      const std::int64_t v = as_integer(*n, key_path(key));
      if (v < 0) throw ConfigError(key_path(key), "must be >= 0");
      out = static_cast<std::uint64_t>(v);
    }
  }
  void get(std::string_view key, std::string& out) {
    if (auto* n = node(key)) {
      if (!n->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = n->as_string()->get();
    }
  }
  template <std::size_t N>
  void get(std::string_view key, std::array<double, N>& out) {
    if (auto* n = node(key)) {
      const auto values = numbers(*n, key_path(key));
      if (values.size() != N) throw ConfigError(key_path(key), "expected " + std::to_string(N) + " numbers");
      std::copy(values.begin(), values.end(), out.begin());
    }
  }
  void get(std::string_view key, Vec3& out) {
    std::array<double, 3> a{out.x(), out.y(), out.z()};
    get(key, a);
    out = {a[0], a[1], a[2]};
  }
  void get(std::string_view key, Vec2& out) {
    std::array<double, 2> a{out.x(), out.y()};
    get(key, a);
    out = {a[0], a[1]};
  }
  void get(std::string_view key, Interval& out) {
    std::array<double, 2> a{out.min, out.max};
    get(key, a);
    if (!(a[0] <= a[1])) throw ConfigError(key_path(key), "expected [min, max] with min <= max");
    out = {a[0], a[1]};
  }
  void get(std::string_view key, std::vector<int>& out) {
    if (auto* n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) throw ConfigError(key_path(key), "expected an array of integers");
      out.clear();
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::int64_t v = as_integer(*arr->get(i), key_path(key) + "[" + std::to_string(i) + "]");
        out.push_back(static_cast<int>(v));
      }
    }
  }

  Section sub(std::string_view key) {
    if (auto* n = node(key)) {
      if (!n->is_table()) throw ConfigError(key_path(key), "expected a table");
      return {n->as_table(), key_path(key)};
    }
    return {nullptr, key_path(key)};
  }

  const toml::array* array_of_tables(std::string_view key) {
    if (auto* n = node(key)) {
      if (!n->is_array_of_tables()) throw ConfigError(key_path(key), "expected an array of tables");
      return n->as_array();
    }
    return nullptr;
  }

  /// Rejects keys that were never read.
  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!used_.count(std::string(k.str()))) throw ConfigError(key_path(k.str()), "unknown key");
  }

 private:
  const toml::node* node(std::string_view key) {
    used_.insert(std::string(key));
    if (!table_) return nullptr;
    return table_->get(key);
  }
  static double as_double(const toml::node& n, const std::string& path) {
    if (n.is_floating_point()) return n.as_floating_point()->get();
    if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
    throw ConfigError(path, "expected a number");
  }
  static std::int64_t as_integer(const toml::node& n, const std::string& path) {
    if (!n.is_integer()) throw ConfigError(path, "expected an integer");
    return n.as_integer()->get();
  }
  static std::vector<double> numbers(const toml::node& n, const std::string& path) {
    const auto* arr = n.as_array();
    if (!arr) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr->size(); ++i)
      out.push_back(as_double(*arr->get(i), path + "[" + std::to_string(i) + "]"));
    return out;
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> used_;
};

void read_phantom(Section s, anatomy::PhantomSpec& p) {
  s.get("svc_radius", p.svc_radius);
  s.get("svc_length", p.svc_length);
  s.get("atrium_radius", p.atrium_radius);
  s.get("ventricle_radius", p.ventricle_radius);
  s.get("annulus_radius", p.annulus_radius);
  s.get("annulus_thickness", p.annulus_thickness);
  s.get("annulus_offset_angle", p.annulus_offset_angle);
  s.get("annulus_azimuth", p.annulus_azimuth);
  s.get("grid_resolution", p.grid_resolution);
  s.finish();
}

void read_limits(Section s, kinematics::JointLimits& l) {
  for (Dof d : kinematics::kAllDofs) s.get(kinematics::to_string(d), l[d]);
  Section v = s.sub("max_velocity");
  for (Dof d : kinematics::kAllDofs) v.get(kinematics::to_string(d), l.max_velocity[static_cast<int>(d)]);
  v.finish();
  s.finish();
}

void read_rig(Section s, kinematics::RigGeometry& r) {
  s.get("passive_length", r.passive_length);
  s.get("active_length", r.active_length);
  s.get("sheath_gain", r.sheath_gain);
  s.get("core_gain", r.core_gain);
  s.get("min_exposed_length", r.min_exposed_length);
  s.finish();
}

void read_env(Section s, rl::EnvConfig& e) {
  s.get("max_steps", e.max_steps);
  s.get("action_scale", e.action_scale);
  s.get("success_pos_tol", e.success_pos_tol);
  s.get("success_ang_tol", e.success_ang_tol);
  s.get("wall_margin", e.wall_margin);
  s.get("r_step", e.r_step);
  s.get("r_obstacle", e.r_obstacle);
  s.get("r_target", e.r_target);
  s.get("error_weight", e.error_weight);
  s.finish();
}

void read_init(Section s, rl::InitDistribution& d) {
  auto nominal = d.nominal.to_array();
  s.get("nominal", nominal);
  d.nominal = kinematics::JointState::from_array(nominal);
  s.get("translation", d.translation);
  s.get("rotation", d.rotation);
  s.get("bending", d.bending);
  s.finish();
}

void read_sac(Section s, rl::SacConfig& c) {
  s.get("episodes", c.episodes);
  s.get("discount", c.discount);
  s.get("tau", c.tau);
  s.get("replay_capacity", c.replay_capacity);
  s.get("batch_size", c.batch_size);
  s.get("hidden_layers", c.hidden_layers);
  s.get("learning_rate", c.learning_rate);
  s.get("target_entropy", c.target_entropy);
  s.get("initial_alpha", c.initial_alpha);
  s.get("reward_scale", c.reward_scale);
  s.get("shaping_weight", c.shaping_weight);
  s.get("warmup_steps", c.warmup_steps);
  s.get("updates_per_step", c.updates_per_step);
  s.finish();
}

void read_shape(Section s, ShapeConfig& c) {
  s.get("samples", c.samples);
  s.get("hidden_layers", c.fit.hidden_layers);
  std::string activation = nn::to_string(c.fit.activation);
  s.get("activation", activation);
  if (activation != "tanh" && activation != "relu")
    throw ConfigError(s.key_path("activation"), "must be \"tanh\" or \"relu\"");
  c.fit.activation = nn::parse_activation(activation);
  s.get("epochs", c.fit.epochs);
  s.get("learning_rate", c.fit.learning_rate);
  s.get("final_learning_rate", c.fit.final_learning_rate);
  s.get("validation_fraction", c.fit.validation_fraction);
  s.finish();
}

void read_probmap(Section s, ProbmapConfig& c) {
  s.get("n_inits", c.n_inits);
  s.get("successful_only", c.successful_only);
  s.get("k_tb", c.options.k_tb);
  s.get("k_rb", c.options.k_rb);
  s.get("grid", c.options.grid);
  s.get("tol", c.options.fit.tol);
  s.get("max_iter", c.options.fit.max_iter);
  s.get("eigen_floor", c.options.fit.eigen_floor);
  s.finish();
}

void read_governor(Section s, probmap::GovernorConfig& g) {
  s.get("floor", g.floor);
  s.get("epsilon", g.epsilon);
  s.get("horizon", g.horizon);
  s.finish();
}

void read_copilot(Section s, copilot::SessionConfig& c) {
  s.get("tick_rate", c.tick_rate);
  s.get("idle_replan", c.idle_replan);
  s.finish();
}

void read_simulation(Section s, SimulationConfig& c) {
  s.get("runs", c.runs);
  s.get("time_limit", c.time_limit);
  s.get("goal_depth", c.goal_depth);
  Section o = s.sub("operator");
  o.get("reaction_delay", c.operators.reaction_delay);
  o.get("error_bias", c.operators.error_bias);
  o.get("intervention_threshold", c.operators.intervention_threshold);
  o.get("noise", c.operators.noise);
  o.finish();
  s.finish();
}

metrics::CameraModel read_camera(Section s) {
  std::string label;
  s.get("label", label);
  if (label.empty()) throw ConfigError(s.key_path("label"), "required");
  double focal = 500.0;
  s.get("focal", focal);
  std::array<double, 2> res{640, 480};
  s.get("resolution", res);
  if (res[0] != std::floor(res[0]) || res[1] != std::floor(res[1]))
    throw ConfigError(s.key_path("resolution"), "expected integers");
  Vec3 position = Vec3::Zero();
  if (!s.has("position")) throw ConfigError(s.key_path("position"), "required");
  s.get("position", position);
  metrics::CameraModel c;
  if (s.has("look_at")) {
    if (s.has("world_to_camera")) throw ConfigError(s.key_path("look_at"), "conflicts with world_to_camera");
    Vec3 target = Vec3::Zero(), up = Vec3::UnitZ();
    s.get("look_at", target);
    s.get("up", up);
    if ((target - position).cross(up).norm() < 1e-9) throw ConfigError(s.key_path("up"), "parallel to the view direction");
    c = metrics::CameraModel::look_at(label, position, target, up, focal, static_cast<int>(res[0]),
                                      static_cast<int>(res[1]));
  } else {
    std::array<double, 9> rows{};
    if (!s.has("world_to_camera")) throw ConfigError(s.key_path("world_to_camera"), "required without look_at");
    s.get("world_to_camera", rows);
    c.label = label;
    c.position = position;
    for (int i = 0; i < 9; ++i) c.world_to_camera(i / 3, i % 3) = rows[i];
    c.focal = focal;
    c.width = static_cast<int>(res[0]);
    c.height = static_cast<int>(res[1]);
    c.principal_point = {0.5 * c.width, 0.5 * c.height};
  }
  s.get("principal_point", c.principal_point);
  s.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(s.key_path(""), e.what());
  }
  return c;
}

void read_seeds(Section s, SeedConfig& c) {
  s.get("shape", c.shape);
  s.get("train", c.train);
  s.get("evaluate", c.evaluate);
  s.get("probmap", c.probmap);
  s.get("simulate", c.simulate);
  s.finish();
}

void positive(double v, const char* path) {
  if (!(v > 0.0)) throw ConfigError(path, "must be > 0");
}

}  // namespace

void RunConfig::validate() const {
  constexpr auto kSeedMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  for (const auto& [name, value] : {std::pair{"shape", seeds.shape}, std::pair{"train", seeds.train},
                                    std::pair{"evaluate", seeds.evaluate}, std::pair{"probmap", seeds.probmap},
                                    std::pair{"simulate", seeds.simulate}})
    if (value > kSeedMax) throw ConfigError(std::string("seeds.") + name, "must be <= 9223372036854775807");
  positive(phantom.svc_radius, "phantom.svc_radius");
  positive(phantom.svc_length, "phantom.svc_length");
  positive(phantom.atrium_radius, "phantom.atrium_radius");
  positive(phantom.ventricle_radius, "phantom.ventricle_radius");
  positive(phantom.annulus_radius, "phantom.annulus_radius");
  positive(phantom.annulus_thickness, "phantom.annulus_thickness");
  positive(phantom.grid_resolution, "phantom.grid_resolution");
  if (phantom.svc_radius >= phantom.atrium_radius) throw ConfigError("phantom.svc_radius", "must be < atrium_radius");
  if (phantom.annulus_radius >= phantom.atrium_radius || phantom.annulus_radius >= phantom.ventricle_radius)
    throw ConfigError("phantom.annulus_radius", "must be < atrium_radius and ventricle_radius");
  if (mesh) {
    if (!std::filesystem::exists(mesh->path)) throw ConfigError("mesh.path", "file not found: " + mesh->path.string());
    positive(mesh->unit_scale, "mesh.unit_scale");
    if ((mesh->p2 - mesh->p1).norm() <= 0.0) throw ConfigError("mesh.p2", "must differ from p1");
    if (mesh->svc_outward.norm() <= 0.0) throw ConfigError("mesh.svc_outward", "must be non-zero");
  }
  for (Dof d : kinematics::kAllDofs) {
    const std::string name(kinematics::to_string(d));
    if (!(limits[d].min < limits[d].max)) throw ConfigError("limits." + name, "expected min < max");
    if (!(limits.velocity(d) > 0.0)) throw ConfigError("limits.max_velocity." + name, "must be > 0");
  }
  positive(rig.active_length, "rig.active_length");
  if (!(rig.passive_length >= 0.0)) throw ConfigError("rig.passive_length", "must be >= 0");
  positive(rig.min_exposed_length, "rig.min_exposed_length");
  env.validate();
  for (Dof d : kinematics::kAllDofs)
    if (!limits[d].contains(init.nominal[d])) throw ConfigError("init.nominal", "outside the joint limits");
  sac.validate();
  if (evaluate_rollouts < 1) throw ConfigError("evaluate.rollouts", "must be >= 1");
  if (shape.samples < 10) throw ConfigError("shape.samples", "must be >= 10");
  if (shape.fit.epochs < 0) throw ConfigError("shape.epochs", "must be >= 0");
  if (shape.fit.hidden_layers.empty()) throw ConfigError("shape.hidden_layers", "must not be empty");
  for (int h : shape.fit.hidden_layers)
    if (h < 1) throw ConfigError("shape.hidden_layers", "widths must be >= 1");
  positive(shape.fit.learning_rate, "shape.learning_rate");
  positive(shape.fit.final_learning_rate, "shape.final_learning_rate");
  if (!(shape.fit.validation_fraction > 0.0 && shape.fit.validation_fraction < 1.0))
    throw ConfigError("shape.validation_fraction", "must be in (0, 1)");
  if (probmap.n_inits < 1) throw ConfigError("probmap.n_inits", "must be >= 1");
  if (probmap.options.k_tb < 1) throw ConfigError("probmap.k_tb", "must be >= 1");
  if (probmap.options.k_rb < 1) throw ConfigError("probmap.k_rb", "must be >= 1");
  if (probmap.options.grid < 2) throw ConfigError("probmap.grid", "must be >= 2");
  positive(probmap.options.fit.tol, "probmap.tol");
  if (probmap.options.fit.max_iter < 1) throw ConfigError("probmap.max_iter", "must be >= 1");
  positive(probmap.options.fit.eigen_floor, "probmap.eigen_floor");
  const auto& g = copilot.governor;
  if (!(g.floor > 0.0 && g.floor <= 1.0)) throw ConfigError("governor.floor", "must be in (0, 1]");
  positive(g.epsilon, "governor.epsilon");
  positive(g.horizon, "governor.horizon");
  positive(copilot.tick_rate, "copilot.tick_rate");
  positive(copilot.idle_replan, "copilot.idle_replan");
  if (simulation.runs < 1) throw ConfigError("simulation.runs", "must be >= 1");
  positive(simulation.time_limit, "simulation.time_limit");
  const auto& o = simulation.operators;
  if (!(o.reaction_delay.min >= 0.0)) throw ConfigError("simulation.operator.reaction_delay", "must be >= 0");
  if (!(o.intervention_threshold.min > 0.0))
    throw ConfigError("simulation.operator.intervention_threshold", "must be > 0");
  if (!(o.noise.min >= 0.0)) throw ConfigError("simulation.operator.noise", "must be >= 0");
  std::set<std::string> labels;
  for (const auto& c : cameras)
    if (!labels.insert(c.label).second) throw ConfigError("cameras." + c.label, "duplicate label");
  if (!cameras.empty() && (!labels.count("top") || !labels.count("sagittal")))
    throw ConfigError("cameras", "must define \"top\" and \"sagittal\"");
  if (output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
}

RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream where;
    where << "line " << e.source().begin.line << ", column " << e.source().begin.column;
    throw ConfigError("<document>", std::string(e.description()) + " (" + where.str() + ")");
  }
  RunConfig cfg;
  Section root(&doc, "");
  read_phantom(root.sub("phantom"), cfg.phantom);
  if (root.has("mesh")) {
    Section m = root.sub("mesh");
    MeshSource src;
    std::string path;
    m.get("path", path);
    if (path.empty()) throw ConfigError("mesh.path", "required");
    src.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
    m.get("unit_scale", src.unit_scale);
    m.get("svc_outward", src.svc_outward);
    if (!m.has("p1") || !m.has("p2")) throw ConfigError("mesh.p1", "p1 and p2 are required with a mesh");
    m.get("p1", src.p1);
    m.get("p2", src.p2);
    m.finish();
    cfg.mesh = src;
  } else {
    root.sub("mesh");
  }
  read_limits(root.sub("limits"), cfg.limits);
  read_rig(root.sub("rig"), cfg.rig);
  read_env(root.sub("env"), cfg.env);
  read_init(root.sub("init"), cfg.init);
  read_sac(root.sub("sac"), cfg.sac);
  {
    Section e = root.sub("evaluate");
    e.get("rollouts", cfg.evaluate_rollouts);
    e.finish();
  }
  read_shape(root.sub("shape"), cfg.shape);
  read_probmap(root.sub("probmap"), cfg.probmap);
  read_governor(root.sub("governor"), cfg.copilot.governor);
  read_copilot(root.sub("copilot"), cfg.copilot);
  read_simulation(root.sub("simulation"), cfg.simulation);
  if (const auto* cams = root.array_of_tables("cameras")) {
    for (std::size_t i = 0; i < cams->size(); ++i)
      cfg.cameras.push_back(read_camera(Section(cams->get(i)->as_table(), "cameras[" + std::to_string(i) + "]")));
  }
  read_seeds(root.sub("seeds"), cfg.seeds);
  {
    Section o = root.sub("output");
    std::string dir = cfg.output_dir.string();
    o.get("dir", dir);
    cfg.output_dir = dir;
    o.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

namespace {

template <class Range>
toml::array numbers(const Range& values) {
  toml::array a;
  for (double v : values) a.push_back(v);
  return a;
}
toml::array vec(const Vec3& v) { return numbers(std::array<double, 3>{v.x(), v.y(), v.z()}); }
toml::array interval(const Interval& i) { return numbers(std::array<double, 2>{i.min, i.max}); }
toml::array ints(const std::vector<int>& values) {
  toml::array a;
  for (int v : values) a.push_back(static_cast<std::int64_t>(v));
  return a;
}
std::int64_t seed(std::uint64_t s) { return static_cast<std::int64_t>(s); }

}  // namespace

std::string to_toml(const RunConfig& c, bool include_output) {
  toml::table doc;
  const auto& p = c.phantom;
  doc.insert("phantom", toml::table{{"svc_radius", p.svc_radius},
                                    {"svc_length", p.svc_length},
                                    {"atrium_radius", p.atrium_radius},
                                    {"ventricle_radius", p.ventricle_radius},
                                    {"annulus_radius", p.annulus_radius},
                                    {"annulus_thickness", p.annulus_thickness},
                                    {"annulus_offset_angle", p.annulus_offset_angle},
                                    {"annulus_azimuth", p.annulus_azimuth},
                                    {"grid_resolution", p.grid_resolution}});
  if (c.mesh)
    doc.insert("mesh", toml::table{{"path", c.mesh->path.string()},
                                   {"unit_scale", c.mesh->unit_scale},
                                   {"svc_outward", vec(c.mesh->svc_outward)},
                                   {"p1", vec(c.mesh->p1)},
                                   {"p2", vec(c.mesh->p2)}});
  toml::table limits, velocity;
  for (Dof d : kinematics::kAllDofs) {
    limits.insert(kinematics::to_string(d), interval(c.limits[d]));
    velocity.insert(kinematics::to_string(d), c.limits.velocity(d));
  }
  limits.insert("max_velocity", velocity);
  doc.insert("limits", limits);
  doc.insert("rig", toml::table{{"passive_length", c.rig.passive_length},
                                {"active_length", c.rig.active_length},
                                {"sheath_gain", c.rig.sheath_gain},
                                {"core_gain", c.rig.core_gain},
                                {"min_exposed_length", c.rig.min_exposed_length}});
  const auto& e = c.env;
  doc.insert("env", toml::table{{"max_steps", e.max_steps},
                                {"action_scale", numbers(e.action_scale)},
                                {"success_pos_tol", e.success_pos_tol},
                                {"success_ang_tol", e.success_ang_tol},
                                {"wall_margin", e.wall_margin},
                                {"r_step", e.r_step},
                                {"r_obstacle", e.r_obstacle},
                                {"r_target", e.r_target},
                                {"error_weight", e.error_weight}});
  doc.insert("init", toml::table{{"nominal", numbers(c.init.nominal.to_array())},
                                 {"translation", interval(c.init.translation)},
                                 {"rotation", interval(c.init.rotation)},
                                 {"bending", interval(c.init.bending)}});
  const auto& s = c.sac;
  doc.insert("sac", toml::table{{"episodes", s.episodes},
                                {"discount", s.discount},
                                {"tau", s.tau},
                                {"replay_capacity", s.replay_capacity},
                                {"batch_size", s.batch_size},
                                {"hidden_layers", ints(s.hidden_layers)},
                                {"learning_rate", s.learning_rate},
                                {"target_entropy", s.target_entropy},
                                {"initial_alpha", s.initial_alpha},
                                {"reward_scale", s.reward_scale},
                                {"shaping_weight", s.shaping_weight},
                                {"warmup_steps", s.warmup_steps},
                                {"updates_per_step", s.updates_per_step}});
  doc.insert("evaluate", toml::table{{"rollouts", c.evaluate_rollouts}});
  const auto& f = c.shape.fit;
  doc.insert("shape", toml::table{{"samples", c.shape.samples},
                                  {"hidden_layers", ints(f.hidden_layers)},
                                  {"activation", nn::to_string(f.activation)},
                                  {"epochs", f.epochs},
                                  {"learning_rate", f.learning_rate},
                                  {"final_learning_rate", f.final_learning_rate},
                                  {"validation_fraction", f.validation_fraction}});
  const auto& m = c.probmap;
  doc.insert("probmap", toml::table{{"n_inits", m.n_inits},
                                    {"successful_only", m.successful_only},
                                    {"k_tb", m.options.k_tb},
                                    {"k_rb", m.options.k_rb},
                                    {"grid", m.options.grid},
                                    {"tol", m.options.fit.tol},
                                    {"max_iter", m.options.fit.max_iter},
                                    {"eigen_floor", m.options.fit.eigen_floor}});
  const auto& g = c.copilot.governor;
  doc.insert("governor", toml::table{{"floor", g.floor}, {"epsilon", g.epsilon}, {"horizon", g.horizon}});
  doc.insert("copilot", toml::table{{"tick_rate", c.copilot.tick_rate}, {"idle_replan", c.copilot.idle_replan}});
  const auto& o = c.simulation.operators;
  doc.insert("simulation",
             toml::table{{"runs", c.simulation.runs},
                         {"time_limit", c.simulation.time_limit},
                         {"goal_depth", c.simulation.goal_depth},
                         {"operator", toml::table{{"reaction_delay", interval(o.reaction_delay)},
                                                  {"error_bias", interval(o.error_bias)},
                                                  {"intervention_threshold", interval(o.intervention_threshold)},
                                                  {"noise", interval(o.noise)}}}});
  if (!c.cameras.empty()) {
    toml::array cams;
    for (const auto& cam : c.cameras) {
      std::array<double, 9> rows{};
      for (int i = 0; i < 9; ++i) rows[i] = cam.world_to_camera(i / 3, i % 3);
      cams.push_back(toml::table{{"label", cam.label},
                                 {"position", vec(cam.position)},
                                 {"world_to_camera", numbers(rows)},
                                 {"focal", cam.focal},
                                 {"principal_point", numbers(std::array<double, 2>{cam.principal_point.x(),
                                                                                   cam.principal_point.y()})},
                                 {"resolution", numbers(std::array<double, 2>{double(cam.width), double(cam.height)})}});
    }
    doc.insert("cameras", cams);
  }
  doc.insert("seeds", toml::table{{"shape", seed(c.seeds.shape)},
                                  {"train", seed(c.seeds.train)},
                                  {"evaluate", seed(c.seeds.evaluate)},
                                  {"probmap", seed(c.seeds.probmap)},
                                  {"simulate", seed(c.seeds.simulate)}});
  if (include_output) doc.insert("output", toml::table{{"dir", c.output_dir.string()}});
  std::ostringstream os;
  os << doc << "\n";
  return os.str();
}

}  // namespace ttvr::session
