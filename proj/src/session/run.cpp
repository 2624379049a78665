#include "ttvr/session/run.hpp"

#include "ttvr/kinematics/ik.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ttvr::session {

namespace fs = std::filesystem;
using nlohmann::json;

const metrics::CameraModel& find_camera(const std::vector<metrics::CameraModel>& cameras, const std::string& label) {
  for (const auto& c : cameras)
    if (c.label == label) return c;
  throw Error("no camera labelled " + label);
}

const metrics::CameraModel& Workspace::camera(const std::string& label) const { return find_camera(cameras, label); }

metrics::MetricContext Workspace::metric_context() const {
  metrics::MetricContext ctx;
  ctx.rig = env.rig();
  ctx.target = target;
  ctx.top = camera("top");
  ctx.sagittal = camera("sagittal");
  return ctx;
}

Workspace build_workspace(const RunConfig& cfg) {
  anatomy::HeartModel model = [&] {
    if (!cfg.mesh) return anatomy::synthesize_phantom(cfg.phantom).model;
    const std::string bytes = read_file(cfg.mesh->path);
    return anatomy::load_heart_model(anatomy::as_bytes(bytes), cfg.mesh->unit_scale, cfg.mesh->svc_outward);
  }();
  const anatomy::ValveTarget target = cfg.mesh ? anatomy::ValveTarget::from_points(cfg.mesh->p1, cfg.mesh->p2)
                                               : anatomy::PhantomGeometry(cfg.phantom).valve_target();
  rl::LocalizationEnv env = rl::make_env(model, target, cfg.limits, cfg.env, cfg.init, cfg.rig, cfg.seeds.train);
  auto cameras = cfg.cameras.empty() ? metrics::default_cameras(model.bounds()) : cfg.cameras;
  return {std::move(model), target, std::move(env), std::move(cameras)};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string snapshot_hash(const RunConfig& cfg) { return sha256_hex(to_toml(cfg, false)); }

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing artifact: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void begin_record(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  write_file(dir / "config.snapshot", to_toml(cfg, false));
}

void finish_record(const fs::path& dir, const RunConfig& cfg) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel != "manifest.json") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json artifacts = json::object();
  for (const auto& f : files) artifacts[f] = sha256_hex(read_file(dir / f));
  const json manifest{{"format", "ttvr.run_record"},
                      {"version", 1},
                      {"snapshot_sha256", snapshot_hash(cfg)},
                      {"versions", {{"ttvr", kVersion}, {"policy", 1}, {"probability_map", 1}, {"protocol", 1}}},
                      {"artifacts", artifacts}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string trajectory_jsonl(std::span<const metrics::Frame> frames) {
  std::string out;
  for (const auto& f : frames) {
    const json line{{"t", f.t}, {"joints", f.joints.to_array()}, {"intervening", f.intervening}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<metrics::Frame> parse_trajectory_jsonl(std::string_view text) {
  std::vector<metrics::Frame> frames;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      metrics::Frame f;
      f.t = j.at("t").get<double>();
      f.joints = kinematics::JointState::from_array(j.at("joints").get<std::array<double, kinematics::kDofCount>>());
      f.intervening = j.value("intervening", false);
      if (!frames.empty() && !(f.t >= frames.back().t)) throw Error("time goes backwards");
      frames.push_back(f);
    } catch (const std::exception& e) {
      throw Error("trajectory line " + std::to_string(n) + ": " + e.what());
    }
  }
  return frames;
}

MetricsTable parse_metrics_csv(std::string_view text) {
  MetricsTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> header;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw Error("metrics.csv is empty");
  header = split(line);
  if (header.empty() || header[0] != "run") throw Error("metrics.csv: first column must be run");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw Error("metrics.csv: ragged row for " + cells.front());
    table.runs.push_back(cells[0]);
    for (std::size_t i = 1; i < cells.size(); ++i) table.columns[header[i]].push_back(std::stod(cells[i]));
  }
  return table;
}

kinematics::ShapeModel run_fit_shape(const RunConfig& cfg, const fs::path& out) {
  const auto range = cfg.limits[kinematics::Dof::bending];
  const auto data = kinematics::generate_shape_dataset(static_cast<std::size_t>(cfg.shape.samples), cfg.seeds.shape,
                                                       range, cfg.rig.active_length);
  auto options = cfg.shape.fit;
  options.seed = cfg.seeds.shape;
  auto model = kinematics::fit_shape_model(data, range, cfg.rig.active_length, options);
  const auto& r = model.report();
  spdlog::info("shape fit: held-out mean {:.4f} mm, max {:.4f} mm", r.validation_mean_error, r.validation_max_error);
  write_file(out / "shape_model.json", model.to_json().dump() + "\n");
  std::ostringstream curve;
  curve.precision(17);
  curve << "epoch,train_error_mm\n";
  for (std::size_t i = 0; i < r.loss_curve.size(); ++i) curve << i + 1 << ',' << r.loss_curve[i] << '\n';
  write_file(out / "shape_curve.csv", curve.str());
  return model;
}

rl::TrainingResult run_train(const RunConfig& cfg, Workspace& ws, const fs::path& out) {
  auto result = rl::train_sac(ws.env, cfg.sac, cfg.seeds.train, [](const rl::EpisodeRecord& e) {
    if ((e.episode + 1) % 50 == 0)
      spdlog::info("episode {} reward {:.1f} length {} alpha {:.4f}", e.episode + 1, e.reward, e.length, e.alpha);
  });
  write_file(out / "policy.json", result.policy.to_json().dump() + "\n");
  std::ostringstream curves;
  result.curves.write_csv(curves);
  write_file(out / "curves.csv", curves.str());
  return result;
}

rl::LocalizationStats run_evaluate(const RunConfig& cfg, Workspace& ws, const rl::Policy& policy, const fs::path& out) {
  auto stats = rl::evaluate(policy, ws.env, cfg.evaluate_rollouts, cfg.seeds.evaluate);
  std::ostringstream csv;
  csv.precision(17);
  csv << "rollout,terminal,length,reward,position_error_mm,orientation_error_deg\n";
  for (std::size_t i = 0; i < stats.records.size(); ++i) {
    const auto& r = stats.records[i];
    csv << i << ',' << rl::to_string(r.terminal) << ',' << r.length << ',' << r.total_reward << ','
        << r.position_error << ',' << r.orientation_error << '\n';
  }
  write_file(out / "evaluation.csv", csv.str());
  const json summary{{"rollouts", stats.records.size()},
                     {"success_rate", stats.success_rate},
                     {"position_error_mm", {{"mean", stats.position_mean}, {"std", stats.position_std}, {"max", stats.position_max}}},
                     {"orientation_error_deg",
                      {{"mean", stats.orientation_mean}, {"std", stats.orientation_std}, {"max", stats.orientation_max}}}};
  write_file(out / "evaluation.json", summary.dump(2) + "\n");
  spdlog::info("evaluation: success {:.2f}, max position error {:.2f} mm, max orientation error {:.2f} deg",
               stats.success_rate, stats.position_max, stats.orientation_max);
  return stats;
}

probmap::ProbabilityMap run_probmap(const RunConfig& cfg, Workspace& ws, const rl::Policy& policy, const fs::path& out) {
  const auto samples =
      probmap::sample_trajectories(policy, ws.env, cfg.probmap.n_inits, cfg.seeds.probmap, cfg.probmap.successful_only);
  auto options = cfg.probmap.options;
  options.fit.seed = cfg.seeds.probmap;
  auto maps = probmap::build_probability_maps(samples, cfg.limits, options);
  write_file(out / "maps" / "probability_map.json", maps.to_json().dump() + "\n");
  for (auto pair : {probmap::MapPair::tb, probmap::MapPair::rb}) {
    std::ostringstream grid;
    maps.layer(pair).write_grid_csv(grid);
    write_file(out / "maps" / (std::string(probmap::to_string(pair)) + "_grid.csv"), grid.str());
  }
  spdlog::info("probability maps: {} rows from {} rollouts ({} successful)", samples.rows.size(), samples.n_inits,
               samples.successes);
  return maps;
}

copilot::OperatorProfile operator_profile(const RunConfig& cfg, int index) {
  std::mt19937_64 rng(probmap::rollout_seed(cfg.seeds.simulate, static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& o = cfg.simulation.operators;
  auto draw = [&](const kinematics::Interval& i) { return i.min + i.width() * u(rng); };
  copilot::OperatorProfile p;
  p.reaction_delay = draw(o.reaction_delay);
  p.error_bias = draw(o.error_bias);
  p.intervention_threshold = draw(o.intervention_threshold);
  p.noise = draw(o.noise);
  return p;
}

std::vector<SimulatedRun> simulate_runs(const RunConfig& cfg, const Workspace& ws, copilot::ControlMode mode,
                                        std::shared_ptr<const rl::Policy> policy,
                                        std::shared_ptr<const probmap::ProbabilityMap> maps) {
  const auto goal = kinematics::solve_alignment(ws.env.rig(), ws.env.limits(), ws.target, cfg.simulation.goal_depth);
  const auto ctx = ws.metric_context();
  const double dt = 1.0 / cfg.copilot.tick_rate;
  std::vector<SimulatedRun> runs;
  for (int i = 0; i < cfg.simulation.runs; ++i) {
    const auto index = static_cast<std::uint64_t>(i);
    rl::LocalizationEnv env = ws.env;
    env.reseed(probmap::rollout_seed(cfg.seeds.simulate, 1000 + index));
    env.reset();
    SimulatedRun run;
    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << i;
    run.name = name.str();
    run.profile = operator_profile(cfg, i);
    run.initial = env.joints();
    copilot::Session s(mode, env, policy, maps, run.initial, cfg.copilot);
    s.set_phase(copilot::Phase::localization);
    copilot::ScriptedOperator op(run.profile, goal.joints, probmap::rollout_seed(cfg.seeds.simulate, 2000 + index));
    run.frames.push_back({0.0, s.state().joints, false});
    while (s.state().t < cfg.simulation.time_limit && !s.state().success && !s.state().collision) {
      const auto cmd = op.next(s);
      s.tick(dt, cmd);
      run.frames.push_back({s.state().t, s.state().joints, cmd.has_value()});
    }
    run.events = s.events();
    run.terminal = s.state().success ? "success" : (s.state().collision ? "collision" : "timeout");
    run.metrics = metrics::compute_run_metrics(run.frames, ctx);
    spdlog::info("{} {}: {} after {:.2f} s, intervention {:.2f} s, TTL {:.1f} mm", copilot::to_string(mode), run.name,
                 run.terminal, run.metrics.total_time, run.metrics.intervention_time, run.metrics.ttl);
    runs.push_back(std::move(run));
  }
  return runs;
}

std::vector<SimulatedRun> run_simulate(const RunConfig& cfg, const Workspace& ws, copilot::ControlMode mode,
                                       std::shared_ptr<const rl::Policy> policy,
                                       std::shared_ptr<const probmap::ProbabilityMap> maps, const fs::path& out) {
  auto runs = simulate_runs(cfg, ws, mode, std::move(policy), std::move(maps));
  std::ostringstream csv;
  metrics::write_metrics_csv_header(csv);
  json summary{{"mode", copilot::to_string(mode)}, {"runs", json::array()}};
  for (const auto& r : runs) {
    write_file(out / "trajectories" / (r.name + ".jsonl"), trajectory_jsonl(r.frames));
    std::string events;
    for (const auto& e : r.events) events += copilot::to_json(e).dump() + "\n";
    write_file(out / "events" / (r.name + ".jsonl"), events);
    metrics::write_metrics_csv_row(csv, r.name, r.metrics);
    summary["runs"].push_back({{"name", r.name},
                               {"terminal", r.terminal},
                               {"initial", r.initial.to_array()},
                               {"profile",
                                {{"reaction_delay", r.profile.reaction_delay},
                                 {"error_bias", r.profile.error_bias},
                                 {"intervention_threshold", r.profile.intervention_threshold},
                                 {"noise", r.profile.noise}}}});
  }
  write_file(out / "metrics.csv", csv.str());
  write_file(out / "simulation.json", summary.dump(2) + "\n");
  return runs;
}

std::string recompute_metrics(const fs::path& run_dir) {
  if (!fs::is_regular_file(run_dir / "config.snapshot"))
    throw Error("missing artifact: " + (run_dir / "config.snapshot").string());
  const RunConfig cfg = load_config(run_dir / "config.snapshot");
  const fs::path traj_dir = run_dir / "trajectories";
  if (!fs::is_directory(traj_dir)) throw Error("missing artifact: " + traj_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(traj_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("missing artifact: no trajectories in " + traj_dir.string());

  metrics::MetricContext ctx;
  if (cfg.cameras.empty()) {
    ctx = build_workspace(cfg).metric_context();
  } else {
    // Explicit cameras: no anatomy mesh is built for the phantom.
    ctx.rig = cfg.rig;
    ctx.target = cfg.mesh ? anatomy::ValveTarget::from_points(cfg.mesh->p1, cfg.mesh->p2)
                          : anatomy::PhantomGeometry(cfg.phantom).valve_target();
    ctx.rig.port = anatomy::InsertionPort{};
    ctx.top = find_camera(cfg.cameras, "top");
    ctx.sagittal = find_camera(cfg.cameras, "sagittal");
    if (cfg.mesh) {
      ctx.rig.port = anatomy::load_heart_model(anatomy::as_bytes(read_file(cfg.mesh->path)), cfg.mesh->unit_scale,
                                               cfg.mesh->svc_outward)
                         .insertion_port();
    }
  }
  std::ostringstream csv;
  metrics::write_metrics_csv_header(csv);
  for (const auto& f : files) {
    const auto frames = parse_trajectory_jsonl(read_file(f));
    if (frames.empty()) throw Error("empty trajectory: " + f.string());
    metrics::write_metrics_csv_row(csv, f.stem().string(), metrics::compute_run_metrics(frames, ctx));
  }
  return csv.str();
}

json compare_runs(const fs::path& a, const fs::path& b, double alpha) {
  const auto ta = parse_metrics_csv(read_file(a / "metrics.csv"));
  const auto tb = parse_metrics_csv(read_file(b / "metrics.csv"));
  json report{{"a", a.generic_string()}, {"b", b.generic_string()}, {"alpha", alpha}, {"metrics", json::object()}};
  for (const auto& [name, va] : ta.columns) {
    if (name == "frames") continue;
    auto it = tb.columns.find(name);
    if (it == tb.columns.end()) continue;
    const auto& vb = it->second;
    if (std::any_of(va.begin(), va.end(), [](double v) { return !std::isfinite(v); }) ||
        std::any_of(vb.begin(), vb.end(), [](double v) { return !std::isfinite(v); })) {
      report["metrics"][name] = {{"skipped", "non-finite values"}};
      continue;
    }
    try {
      report["metrics"][name] = metrics::to_json(metrics::compare_groups(va, vb, alpha));
    } catch (const Error& e) {
      report["metrics"][name] = {{"skipped", e.what()}};
    }
  }
  return report;
}

}  // namespace ttvr::session
