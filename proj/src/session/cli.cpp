#include "ttvr/session/cli.hpp"

#include "ttvr/session/bridge.hpp"
#include "ttvr/session/run.hpp"

#include <CLI11.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

namespace ttvr::session {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MissingArtifact : Error {
  using Error::Error;
};

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c, bool with_seed = true) {
  app->add_option("-c,--config", c.config, "Run configuration (TOML); built-in defaults when omitted");
  app->add_option("-o,--out", c.out, "Output run directory (overrides output.dir)");
  if (with_seed) app->add_option("-s,--seed", c.seed, "Seed override for this step");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? parse_config("") : load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

fs::path artifact(const std::string& given, const fs::path& fallback) {
  const fs::path p = given.empty() ? fallback : fs::path(given);
  if (!fs::exists(p)) throw MissingArtifact("missing artifact: " + p.string());
  return p;
}

std::shared_ptr<const rl::Policy> load_policy(const fs::path& p) {
  return std::make_shared<rl::Policy>(rl::Policy::from_json(json::parse(read_file(p))));
}

std::shared_ptr<const probmap::ProbabilityMap> load_maps(const fs::path& p) {
  return std::make_shared<probmap::ProbabilityMap>(probmap::ProbabilityMap::from_json(json::parse(read_file(p))));
}

void print_error(std::ostream& err, const char* kind, const std::string& message, const std::string& path = {}) {
  json e{{"kind", kind}, {"message", message}};
  if (!path.empty()) e["path"] = path;
  err << json{{"error", e}}.dump() << std::endl;
}

void init_logging() {
  static const bool done = [] {
    auto logger = spdlog::stderr_color_mt("ttvr");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::cfg::load_env_levels();
    return true;
  }();
  (void)done;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app{"Co-piloted transcatheter valve navigation toolkit", "ttvr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.footer("Log level: SPDLOG_LEVEL=trace|debug|info|warn|error|off (default info). Logs go to stderr.");

  Common common;
  std::string policy_path, maps_path, mode_name = "master_slave", phase_name = "initialization", run_dir, run_a,
                                     run_b, address = "127.0.0.1";
  double alpha = 0.05, duration = 0.0;
  unsigned short port = 8765;

  auto* phantom = app.add_subcommand("phantom", "Synthesize the phantom: phantom.stl and target.json");
  add_common(phantom, common, false);
  auto* fit_shape = app.add_subcommand("fit-shape", "Fit the shape regressor: shape_model.json, shape_curve.csv");
  add_common(fit_shape, common);
  auto* train = app.add_subcommand("train", "Train the localization policy: policy.json, curves.csv");
  add_common(train, common);
  auto* evaluate = app.add_subcommand("evaluate", "Seeded evaluation rollouts: evaluation.json, evaluation.csv");
  add_common(evaluate, common);
  evaluate->add_option("-p,--policy", policy_path, "Policy JSON (default <out>/policy.json)");
  auto* probmap_cmd = app.add_subcommand("probmap", "Fit probability maps: maps/probability_map.json, maps/*_grid.csv");
  add_common(probmap_cmd, common);
  probmap_cmd->add_option("-p,--policy", policy_path, "Policy JSON (default <out>/policy.json)");
  auto* simulate = app.add_subcommand(
      "simulate", "Scripted-operator closed loop: trajectories/*.jsonl, events/*.jsonl, metrics.csv, simulation.json");
  add_common(simulate, common);
  simulate->add_option("-m,--mode", mode_name, "master_slave or copilot")
      ->check(CLI::IsMember({"master_slave", "copilot"}));
  simulate->add_option("-p,--policy", policy_path, "Policy JSON for copilot mode");
  simulate->add_option("--maps", maps_path, "Probability map JSON for copilot mode");
  auto* metrics_cmd = app.add_subcommand("metrics", "Recompute metrics.csv of a recorded run (stdout or --out file)");
  metrics_cmd->add_option("-r,--run", run_dir, "Run directory with config.snapshot and trajectories/")->required();
  metrics_cmd->add_option("-o,--out", common.out, "Write the CSV here instead of stdout");
  auto* compare = app.add_subcommand("compare", "Compare the metrics of two run directories (JSON report)");
  compare->add_option("a", run_a, "First run directory")->required();
  compare->add_option("b", run_b, "Second run directory")->required();
  compare->add_option("--alpha", alpha, "Significance level of the normality and variance gates")
      ->check(CLI::Range(0.0, 1.0));
  compare->add_option("-o,--out", common.out, "Write the report here instead of stdout");
  auto* serve = app.add_subcommand("serve", "Serve a live session over WebSocket");
  add_common(serve, common, false);
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks one)");
  serve->add_option("-m,--mode", mode_name, "Initial control mode")->check(CLI::IsMember({"master_slave", "copilot"}));
  serve->add_option("--phase", phase_name, "Initial phase")
      ->check(CLI::IsMember({"initialization", "localization", "releasing", "anchoring", "retraction"}));
  serve->add_option("-p,--policy", policy_path, "Policy JSON (copilot mode)");
  serve->add_option("--maps", maps_path, "Probability map JSON (copilot mode)");
  serve->add_option("--duration", duration, "Stop after this many seconds (0 runs until interrupted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (metrics_cmd->parsed()) {
      const std::string csv = recompute_metrics(run_dir);
      if (common.out.empty())
        out << csv;
      else
        write_file(common.out, csv);
      return kExitOk;
    }
    if (compare->parsed()) {
      const std::string report = compare_runs(run_a, run_b, alpha).dump(2) + "\n";
      if (common.out.empty())
        out << report;
      else
        write_file(common.out, report);
      return kExitOk;
    }

    RunConfig cfg = resolve(common);
    const fs::path dir = cfg.output_dir;

    if (serve->parsed()) {
      const auto mode = *copilot::parse_mode(mode_name);
      const auto phase = *copilot::parse_phase(phase_name);
      auto ws = std::make_shared<Workspace>(build_workspace(cfg));
      std::shared_ptr<const rl::Policy> policy;
      std::shared_ptr<const probmap::ProbabilityMap> maps;
      if (!policy_path.empty() || mode == copilot::ControlMode::copilot)
        policy = load_policy(artifact(policy_path, dir / "policy.json"));
      if (!maps_path.empty() || mode == copilot::ControlMode::copilot)
        maps = load_maps(artifact(maps_path, dir / "maps" / "probability_map.json"));
      const auto copilot_cfg = cfg.copilot;
      Bridge bridge(
          [ws, policy, maps, mode, phase, copilot_cfg] {
            rl::LocalizationEnv env = ws->env;
            return copilot::Session(mode, env, policy, maps, env.init_distribution().nominal, copilot_cfg, phase);
          },
          BridgeOptions{address, port});
      bridge.start();
      out << json{{"listening", {{"address", address}, {"port", bridge.port()}}}}.dump() << std::endl;
      boost::asio::io_context ioc;
      boost::asio::signal_set signals(ioc, SIGINT, SIGTERM);
      signals.async_wait([&](const boost::system::error_code&, int) { ioc.stop(); });
      boost::asio::steady_timer timer(ioc);
      if (duration > 0.0) {
        timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(duration)));
        timer.async_wait([&](const boost::system::error_code& ec) {
          if (!ec) ioc.stop();
        });
      }
      ioc.run();
      bridge.stop();
      const auto s = bridge.stats();
      spdlog::info("bridge stopped: {} ticks, {} commands applied, {} malformed, max latency {:.3f} ms", s.ticks,
                   s.commands_applied, s.malformed, s.max_latency_ms);
      return kExitOk;
    }

    if (phantom->parsed()) {
      if (cfg.mesh) throw ConfigError("mesh", "phantom needs the procedural anatomy; remove the [mesh] table");
      begin_record(dir, cfg);
      const auto ph = anatomy::synthesize_phantom(cfg.phantom);
      write_file(dir / "phantom.stl", anatomy::write_stl_binary(ph.model.mesh()));
      const auto& t = ph.target;
      const auto& port_pose = ph.model.insertion_port();
      const json target{{"p1", {t.p1.x(), t.p1.y(), t.p1.z()}},
                        {"p2", {t.p2.x(), t.p2.y(), t.p2.z()}},
                        {"axis", {t.axis.x(), t.axis.y(), t.axis.z()}},
                        {"port",
                         {{"origin", {port_pose.origin.x(), port_pose.origin.y(), port_pose.origin.z()}},
                          {"axis", {port_pose.axis.x(), port_pose.axis.y(), port_pose.axis.z()}}}}};
      write_file(dir / "target.json", target.dump(2) + "\n");
      finish_record(dir, cfg);
      return kExitOk;
    }
    if (fit_shape->parsed()) {
      if (common.seed) cfg.seeds.shape = *common.seed;
      begin_record(dir, cfg);
      run_fit_shape(cfg, dir);
      finish_record(dir, cfg);
      return kExitOk;
    }

    if (train->parsed() && common.seed) cfg.seeds.train = *common.seed;
    if (evaluate->parsed() && common.seed) cfg.seeds.evaluate = *common.seed;
    if (probmap_cmd->parsed() && common.seed) cfg.seeds.probmap = *common.seed;
    if (simulate->parsed() && common.seed) cfg.seeds.simulate = *common.seed;

    // Resolve inputs before touching the output directory.
    std::shared_ptr<const rl::Policy> policy;
    std::shared_ptr<const probmap::ProbabilityMap> maps;
    const auto mode = *copilot::parse_mode(mode_name);
    if (evaluate->parsed() || probmap_cmd->parsed() || (simulate->parsed() && mode == copilot::ControlMode::copilot))
      policy = load_policy(artifact(policy_path, dir / "policy.json"));
    if (simulate->parsed() && mode == copilot::ControlMode::copilot)
      maps = load_maps(artifact(maps_path, dir / "maps" / "probability_map.json"));

    Workspace ws = build_workspace(cfg);
    begin_record(dir, cfg);
    if (train->parsed()) run_train(cfg, ws, dir);
    if (evaluate->parsed()) run_evaluate(cfg, ws, *policy, dir);
    if (probmap_cmd->parsed()) run_probmap(cfg, ws, *policy, dir);
    if (simulate->parsed()) run_simulate(cfg, ws, mode, policy, maps, dir);
    finish_record(dir, cfg);
    return kExitOk;
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what(), e.path());
    return kExitConfig;
  } catch (const MissingArtifact& e) {
    print_error(err, "missing_artifact", e.what());
    return kExitMissingArtifact;
  } catch (const std::exception& e) {
    const std::string what = e.what();
    if (what.rfind("missing artifact", 0) == 0) {
      print_error(err, "missing_artifact", what);
      return kExitMissingArtifact;
    }
    print_error(err, "runtime", what);
    return kExitFailure;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace ttvr::session
