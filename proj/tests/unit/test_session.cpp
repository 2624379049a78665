#include "ttvr/session/cli.hpp"
#include "ttvr/session/protocol.hpp"
#include "ttvr/session/run.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace ttvr;
using namespace ttvr::session;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ttvr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config_error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  return out;
}

}  // namespace

TEST(Config, DefaultRoundTrip) {
  const RunConfig cfg;
  const std::string text = to_toml(cfg);
  EXPECT_EQ(to_toml(parse_config(text)), text);
  EXPECT_EQ(to_toml(parse_config("")), text);
}

TEST(Config, ModifiedRoundTripIsExact) {
  RunConfig cfg;
  cfg.phantom.annulus_offset_angle = 30.0;
  cfg.limits[kinematics::Dof::bending] = {0.0, 150.0};
  cfg.limits.max_velocity[0] = 4.5;
  cfg.rig.passive_length = 12.5;
  cfg.env.max_steps = 150;
  cfg.init.rotation = {-7.5, 7.5};
  cfg.sac.episodes = 321;
  cfg.sac.hidden_layers = {32, 16};
  cfg.sac.learning_rate = 1.0 / 3.0;
  cfg.shape.fit.hidden_layers = {8, 8};
  cfg.probmap.n_inits = 50;
  cfg.probmap.successful_only = true;
  cfg.probmap.options.k_tb = 3;
  cfg.copilot.governor.floor = 0.35;
  cfg.copilot.tick_rate = 100.0;
  cfg.simulation.runs = 4;
  cfg.simulation.operators.noise = {0.0, 0.2};
  cfg.seeds.simulate = 9223372036854775807ull;
  cfg.cameras = metrics::default_cameras(fixtures::default_phantom().geometry.bounds());
  cfg.output_dir = "out/dir";
  const std::string text = to_toml(cfg);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(to_toml(back), text);
  EXPECT_EQ(back.sac.learning_rate, 1.0 / 3.0);
  EXPECT_EQ(back.seeds.simulate, 9223372036854775807ull);
  ASSERT_EQ(back.cameras.size(), 2u);
  EXPECT_EQ(back.cameras[0].world_to_camera, cfg.cameras[0].world_to_camera);
  EXPECT_EQ(back.output_dir, "out/dir");
}

TEST(Config, SnapshotExcludesOutputLocation) {
  RunConfig a, b;
  b.output_dir = "elsewhere";
  EXPECT_EQ(snapshot_hash(a), snapshot_hash(b));
  b.sac.episodes = 7;
  EXPECT_NE(snapshot_hash(a), snapshot_hash(b));
  EXPECT_EQ(to_toml(a, false).find("[output]"), std::string::npos);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(config_error_path("[sac]\nbogus = 1\n"), "sac.bogus");
  EXPECT_EQ(config_error_path("[sac]\nepisodes = \"many\"\n"), "sac.episodes");
  EXPECT_EQ(config_error_path("[nonsense]\n"), "nonsense");
  EXPECT_EQ(config_error_path("[shape]\nactivation = \"gelu\"\n"), "shape.activation");
  EXPECT_EQ(config_error_path("[simulation.operator]\nnoise = [0.2, 0.1]\n"), "simulation.operator.noise");
  EXPECT_EQ(config_error_path("[sac]\nepisodes = \n"), "<document>");
  EXPECT_EQ(config_error_path("[[cameras]]\nlabel = \"top\"\nposition = [0, 0, 0]\n"), "cameras[0].world_to_camera");
  EXPECT_NE(config_error_path("[governor]\nfloor = 1.5\n"), "<no error>");
  EXPECT_NE(config_error_path("[simulation]\nruns = 0\n"), "<no error>");
}

TEST(Config, MissingMeshFileIsRejected) {
  try {
    parse_config("[mesh]\npath = \"nope.stl\"\np1 = [0, 0, 1]\np2 = [0, 0, 2]\n", "/nonexistent");
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "mesh.path");
    EXPECT_NE(std::string(e.what()).find("/nonexistent/nope.stl"), std::string::npos);
  }
}

TEST(Config, SeedsBeyondTheTomlIntegerRangeAreRejected) {
  RunConfig cfg;
  cfg.seeds.train = 18446744073709551615ull;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Protocol, CommandRoundTrip) {
  copilot::OperatorCommand c;
  c.dof = kinematics::Dof::bending;
  c.velocity_fraction = -0.25;
  c.coupled = false;
  c.seq = 42;
  const auto m = parse_client_message(encode_client_message(CmdMessage{c}));
  const auto* cmd = std::get_if<CmdMessage>(&m);
  ASSERT_NE(cmd, nullptr);
  EXPECT_EQ(cmd->command.dof, kinematics::Dof::bending);
  EXPECT_EQ(cmd->command.velocity_fraction, -0.25);
  EXPECT_EQ(cmd->command.seq, 42);
  EXPECT_FALSE(cmd->command.coupled);
}

TEST(Protocol, ModeAndPhaseRoundTrip) {
  const auto m = parse_client_message(encode_client_message(ModeMessage{copilot::ControlMode::copilot}));
  EXPECT_EQ(std::get<ModeMessage>(m).mode, copilot::ControlMode::copilot);
  const auto p = parse_client_message(R"({"v":1,"type":"phase","phase":"releasing"})");
  EXPECT_EQ(std::get<PhaseMessage>(p).phase, copilot::Phase::releasing);
  const auto c = parse_client_message(R"({"v":1,"type":"cmd","dof":"sheath","velocity_fraction":1,"coupled":true})");
  EXPECT_TRUE(std::get<CmdMessage>(c).command.coupled);
  EXPECT_EQ(std::get<CmdMessage>(c).command.seq, -1);
}

TEST(Protocol, MalformedMessagesAreRejected) {
  const char* bad[] = {
      "not json",
      "[1, 2]",
      R"({"type":"cmd","dof":"bending","velocity_fraction":0.5})",
      R"({"v":2,"type":"cmd","dof":"bending","velocity_fraction":0.5})",
      R"({"v":"1","type":"cmd","dof":"bending","velocity_fraction":0.5})",
      R"({"v":1,"type":"teleport"})",
      R"({"v":1,"dof":"bending","velocity_fraction":0.5})",
      R"({"v":1,"type":"cmd","dof":"elbow","velocity_fraction":0.5})",
      R"({"v":1,"type":"cmd","dof":"bending"})",
      R"({"v":1,"type":"cmd","dof":"bending","velocity_fraction":1.5})",
      R"({"v":1,"type":"cmd","dof":"bending","velocity_fraction":"fast"})",
      R"({"v":1,"type":"cmd","dof":"bending","velocity_fraction":0.5,"extra":0})",
      R"({"v":1,"type":"cmd","dof":"bending","velocity_fraction":0.5,"seq":-3})",
      R"({"v":1,"type":"cmd","dof":"bending","velocity_fraction":0.5,"coupled":1})",
      R"({"v":1,"type":"mode","mode":"autopilot"})",
      R"({"v":1,"type":"phase","phase":"docking"})",
      R"({"v":1,"type":"phase"})",
  };
  for (const char* text : bad) EXPECT_THROW(parse_client_message(text), ProtocolError) << text;
}

TEST(Protocol, StateMessageCarriesTheSchema) {
  copilot::SessionState s;
  s.t = 1.5;
  s.joints.bending = 30.0;
  s.tip.position = {1, 2, 3};
  s.scales[3] = 0.2;
  s.phase = copilot::Phase::localization;
  s.mode = copilot::ControlMode::copilot;
  s.plan_index = 2;
  s.plan_size = 9;
  const json j = json::parse(encode_state(s, 17));
  EXPECT_EQ(j.at("v"), 1);
  EXPECT_EQ(j.at("type"), "state");
  EXPECT_EQ(j.at("t"), 1.5);
  EXPECT_EQ(j.at("joints").size(), 6u);
  EXPECT_EQ(j.at("joints")[3], 30.0);
  EXPECT_EQ(j.at("tip").size(), 6u);
  EXPECT_EQ(j.at("tip")[2], 3.0);
  EXPECT_EQ(j.at("phase"), "localization");
  EXPECT_EQ(j.at("mode"), "copilot");
  EXPECT_EQ(j.at("scales").at("bending"), 0.2);
  EXPECT_EQ(j.at("scales").size(), 6u);
  EXPECT_EQ(j.at("terminal"), "running");
  EXPECT_EQ(j.at("plan").at("size"), 9);
  EXPECT_EQ(j.at("ack"), 17);
  EXPECT_TRUE(json::parse(encode_state(s)).at("ack").is_null());
  const json e = json::parse(encode_error("bad", "cmd"));
  EXPECT_EQ(e.at("type"), "error");
  EXPECT_EQ(e.at("ref"), "cmd");
  EXPECT_TRUE(json::parse(encode_error("bad")).at("ref").is_null());
  const json ev = json::parse(encode_event({2.0, "replan", {{"reason", "x"}}}));
  EXPECT_EQ(ev.at("kind"), "replan");
  EXPECT_EQ(ev.at("payload").at("reason"), "x");
}

TEST(Record, TrajectoryJsonlRoundTrip) {
  std::vector<metrics::Frame> frames{{0.0, {1, 2, 3, 4, 5, 6}, false}, {0.02, {1.0 / 3.0, 2, 3, 4, 5, 6}, true}};
  const auto back = parse_trajectory_jsonl(trajectory_jsonl(frames));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].joints, frames[1].joints);
  EXPECT_EQ(back[1].t, 0.02);
  EXPECT_TRUE(back[1].intervening);
  EXPECT_THROW(parse_trajectory_jsonl("{\"t\":1,\"joints\":[0,0,0,0,0,0],\"intervening\":false}\n"
                                      "{\"t\":0.5,\"joints\":[0,0,0,0,0,0],\"intervening\":false}\n"),
               Error);
}

TEST(Record, Sha256KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Record, SimulationIsByteIdenticalAcrossRuns) {
  RunConfig cfg;
  cfg.simulation.runs = 2;
  cfg.simulation.time_limit = 30.0;
  const Workspace ws = build_workspace(cfg);
  std::vector<std::map<std::string, std::string>> trees;
  for (const char* name : {"a", "b"}) {
    const fs::path dir = temp_dir(std::string("det_") + name);
    for (auto mode : {copilot::ControlMode::master_slave, copilot::ControlMode::copilot}) {
      const fs::path out = dir / std::string(copilot::to_string(mode));
      begin_record(out, cfg);
      run_simulate(cfg, ws, mode, fixtures::trained_policy(), fixtures::trained_maps(), out);
      finish_record(out, cfg);
    }
    trees.push_back(tree(dir));
  }
  EXPECT_GT(trees[0].size(), 10u);
  EXPECT_EQ(trees[0], trees[1]);
  const json manifest = json::parse(trees[0].at("copilot/manifest.json"));
  EXPECT_EQ(manifest.at("snapshot_sha256"), snapshot_hash(cfg));
  EXPECT_EQ(manifest.at("artifacts").at("metrics.csv"), sha256_hex(trees[0].at("copilot/metrics.csv")));
}

TEST(Metrics, GoldenSampleRun) {
  const std::string computed = recompute_metrics(fixtures::data_path("sample_run"));
  const MetricsTable got = parse_metrics_csv(computed);
  const MetricsTable want = parse_metrics_csv(fixtures::read_text(fixtures::data_path("sample_run_metrics.csv")));
  ASSERT_EQ(got.runs, want.runs);
  ASSERT_EQ(got.columns.size(), want.columns.size());
  for (const auto& [name, values] : want.columns) {
    const auto& g = got.columns.at(name);
    ASSERT_EQ(g.size(), values.size()) << name;
    for (std::size_t i = 0; i < values.size(); ++i)
      EXPECT_NEAR(g[i], values[i], 1e-9 * std::max(1.0, std::abs(values[i]))) << name << " " << i;
  }
}

TEST(Metrics, CompareReportsEveryColumn) {
  const fs::path a = temp_dir("cmp_a"), b = temp_dir("cmp_b");
  write_file(a / "metrics.csv",
             "run,frames,ae_px,ptl_px,ttl_mm,me,total_time_s,intervention_time_s\n"
             "r0,10,1,2,3,0.5,10,5\nr1,10,2,3,4,0.6,11,6\nr2,10,3,4,5,0.7,12,7\nr3,10,4,5,6,0.8,13,8\n");
  write_file(b / "metrics.csv",
             "run,frames,ae_px,ptl_px,ttl_mm,me,total_time_s,intervention_time_s\n"
             "r0,10,1,2,3,nan,10,1\nr1,10,2,3,4,nan,11,1.5\nr2,10,3,4,5,nan,12,2\nr3,10,4,5,6,nan,13,2.5\n");
  const json report = compare_runs(a, b);
  const auto& m = report.at("metrics");
  EXPECT_FALSE(m.contains("frames"));
  EXPECT_TRUE(m.at("me").contains("skipped"));
  EXPECT_EQ(m.at("intervention_time_s").at("mean_a"), 6.5);
  EXPECT_TRUE(m.at("intervention_time_s").contains("test_used"));
}

TEST(Cli, HelpAndVersion) {
  std::ostringstream out, err;
  EXPECT_EQ(run_cli({"--help"}, out, err), kExitOk);
  EXPECT_NE(out.str().find("simulate"), std::string::npos);
  std::ostringstream vout, verr;
  EXPECT_EQ(run_cli({"--version"}, vout, verr), kExitOk);
  EXPECT_NE(vout.str().find(kVersion), std::string::npos);
}

TEST(Cli, UsageErrors) {
  std::ostringstream out, err;
  EXPECT_EQ(run_cli({}, out, err), kExitUsage);
  EXPECT_EQ(run_cli({"fly"}, out, err), kExitUsage);
  EXPECT_EQ(run_cli({"simulate", "--mode", "autopilot"}, out, err), kExitUsage);
}

TEST(Cli, ConfigErrorIsMachineReadable) {
  const fs::path dir = temp_dir("cli_cfg");
  write_file(dir / "bad.toml", "[sac]\nbogus = 1\n");
  std::ostringstream out, err;
  EXPECT_EQ(run_cli({"train", "-c", (dir / "bad.toml").string(), "-o", (dir / "out").string()}, out, err),
            kExitConfig);
  const json j = json::parse(err.str().substr(err.str().find('{')));
  EXPECT_EQ(j.at("error").at("kind"), "config");
  EXPECT_EQ(j.at("error").at("path"), "sac.bogus");
}

TEST(Cli, MissingArtifact) {
  const fs::path dir = temp_dir("cli_missing");
  std::ostringstream out, err;
  EXPECT_EQ(run_cli({"evaluate", "-o", dir.string()}, out, err), kExitMissingArtifact);
  EXPECT_EQ(run_cli({"metrics", "--run", (dir / "none").string()}, out, err), kExitMissingArtifact);
}

TEST(Cli, MetricsCommandWritesTheTable) {
  const fs::path dir = temp_dir("cli_metrics");
  std::ostringstream out, err;
  ASSERT_EQ(run_cli({"metrics", "--run", fixtures::data_path("sample_run"), "--out", (dir / "m.csv").string()}, out,
                    err),
            kExitOk)
      << err.str();
  EXPECT_EQ(read_file(dir / "m.csv"), recompute_metrics(fixtures::data_path("sample_run")));
}
