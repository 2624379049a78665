#pragma once

#include "ttvr/copilot/operator.hpp"
#include "ttvr/metrics/metrics.hpp"
#include "ttvr/metrics/stats.hpp"
#include "ttvr/session/config.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ttvr::session {

inline constexpr const char* kVersion = "0.1.0";

/// Anatomy, task environment and resolved cameras built from a RunConfig.
struct Workspace {
  anatomy::HeartModel model;
  anatomy::ValveTarget target;
  rl::LocalizationEnv env;
  std::vector<metrics::CameraModel> cameras;  // always holds "top" and "sagittal"

  const metrics::CameraModel& camera(const std::string& label) const;
  metrics::MetricContext metric_context() const;
};

/// Throws Error when no camera has `label`.
const metrics::CameraModel& find_camera(const std::vector<metrics::CameraModel>& cameras, const std::string& label);

/// Procedural phantom, or the configured mesh with its p1/p2.
Workspace build_workspace(const RunConfig& cfg);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string snapshot_hash(const RunConfig& cfg);

/// Writes bytes, creating parent directories. Throws Error on I/O failure.
void write_file(const std::filesystem::path& path, std::string_view bytes);
/// Throws Error("missing artifact: <path>") when absent.
std::string read_file(const std::filesystem::path& path);

/// Starts a run directory: config.snapshot holds the canonical config
/// without the output location.
void begin_record(const std::filesystem::path& dir, const RunConfig& cfg);
/// Writes manifest.json: snapshot hash, versions and the SHA-256 of every
/// other file in the directory, sorted by relative path.
void finish_record(const std::filesystem::path& dir, const RunConfig& cfg);

/// One JSON object per frame: {"t", "joints": [6], "intervening"}.
std::string trajectory_jsonl(std::span<const metrics::Frame> frames);
std::vector<metrics::Frame> parse_trajectory_jsonl(std::string_view text);

struct MetricsTable {
  std::vector<std::string> runs;
  std::map<std::string, std::vector<double>> columns;  // by CSV header name
};
MetricsTable parse_metrics_csv(std::string_view text);

// Pipeline steps. Each writes its artifacts into `out` and returns the result.

kinematics::ShapeModel run_fit_shape(const RunConfig& cfg, const std::filesystem::path& out);
rl::TrainingResult run_train(const RunConfig& cfg, Workspace& ws, const std::filesystem::path& out);
rl::LocalizationStats run_evaluate(const RunConfig& cfg, Workspace& ws, const rl::Policy& policy,
                                   const std::filesystem::path& out);
probmap::ProbabilityMap run_probmap(const RunConfig& cfg, Workspace& ws, const rl::Policy& policy,
                                    const std::filesystem::path& out);

struct SimulatedRun {
  std::string name;
  copilot::OperatorProfile profile;
  kinematics::JointState initial;
  std::vector<metrics::Frame> frames;
  std::vector<copilot::SessionEvent> events;
  metrics::RunMetrics metrics;
  std::string terminal;
};

/// Operator profile of run `index`, drawn from the configured ranges.
copilot::OperatorProfile operator_profile(const RunConfig& cfg, int index);

/// Scripted-operator closed loop, one run per profile. Run i starts from the
/// same initial state and operator seed in both modes. Copilot mode needs a
/// policy and maps.
std::vector<SimulatedRun> simulate_runs(const RunConfig& cfg, const Workspace& ws, copilot::ControlMode mode,
                                        std::shared_ptr<const rl::Policy> policy,
                                        std::shared_ptr<const probmap::ProbabilityMap> maps);
/// simulate_runs plus trajectories/, events/, metrics.csv and simulation.json.
std::vector<SimulatedRun> run_simulate(const RunConfig& cfg, const Workspace& ws, copilot::ControlMode mode,
                                       std::shared_ptr<const rl::Policy> policy,
                                       std::shared_ptr<const probmap::ProbabilityMap> maps,
                                       const std::filesystem::path& out);

/// Recomputes metrics.csv content from a run directory's trajectories and snapshot.
std::string recompute_metrics(const std::filesystem::path& run_dir);

/// compare_groups on every metrics column of two run directories.
nlohmann::json compare_runs(const std::filesystem::path& a, const std::filesystem::path& b, double alpha = 0.05);

}  // namespace ttvr::session
