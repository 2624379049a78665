#pragma once

#include "ttvr/anatomy/phantom.hpp"
#include "ttvr/copilot/session.hpp"
#include "ttvr/kinematics/shape_model.hpp"
#include "ttvr/metrics/camera.hpp"
#include "ttvr/probmap/probmap.hpp"
#include "ttvr/rl/sac.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ttvr::session {

/// External lumen mesh used instead of the procedural phantom.
struct MeshSource {
  std::filesystem::path path;  // STL or OBJ; relative paths resolve against the config file
  double unit_scale = 1.0;     // mesh units to mm
  Vec3 svc_outward = -Vec3::UnitZ();
  Vec3 p1 = Vec3::Zero();
  Vec3 p2 = Vec3::UnitZ();
};

struct ShapeConfig {
  int samples = 1000;
  kinematics::ShapeFitOptions fit;
};

struct ProbmapConfig {
  int n_inits = 500;
  bool successful_only = false;
  probmap::MapOptions options;
};

/// Operator profiles are drawn uniformly from these ranges, one per run.
struct OperatorRanges {
  kinematics::Interval reaction_delay{0.2, 0.6};
  kinematics::Interval error_bias{-1.0, 1.0};
  kinematics::Interval intervention_threshold{3.0, 6.0};
  kinematics::Interval noise{0.0, 0.1};
};

struct SimulationConfig {
  int runs = 10;
  double time_limit = 120.0;  // s per run
  double goal_depth = 5.0;    // mm past p1 for the operator's aligned goal
  OperatorRanges operators;
};

struct SeedConfig {
  std::uint64_t shape = 1;
  std::uint64_t train = 1;
  std::uint64_t evaluate = 12345;
  std::uint64_t probmap = 7;
  std::uint64_t simulate = 100;
};

struct RunConfig {
  anatomy::PhantomSpec phantom;
  std::optional<MeshSource> mesh;
  kinematics::JointLimits limits;
  kinematics::RigGeometry rig;
  rl::EnvConfig env;
  rl::InitDistribution init;
  rl::SacConfig sac;
  int evaluate_rollouts = 100;
  ShapeConfig shape;
  ProbmapConfig probmap;
  copilot::SessionConfig copilot;
  SimulationConfig simulation;
  std::vector<metrics::CameraModel> cameras;  // empty: top and sagittal views fitted to the anatomy
  SeedConfig seeds;
  std::filesystem::path output_dir = "runs/default";

  /// Throws ConfigError naming the offending key path.
  void validate() const;
};

/// Parses a TOML document. Unknown keys, wrong types and violated ranges throw
/// ConfigError with the dotted key path. `base_dir` resolves relative paths.
RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = ".");
/// Throws ConfigError("<file>", ...) when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical TOML of every field, defaults included. parse_config of the
/// result reproduces the same RunConfig (output.dir only when included).
std::string to_toml(const RunConfig& cfg, bool include_output = true);

}  // namespace ttvr::session
