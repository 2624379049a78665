#pragma once

#include "ttvr/probmap/gmm.hpp"
#include "ttvr/rl/rollout.hpp"

#include <iosfwd>
#include <string_view>

namespace ttvr::probmap {

using kinematics::Dof;
using kinematics::JointLimits;
using kinematics::JointState;

/// Visited (translation, rotation, bending) rows pooled over rollouts.
struct JointSampleSet {
  std::vector<Vec3> rows;
  int n_inits = 0;
  int successes = 0;
  std::uint64_t seed = 0;
  bool successful_only = false;
};

/// Seed of rollout `index` under master `seed` (SplitMix64 of seed + index).
std::uint64_t rollout_seed(std::uint64_t seed, std::uint64_t index);

/// Runs n_inits stochastic policy rollouts, each from its own split seed, and
/// pools the state after every step in rollout order.
JointSampleSet sample_trajectories(const rl::Policy& policy, rl::LocalizationEnv& env, int n_inits,
                                   std::uint64_t seed, bool successful_only = false);

enum class MapPair { tb, rb };
std::string_view to_string(MapPair p);

struct MapLayer {
  Gmm2D gmm;
  kinematics::Interval x_range, y_range;
  double density_max = 1.0;  // largest raw density over the grid
  int grid = 200;

  /// Raw density normalized by density_max, clipped to [0, 1].
  double normalized(const Vec2& p) const;
  void write_grid_csv(std::ostream& os) const;
};

/// Translation-bending and rotation-bending maps.
struct ProbabilityMap {
  MapLayer tb, rb;
  nlohmann::json provenance;

  const MapLayer& layer(MapPair p) const { return p == MapPair::tb ? tb : rb; }
  nlohmann::json to_json() const;
  static ProbabilityMap from_json(const nlohmann::json& doc);
};

struct MapOptions {
  int k_tb = 5;
  int k_rb = 5;
  int grid = 200;
  GmmFitOptions fit;
};

/// Fits both layers; k is lowered to the number of distinct rows when needed.
ProbabilityMap build_probability_maps(const JointSampleSet& samples, const JointLimits& limits,
                                      const MapOptions& options = {});

/// Normalized density at `point` (x, y) of the pair's map, in [0, 1].
double density(const ProbabilityMap& map, MapPair pair, const Vec2& point);

struct GovernorConfig {
  double floor = 0.20;
  double epsilon = 1e-12;
  /// Lookahead distance per DOF as this many seconds at that DOF's max velocity.
  double horizon = 1.0;
};

/// Speed multiplier for moving `dof` in `direction` (sign) by `lookahead`
/// units: 1 when d1 >= d0, else clamp(d1 / max(d0, eps), floor, 1), on each map containing the DOF,
/// minimum over maps for bending. DOFs outside the maps and a zero direction
/// get 1.
double speed_scale(const ProbabilityMap& map, const JointState& current, Dof dof, double direction,
                   double lookahead, const GovernorConfig& cfg = {});

/// Scale of every DOF moving in the sign of `direction`, looking ahead
/// `horizon` seconds at that DOF's max velocity.
std::array<double, kinematics::kDofCount> speed_scales(const ProbabilityMap& map, const JointState& current,
                                                       const std::array<double, kinematics::kDofCount>& direction,
                                                       const JointLimits& limits, const GovernorConfig& cfg = {});

}  // namespace ttvr::probmap
