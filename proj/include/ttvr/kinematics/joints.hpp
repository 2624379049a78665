#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace ttvr::kinematics {

/// Degrees of freedom of the delivery catheter drive, in drive order.
enum class Dof : int { translation = 0, rotation = 1, sheath = 2, bending = 3, core = 4, jaw = 5 };

inline constexpr std::size_t kDofCount = 6;
inline constexpr std::array<Dof, kDofCount> kAllDofs = {Dof::translation, Dof::rotation, Dof::sheath,
                                                        Dof::bending,     Dof::core,     Dof::jaw};
/// The three DOFs steered during localization.
inline constexpr std::array<Dof, 3> kPlanningDofs = {Dof::translation, Dof::rotation, Dof::bending};

std::string_view to_string(Dof dof);
std::optional<Dof> parse_dof(std::string_view name);
/// "mm" or "deg".
std::string_view unit_of(Dof dof);

/// Joint coordinates: translation/sheath/core in mm, rotation/bending/jaw in deg.
struct JointState {
  double translation = 0.0;
  double rotation = 0.0;
  double sheath = 0.0;
  double bending = 0.0;
  double core = 0.0;
  double jaw = 0.0;

  double& operator[](Dof dof);
  double operator[](Dof dof) const;
  std::array<double, kDofCount> to_array() const;
  static JointState from_array(const std::array<double, kDofCount>& values);
  bool operator==(const JointState&) const = default;
};

struct Interval {
  double min = 0.0;
  double max = 0.0;
  double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
  double width() const { return max - min; }
  bool contains(double v) const { return v >= min && v <= max; }
};

/// Workspace of each DOF plus its maximum speed (units per second).
struct JointLimits {
  std::array<Interval, kDofCount> range{{{0.0, 300.0},
                                         {-180.0, 180.0},
                                         {0.0, 60.0},
                                         {0.0, 160.0},
                                         {0.0, 60.0},
                                         {-360.0, 360.0}}};
  std::array<double, kDofCount> max_velocity{5.0, 15.0, 5.0, 15.0, 5.0, 30.0};

  const Interval& operator[](Dof dof) const { return range[static_cast<int>(dof)]; }
  Interval& operator[](Dof dof) { return range[static_cast<int>(dof)]; }
  double velocity(Dof dof) const { return max_velocity[static_cast<int>(dof)]; }

  /// Throws Error when an interval is empty or a velocity is not positive.
  void validate() const;
  bool contains(const JointState& j) const;
  /// Maps a planning DOF value to [-1, 1] across its interval.
  double normalize(Dof dof, double value) const;
};

/// Clips every coordinate into its interval. Idempotent.
JointState clamp_joints(const JointState& j, const JointLimits& limits);

}  // namespace ttvr::kinematics
