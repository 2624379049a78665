#include "ttvr/kinematics/joints.hpp"

#include "ttvr/core/types.hpp"

namespace ttvr::kinematics {

std::string_view to_string(Dof dof) {
  switch (dof) {
    case Dof::translation: return "translation";
    case Dof::rotation: return "rotation";
    case Dof::sheath: return "sheath";
    case Dof::bending: return "bending";
    case Dof::core: return "core";
    case Dof::jaw: return "jaw";
  }
  return "?";
}

std::optional<Dof> parse_dof(std::string_view name) {
  for (Dof d : kAllDofs)
    if (to_string(d) == name) return d;
  return std::nullopt;
}

std::string_view unit_of(Dof dof) {
  switch (dof) {
    case Dof::translation:
    case Dof::sheath:
    case Dof::core: return "mm";
    default: return "deg";
  }
}

double& JointState::operator[](Dof dof) {
  switch (dof) {
    case Dof::translation: return translation;
    case Dof::rotation: return rotation;
    case Dof::sheath: return sheath;
    case Dof::bending: return bending;
    case Dof::core: return core;
    case Dof::jaw: return jaw;
  }
  return jaw;
}

double JointState::operator[](Dof dof) const { return const_cast<JointState&>(*this)[dof]; }

std::array<double, kDofCount> JointState::to_array() const {
  return {translation, rotation, sheath, bending, core, jaw};
}

JointState JointState::from_array(const std::array<double, kDofCount>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

void JointLimits::validate() const {
  for (Dof d : kAllDofs) {
    const Interval& r = (*this)[d];
    if (!(r.min < r.max)) throw Error("joint limits: empty interval for " + std::string(to_string(d)));
    if (!(velocity(d) > 0.0)) throw Error("joint limits: non-positive velocity for " + std::string(to_string(d)));
  }
}

bool JointLimits::contains(const JointState& j) const {
  for (Dof d : kAllDofs)
    if (!(*this)[d].contains(j[d])) return false;
  return true;
}

double JointLimits::normalize(Dof dof, double value) const {
  const Interval& r = (*this)[dof];
  return 2.0 * (value - r.min) / r.width() - 1.0;
}

JointState clamp_joints(const JointState& j, const JointLimits& limits) {
  JointState out = j;
  for (Dof d : kAllDofs) out[d] = limits[d].clamp(j[d]);
  return out;
}

}  // namespace ttvr::kinematics
