#pragma once

#include "ttvr/core/types.hpp"

#include <array>
#include <cstddef>

namespace ttvr {

/// Number of samples along the flexible segment of the catheter.
inline constexpr std::size_t kShapePoints = 100;

/// Position plus orientation of the catheter tip. The rotation's columns are
/// the tip frame axes expressed in the parent frame; column 2 is the tangent.
struct TipFrame {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  Vec3 tangent() const { return rotation.col(2); }
};

struct TipPose {
  Vec3 position = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
};

/// Ordered base-to-tip polyline of the flexible segment.
struct CatheterShape {
  std::array<Vec3, kShapePoints> points{};
  TipFrame tip_frame;

  TipPose tip_pose() const { return {tip_frame.position, tip_frame.tangent()}; }
  double polyline_length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
    return total;
  }
};

}  // namespace ttvr
