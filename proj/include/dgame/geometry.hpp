/*
 Copyright 2026 The dgame Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef DGAME_GEOMETRY_HPP_
#define DGAME_GEOMETRY_HPP_

#include "dgame/common.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace dgame {

/// Nearest point on a polyline.
struct LaneProjection {
  double distance = 0.0;
  Vec2 foot = Vec2::Zero();
  std::size_t segment = 0;
  // True when the foot is strictly inside the segment (not on a waypoint).
  bool interior = false;
};

/// Piecewise-linear lane centerline, traversed in waypoint order.
class LaneCenterline {
 public:
  LaneCenterline() = default;

  explicit LaneCenterline(std::vector<Vec2> waypoints)
      : points_(std::move(waypoints)) {
    if (points_.size() < 2) {
      throw ConfigError("lane centerline needs at least 2 waypoints");
    }
    arclength_.reserve(points_.size());
    arclength_.push_back(0.0);
    for (std::size_t k = 0; k + 1 < points_.size(); ++k) {
      if (!points_[k].allFinite() || !points_[k + 1].allFinite()) {
        throw ConfigError("lane waypoints must be finite");
      }
      const double len = (points_[k + 1] - points_[k]).norm();
      if (!(len > 0.0)) {
        throw ConfigError("consecutive lane waypoints must be distinct");
      }
      arclength_.push_back(arclength_.back() + len);
    }
  }

  const std::vector<Vec2>& waypoints() const { return points_; }
  std::size_t num_segments() const { return points_.size() - 1; }
  /// Cumulative arclength at each waypoint.
  const std::vector<double>& arclength() const { return arclength_; }
  double length() const { return arclength_.back(); }

  Vec2 tangent(std::size_t segment) const {
    return (points_[segment + 1] - points_[segment]).normalized();
  }

  bool operator==(const LaneCenterline& o) const { return points_ == o.points_; }

 private:
  std::vector<Vec2> points_;
  std::vector<double> arclength_;
};

/// Exact Euclidean distance from p to the polyline. Ties between segments go
/// to the lowest segment index.
inline LaneProjection distance_to_lane(const LaneCenterline& lane,
                                       const Vec2& p) {
  if (!p.allFinite()) throw NonFiniteError("distance_to_lane: non-finite point");
  const auto& pts = lane.waypoints();
  LaneProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const Vec2 seg = pts[k + 1] - pts[k];
    const double len2 = seg.squaredNorm();
    const double s = (p - pts[k]).dot(seg) / len2;
    Vec2 foot;
    bool interior = false;
    if (s <= 0.0) {
      foot = pts[k];
    } else if (s >= 1.0) {
      foot = pts[k + 1];
    } else {
      foot = pts[k] + s * seg;
      interior = true;
    }
    const double d = (p - foot).norm();
    if (d < best.distance) {
      best = {d, foot, k, interior};
    }
  }
  return best;
}

/// Distance to the lane, positive on the right-hand side of travel.
inline double signed_lane_offset(const LaneCenterline& lane, const Vec2& p) {
  const LaneProjection proj = distance_to_lane(lane, p);
  const Vec2 t = lane.tangent(proj.segment);
  const Vec2 right(t.y(), -t.x());
  return (p - proj.foot).dot(right) >= 0.0 ? proj.distance : -proj.distance;
}

struct LaneCostDerivatives {
  double value = 0.0;  // d^2
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();
};

/// Value, gradient and Gauss-Newton Hessian of the squared lane distance.
/// The active segment is held fixed. On a segment interior the Hessian is
/// 2 (I - t t^T), the exact curvature of the squared distance to that line;
/// when the foot is a waypoint the distance is to a point and the Hessian is
/// 2 I.
inline LaneCostDerivatives lane_cost_gradient(const LaneCenterline& lane,
                                              const Vec2& p) {
  const LaneProjection proj = distance_to_lane(lane, p);
  LaneCostDerivatives out;
  out.value = proj.distance * proj.distance;
  out.gradient = 2.0 * (p - proj.foot);
  if (proj.interior) {
    const Vec2 t = lane.tangent(proj.segment);
    out.hessian = 2.0 * (Mat2::Identity() - t * t.transpose());
  } else {
    out.hessian = 2.0 * Mat2::Identity();
  }
  return out;
}

}  // namespace dgame

#endif  // DGAME_GEOMETRY_HPP_
