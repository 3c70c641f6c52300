#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

namespace atroreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// One vector per mesh vertex, aligned with TriMesh vertex order.
using Points = std::vector<Vec3>;
using ScalarField = std::vector<double>;

// View a point list as a flat 3n vector (Vec3 is three packed doubles).
inline Eigen::Map<Eigen::VectorXd> flat(Points& p) {
  return {p.empty() ? nullptr : p.front().data(), static_cast<Eigen::Index>(3 * p.size())};
}
inline Eigen::Map<const Eigen::VectorXd> flat(const Points& p) {
  return {p.empty() ? nullptr : p.front().data(), static_cast<Eigen::Index>(3 * p.size())};
}

}  // namespace atroreg
