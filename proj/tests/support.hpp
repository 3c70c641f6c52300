#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "atroreg/mesh.hpp"

namespace testing {

using atroreg::Points;
using atroreg::Vec3;

inline Points random_points(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Points p(n);
  for (Vec3& v : p) v = Vec3(normal(rng), normal(rng), normal(rng));
  return p;
}

// Icosphere with every vertex moved by a small random offset, so that no
// symmetry hides sign errors.
inline atroreg::TriMesh jittered_sphere(int level, std::mt19937_64& rng, double amount = 0.05) {
  const atroreg::TriMesh base = atroreg::make_icosphere(level, 1.0);
  Points q = base.vertices();
  const Points d = random_points(q.size(), rng, amount);
  for (std::size_t k = 0; k < q.size(); ++k) q[k] += d[k];
  return base.with_vertices(q);
}

// Central differences of a scalar function of a point list.
inline Points fd_gradient(const std::function<double(const Points&)>& f, const Points& q,
                          double h = 1e-6) {
  Points g(q.size(), Vec3::Zero());
  Points p = q;
  for (std::size_t k = 0; k < q.size(); ++k)
    for (int d = 0; d < 3; ++d) {
      p[k][d] = q[k][d] + h;
      const double fp = f(p);
      p[k][d] = q[k][d] - h;
      const double fm = f(p);
      p[k][d] = q[k][d];
      g[k][d] = (fp - fm) / (2 * h);
    }
  return g;
}

inline double max_abs_diff(const Points& a, const Points& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return m;
}

inline double max_abs(const Points& a) {
  double m = 0.0;
  for (const Vec3& v : a) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace testing
