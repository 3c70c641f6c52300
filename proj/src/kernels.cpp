#include "atroreg/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace atroreg {

std::string to_string(KernelFamily f) {
  return f == KernelFamily::gaussian ? "gaussian" : "cauchy";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "cauchy") return KernelFamily::cauchy;
  throw std::invalid_argument("unknown kernel family '" + name + "' (expected gaussian or cauchy)");
}

KernelSpec::KernelSpec(KernelFamily f, double s) : family(f), sigma(s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("kernel width must be positive");
}

double KernelSpec::profile(double r2) const {
  const double u = r2 / (sigma * sigma);
  return family == KernelFamily::gaussian ? std::exp(-u) : 1.0 / (1.0 + u);
}

double KernelSpec::profile_derivative(double r2) const {
  const double s2 = sigma * sigma;
  const double u = r2 / s2;
  if (family == KernelFamily::gaussian) return -std::exp(-u) / s2;
  const double d = 1.0 + u;
  return -1.0 / (s2 * d * d);
}

double kernel_eval(const KernelSpec& spec, const Vec3& x, const Vec3& y) {
  return spec.profile((x - y).squaredNorm());
}

Vec3 kernel_grad1(const KernelSpec& spec, const Vec3& x, const Vec3& y) {
  const Vec3 d = x - y;
  return 2.0 * spec.profile_derivative(d.squaredNorm()) * d;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Points& points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = spec.profile(0.0);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      k(i, j) = k(j, i) = kernel_eval(spec, points[i], points[j]);
    }
  }
  return k;
}

Points apply_kernel(const KernelSpec& spec, const Points& points, const Points& momenta) {
  if (points.size() != momenta.size())
    throw std::invalid_argument("apply_kernel: " + std::to_string(points.size()) + " points but " +
                                std::to_string(momenta.size()) + " momenta");
  const long n = static_cast<long>(points.size());
  Points out(n);
#pragma omp parallel for schedule(static) if (n > 256)
  for (long k = 0; k < n; ++k) {
    Vec3 acc = Vec3::Zero();
    for (long l = 0; l < n; ++l) acc += kernel_eval(spec, points[k], points[l]) * momenta[l];
    out[k] = acc;
  }
  return out;
}

Points kernel_bilinear_grad(const KernelSpec& spec, const Points& points, const Points& a,
                            const Points& b) {
  const long n = static_cast<long>(points.size());
  Points out(n);
#pragma omp parallel for schedule(static) if (n > 256)
  for (long m = 0; m < n; ++m) {
    Vec3 acc = Vec3::Zero();
    for (long l = 0; l < n; ++l) {
      if (l == m) continue;  // grad1 K vanishes at coincidence
      const double w = a[m].dot(b[l]) + a[l].dot(b[m]);
      acc += w * kernel_grad1(spec, points[m], points[l]);
    }
    out[m] = acc;
  }
  return out;
}

Vec3 field_eval(const KernelSpec& spec, const Points& points, const Points& momenta, const Vec3& x) {
  Vec3 v = Vec3::Zero();
  for (std::size_t l = 0; l < points.size(); ++l) v += kernel_eval(spec, x, points[l]) * momenta[l];
  return v;
}

Mat3 field_jacobian(const KernelSpec& spec, const Points& points, const Points& momenta,
                    const Vec3& x) {
  Mat3 j = Mat3::Zero();
  for (std::size_t l = 0; l < points.size(); ++l)
    j += momenta[l] * kernel_grad1(spec, x, points[l]).transpose();
  return j;
}

}  // namespace atroreg
