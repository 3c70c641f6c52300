#pragma once

#include <Eigen/Core>
#include <string>

#include "atroreg/types.hpp"

namespace atroreg {

enum class KernelFamily { gaussian, cauchy };

std::string to_string(KernelFamily f);
KernelFamily parse_kernel_family(const std::string& name);

/// Scalar radial kernel K(x, y) = gamma(|x - y|^2), identity-valued on R^3.
///   gaussian: exp(-r^2 / sigma^2)
///   cauchy:   1 / (1 + r^2 / sigma^2)
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 1.0;

  KernelSpec() = default;
  KernelSpec(KernelFamily f, double s);

  /// gamma(r2) and its derivative d gamma / d r2.
  double profile(double r2) const;
  double profile_derivative(double r2) const;
};

double kernel_eval(const KernelSpec& spec, const Vec3& x, const Vec3& y);

/// Gradient of K with respect to its first argument.
Vec3 kernel_grad1(const KernelSpec& spec, const Vec3& x, const Vec3& y);

/// n x n scalar factor of the 3n x 3n block kernel matrix.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Points& points);

/// out_k = sum_l K(q_k, q_l) a_l.
Points apply_kernel(const KernelSpec& spec, const Points& points, const Points& momenta);

/// Gradient with respect to the points of sum_{k,l} K(q_k, q_l) a_k . b_l:
///   out_m = sum_l grad1 K(q_m, q_l) (a_m . b_l + a_l . b_m).
Points kernel_bilinear_grad(const KernelSpec& spec, const Points& points, const Points& a,
                            const Points& b);

/// Reduced velocity field v(x) = sum_l K(x, q_l) a_l and its spatial Jacobian.
Vec3 field_eval(const KernelSpec& spec, const Points& points, const Points& momenta, const Vec3& x);
Mat3 field_jacobian(const KernelSpec& spec, const Points& points, const Points& momenta,
                    const Vec3& x);

}  // namespace atroreg
