#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "atroreg/attachment.hpp"
#include "support.hpp"

using namespace atroreg;

namespace {

AttachmentSpec current_spec(double sigma, KernelFamily family = KernelFamily::gaussian) {
  AttachmentSpec s;
  s.kind = AttachmentKind::current;
  s.kernel = KernelSpec(family, sigma);
  return s;
}

TriMesh transformed(const TriMesh& m, const Mat3& r, const Vec3& b) {
  Points q = m.vertices();
  for (Vec3& v : q) v = r * v + b;
  return m.with_vertices(q);
}

// Independent double loop over face pairs.
double brute_cross(const AttachmentSpec& spec, const TriMesh& a, const TriMesh& b) {
  double s = 0.0;
  for (const Face& f : a.faces())
    for (const Face& g : b.faces())
      s += kernel_eval(spec.kernel, face_centroid(a.vertices(), f), face_centroid(b.vertices(), g)) *
           face_normal(a.vertices(), f).dot(face_normal(b.vertices(), g));
  return s;
}

}  // namespace

TEST_CASE("current norm examples") {
  std::mt19937_64 rng(20);
  const TriMesh s = testing::jittered_sphere(1, rng);
  const AttachmentSpec spec = current_spec(0.5);

  CHECK(std::abs(current_norm(spec, s, s)) < 1e-12);

  const TriMesh tri({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {{0, 1, 2}});
  const TriMesh far = transformed(tri, Mat3::Identity(), Vec3(20 * 0.5, 0, 0));
  CHECK(current_norm(spec, tri, far) == doctest::Approx(2 * 0.5 * 0.5).epsilon(1e-12));

  // Reversing the moving orientation: D(-S, S) = 4 <S, S>.
  std::vector<Face> flipped = s.faces();
  for (Face& f : flipped) std::swap(f[1], f[2]);
  const TriMesh neg(s.vertices(), flipped);
  CHECK(current_norm(spec, neg, s) == doctest::Approx(4 * brute_cross(spec, s, s)).epsilon(1e-12));

  CHECK_THROWS(current_norm(spec, TriMesh(), s));
}

TEST_CASE("current norm matches brute force, is symmetric and non-negative") {
  std::mt19937_64 rng(21);
  for (KernelFamily fam : {KernelFamily::gaussian, KernelFamily::cauchy})
    for (int trial = 0; trial < 5; ++trial) {
      const AttachmentSpec spec = current_spec(0.3 + 0.2 * trial, fam);
      const TriMesh a = testing::jittered_sphere(1, rng, 0.1);
      const TriMesh b = testing::jittered_sphere(2, rng, 0.1);
      const double d = current_norm(spec, a, b);
      const double brute = brute_cross(spec, a, a) - 2 * brute_cross(spec, a, b) + brute_cross(spec, b, b);
      CHECK(d == doctest::Approx(brute).epsilon(1e-11));
      CHECK(std::abs(current_norm(spec, b, a) - d) <= 1e-12 * std::abs(d));
      const double areas = total_area(a) + total_area(b);
      CHECK(d >= -1e-10 * areas * areas);
    }
}

TEST_CASE("current norm ignores target face order and vertex labels") {
  std::mt19937_64 rng(22);
  const AttachmentSpec spec = current_spec(0.4);
  const TriMesh a = testing::jittered_sphere(1, rng);
  const TriMesh b = testing::jittered_sphere(1, rng);
  // Relabel target vertices by reversing and reverse the face list.
  const std::size_t n = b.num_vertices();
  Points q(n);
  for (std::size_t k = 0; k < n; ++k) q[n - 1 - k] = b.vertex(k);
  std::vector<Face> faces;
  for (auto it = b.faces().rbegin(); it != b.faces().rend(); ++it)
    faces.push_back({int(n - 1) - (*it)[0], int(n - 1) - (*it)[1], int(n - 1) - (*it)[2]});
  const double d0 = current_norm(spec, a, b);
  CHECK(current_norm(spec, a, TriMesh(q, faces)) == doctest::Approx(d0).epsilon(1e-12));
}

TEST_CASE("current norm gradient") {
  std::mt19937_64 rng(23);
  const TriMesh target = make_icosphere(1);
  for (KernelFamily fam : {KernelFamily::gaussian, KernelFamily::cauchy}) {
    const AttachmentSpec spec = current_spec(0.5, fam);

    const Points g0 = current_norm_gradient(spec, target, target);
    CHECK(testing::max_abs(g0) < 1e-10 * total_area(target));

    for (int level : {1, 2}) {
      const TriMesh moving = testing::jittered_sphere(level, rng, 0.1);
      const TriMesh tgt = make_icosphere(level, 0.9);
      auto f = [&](const Points& q) { return current_norm(spec, moving.with_vertices(q), tgt); };
      const Points fd = testing::fd_gradient(f, moving.vertices());
      const Points g = current_norm_gradient(spec, moving, tgt);
      CHECK(testing::max_abs_diff(g, fd) < 1e-5 * testing::max_abs(fd));
    }
  }
}

TEST_CASE("current norm gradient is rigid-motion equivariant") {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> normal;
  const AttachmentSpec spec = current_spec(0.5);
  for (int trial = 0; trial < 3; ++trial) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = normal(rng);
    Mat3 r = Eigen::HouseholderQR<Mat3>(m).householderQ();
    if (r.determinant() < 0) r.col(0) *= -1;
    const Vec3 b(normal(rng), normal(rng), normal(rng));
    const TriMesh s = testing::jittered_sphere(1, rng);
    const TriMesh t = make_icosphere(1, 0.8);
    const Points g = current_norm_gradient(spec, s, t);
    const Points gr = current_norm_gradient(spec, transformed(s, r, b), transformed(t, r, b));
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, (gr[k] - r * g[k]).norm());
    CHECK(err < 1e-10 * std::max(1.0, testing::max_abs(g)));
    CHECK(current_norm(spec, transformed(s, r, b), transformed(t, r, b)) ==
          doctest::Approx(current_norm(spec, s, t)).epsilon(1e-11));
  }
}

TEST_CASE("landmark attachment") {
  std::mt19937_64 rng(25);
  const TriMesh tmpl = make_icosphere(1);
  const TriMesh target = testing::jittered_sphere(1, rng);
  AttachmentSpec spec;
  spec.kind = AttachmentKind::landmark;
  const Points q = testing::jittered_sphere(1, rng).vertices();
  double brute = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) brute += (q[k] - target.vertex(k)).squaredNorm();
  CHECK(attachment_value(spec, q, tmpl, target) == doctest::Approx(brute).epsilon(1e-14));
  auto f = [&](const Points& p) { return attachment_value(spec, p, tmpl, target); };
  CHECK(testing::max_abs_diff(attachment_gradient(spec, q, tmpl, target), testing::fd_gradient(f, q)) < 1e-7);

  const TriMesh smaller = make_icosphere(0);
  CHECK_THROWS(attachment_value(spec, q, tmpl, smaller));
  CHECK(parse_attachment_kind("landmark") == AttachmentKind::landmark);
  CHECK_THROWS(parse_attachment_kind("varifold"));
}
