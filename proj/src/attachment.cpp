#include "atroreg/attachment.hpp"

#include <stdexcept>
#include <vector>

namespace atroreg {

std::string to_string(AttachmentKind k) {
  return k == AttachmentKind::current ? "current" : "landmark";
}

AttachmentKind parse_attachment_kind(const std::string& name) {
  if (name == "current") return AttachmentKind::current;
  if (name == "landmark") return AttachmentKind::landmark;
  throw std::invalid_argument("unknown attachment kind '" + name + "' (expected current or landmark)");
}

namespace {

struct FaceDiracs {
  Points centers;
  Points normals;
};

FaceDiracs diracs(const Points& q, const std::vector<Face>& faces) {
  FaceDiracs d;
  d.centers.reserve(faces.size());
  d.normals.reserve(faces.size());
  for (const Face& f : faces) {
    d.centers.push_back(face_centroid(q, f));
    d.normals.push_back(face_normal(q, f));
  }
  return d;
}

// Per-face partial sums of <a, b>, kept separate so the final reduction runs
// in a fixed order.
double inner(const KernelSpec& k, const FaceDiracs& a, const FaceDiracs& b) {
  const long na = static_cast<long>(a.centers.size());
  std::vector<double> rows(na, 0.0);
#pragma omp parallel for schedule(static) if (na > 128)
  for (long f = 0; f < na; ++f) {
    double acc = 0.0;
    for (std::size_t g = 0; g < b.centers.size(); ++g)
      acc += kernel_eval(k, a.centers[f], b.centers[g]) * a.normals[f].dot(b.normals[g]);
    rows[f] = acc;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

void require_nonempty(const TriMesh& m, const char* which) {
  if (m.num_faces() == 0) throw std::invalid_argument(std::string("current_norm: ") + which + " mesh has no faces");
}

}  // namespace

double current_norm(const AttachmentSpec& spec, const TriMesh& moving, const TriMesh& target) {
  require_nonempty(moving, "moving");
  require_nonempty(target, "target");
  const FaceDiracs s = diracs(moving.vertices(), moving.faces());
  const FaceDiracs t = diracs(target.vertices(), target.faces());
  return inner(spec.kernel, s, s) - 2.0 * inner(spec.kernel, s, t) + inner(spec.kernel, t, t);
}

Points current_norm_gradient(const AttachmentSpec& spec, const TriMesh& moving, const TriMesh& target) {
  require_nonempty(moving, "moving");
  require_nonempty(target, "target");
  const Points& q = moving.vertices();
  const FaceDiracs s = diracs(q, moving.faces());
  const FaceDiracs t = diracs(target.vertices(), target.faces());
  const long nf = static_cast<long>(s.centers.size());

  // dD/dN_f and dD/dc_f for every moving face.
  Points dnormal(nf), dcenter(nf);
#pragma omp parallel for schedule(static) if (nf > 128)
  for (long f = 0; f < nf; ++f) {
    Vec3 wn = Vec3::Zero();
    Vec3 wc = Vec3::Zero();
    for (long g = 0; g < nf; ++g) {
      wn += kernel_eval(spec.kernel, s.centers[f], s.centers[g]) * s.normals[g];
      if (g != f)
        wc += s.normals[f].dot(s.normals[g]) * kernel_grad1(spec.kernel, s.centers[f], s.centers[g]);
    }
    for (std::size_t g = 0; g < t.centers.size(); ++g) {
      wn -= kernel_eval(spec.kernel, s.centers[f], t.centers[g]) * t.normals[g];
      wc -= s.normals[f].dot(t.normals[g]) * kernel_grad1(spec.kernel, s.centers[f], t.centers[g]);
    }
    dnormal[f] = 2.0 * wn;
    dcenter[f] = 2.0 * wc;
  }

  Points grad(q.size(), Vec3::Zero());
  for (long f = 0; f < nf; ++f) {
    const Face& face = moving.faces()[f];
    for (int k : face) grad[k] += dcenter[f] / 3.0;
    face_normal_vjp(q, face, dnormal[f], grad);
  }
  return grad;
}

double attachment_value(const AttachmentSpec& spec, const Points& moving_vertices,
                        const TriMesh& template_mesh, const TriMesh& target) {
  if (spec.kind == AttachmentKind::current)
    return current_norm(spec, template_mesh.with_vertices(moving_vertices), target);
  if (target.num_vertices() != moving_vertices.size())
    throw std::invalid_argument("landmark attachment needs matching vertex counts");
  double d = 0.0;
  for (std::size_t k = 0; k < moving_vertices.size(); ++k)
    d += (moving_vertices[k] - target.vertex(k)).squaredNorm();
  return d;
}

Points attachment_gradient(const AttachmentSpec& spec, const Points& moving_vertices,
                           const TriMesh& template_mesh, const TriMesh& target) {
  if (spec.kind == AttachmentKind::current)
    return current_norm_gradient(spec, template_mesh.with_vertices(moving_vertices), target);
  if (target.num_vertices() != moving_vertices.size())
    throw std::invalid_argument("landmark attachment needs matching vertex counts");
  Points g(moving_vertices.size());
  for (std::size_t k = 0; k < moving_vertices.size(); ++k)
    g[k] = 2.0 * (moving_vertices[k] - target.vertex(k));
  return g;
}

}  // namespace atroreg
