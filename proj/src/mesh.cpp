#include "atroreg/mesh.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <utility>

namespace atroreg {

TriMesh::TriMesh(Points vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const auto n = static_cast<long>(vertices_.size());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face& face = faces_[f];
    for (int idx : face) {
      if (idx < 0 || idx >= n) {
        std::ostringstream msg;
        msg << "face " << f << " references vertex " << idx << " but mesh has " << n << " vertices";
        throw MeshError(msg.str());
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      std::ostringstream msg;
      msg << "face " << f << " repeats a vertex index (" << face[0] << ", " << face[1] << ", "
          << face[2] << ")";
      throw MeshError(msg.str());
    }
  }
}

TriMesh TriMesh::with_vertices(Points vertices) const {
  if (vertices.size() != vertices_.size())
    throw MeshError("with_vertices: vertex count mismatch");
  TriMesh out;
  out.vertices_ = std::move(vertices);
  out.faces_ = faces_;
  return out;
}

Vec3 face_normal(const Points& q, const Face& f) {
  const Vec3& qi = q[f[0]];
  return 0.5 * (q[f[1]] - qi).cross(q[f[2]] - qi);
}

Vec3 face_normal(const TriMesh& mesh, std::size_t face_index) {
  if (face_index >= mesh.num_faces())
    throw MeshError("face index " + std::to_string(face_index) + " out of range");
  return face_normal(mesh.vertices(), mesh.faces()[face_index]);
}

Vec3 face_centroid(const Points& q, const Face& f) {
  return (q[f[0]] + q[f[1]] + q[f[2]]) / 3.0;
}

Points vertex_normals(const Points& q, const std::vector<Face>& faces) {
  Points normals(q.size(), Vec3::Zero());
  for (const Face& f : faces) {
    const Vec3 nf = face_normal(q, f);
    for (int k : f) normals[k] += nf;
  }
  return normals;
}

void face_normal_vjp(const Points& q, const Face& f, const Vec3& weight, Points& grad) {
  const Vec3& qi = q[f[0]];
  const Vec3& qj = q[f[1]];
  const Vec3& qk = q[f[2]];
  grad[f[0]] += 0.5 * (qj - qk).cross(weight);
  grad[f[1]] += 0.5 * (qk - qi).cross(weight);
  grad[f[2]] += 0.5 * (qi - qj).cross(weight);
}

Points vertex_normals_vjp(const Points& q, const std::vector<Face>& faces, const Points& w) {
  Points grad(q.size(), Vec3::Zero());
  for (const Face& f : faces) {
    const Vec3 weight = w[f[0]] + w[f[1]] + w[f[2]];
    face_normal_vjp(q, f, weight, grad);
  }
  return grad;
}

double total_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const Face& f : mesh.faces()) area += face_normal(mesh.vertices(), f).norm();
  return area;
}

double signed_volume(const Points& q, const std::vector<Face>& faces) {
  double v = 0.0;
  for (const Face& f : faces) v += face_centroid(q, f).dot(face_normal(q, f));
  return v / 3.0;
}

VolumeResult mesh_volume(const TriMesh& mesh) {
  VolumeResult r;
  r.volume = signed_volume(mesh.vertices(), mesh.faces());
  r.closed = check_orientation(mesh).closed;
  return r;
}

OrientationReport check_orientation(const TriMesh& mesh) {
  OrientationReport report;
  // directed edge -> number of faces traversing it that way
  std::map<std::pair<int, int>, int> directed;
  for (const Face& f : mesh.faces()) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[e];
      const int b = f[(e + 1) % 3];
      if (++directed[{a, b}] > 1 && report.consistent) {
        report.consistent = false;
        report.offending_edge = std::array<int, 2>{a, b};
        std::ostringstream msg;
        if (directed.count({b, a}))
          msg << "edge (" << a << ", " << b << ") is shared by more than two faces";
        else
          msg << "edge (" << a << ", " << b
              << ") is traversed in the same direction by two faces (inconsistent orientation)";
        report.message = msg.str();
      }
    }
  }
  for (const auto& [edge, count] : directed) {
    if (!directed.count({edge.second, edge.first})) {
      report.closed = false;
      if (report.message.empty()) {
        std::ostringstream msg;
        msg << "boundary edge (" << edge.first << ", " << edge.second << ")";
        report.message = msg.str();
        report.offending_edge = std::array<int, 2>{edge.first, edge.second};
      }
      break;
    }
  }
  return report;
}

void require_closed_oriented(const TriMesh& mesh, const std::string& what) {
  if (mesh.num_faces() == 0) throw MeshError(what + ": mesh has no faces");
  const OrientationReport r = check_orientation(mesh);
  if (!r.consistent) throw MeshError(what + ": " + r.message);
  if (!r.closed) throw MeshError(what + ": surface is not closed, " + r.message);
}

namespace {

int midpoint(Points& verts, std::map<std::pair<int, int>, int>& cache, int a, int b) {
  const auto key = std::minmax(a, b);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  verts.push_back((verts[a] + verts[b]).normalized());
  const int id = static_cast<int>(verts.size()) - 1;
  cache.emplace(key, id);
  return id;
}

}  // namespace

TriMesh make_icosphere(int level, double radius, const Vec3& center) {
  if (level < 0) throw MeshError("icosphere level must be non-negative");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Points verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> cache;
    std::vector<Face> refined;
    refined.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const int a = midpoint(verts, cache, f[0], f[1]);
      const int b = midpoint(verts, cache, f[1], f[2]);
      const int c = midpoint(verts, cache, f[2], f[0]);
      refined.push_back({f[0], a, c});
      refined.push_back({f[1], b, a});
      refined.push_back({f[2], c, b});
      refined.push_back({a, b, c});
    }
    faces = std::move(refined);
  }
  for (auto& v : verts) v = center + radius * v;
  return TriMesh(std::move(verts), std::move(faces));
}

TriMesh make_ellipsoid(const Vec3& axes, int level, const Vec3& center) {
  if ((axes.array() <= 0.0).any()) throw MeshError("ellipsoid axes must be positive");
  TriMesh sphere = make_icosphere(level);
  Points verts = sphere.vertices();
  for (auto& v : verts) v = center + axes.cwiseProduct(v);
  return sphere.with_vertices(std::move(verts));
}

}  // namespace atroreg
