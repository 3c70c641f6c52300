#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atroreg/types.hpp"

namespace atroreg {

using Face = std::array<int, 3>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Oriented triangulated surface: vertex positions plus 0-based face index
/// triples. Index range and repeated-vertex checks run at construction;
/// orientation is checked separately by validate_orientation().
class TriMesh {
 public:
  TriMesh() = default;
  TriMesh(Points vertices, std::vector<Face> faces);

  const Points& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_faces() const { return faces_.size(); }
  const Vec3& vertex(std::size_t k) const { return vertices_[k]; }

  /// Same connectivity, new vertex positions (sizes must agree).
  TriMesh with_vertices(Points vertices) const;

 private:
  Points vertices_;
  std::vector<Face> faces_;
};

/// Area-weighted normal of face `face_index`: half the cross product of two
/// edges. Its norm is the face area.
Vec3 face_normal(const TriMesh& mesh, std::size_t face_index);
Vec3 face_normal(const Points& q, const Face& f);

/// Sum of adjacent area-weighted face normals at each vertex; isolated
/// vertices get zero.
Points vertex_normals(const Points& q, const std::vector<Face>& faces);
inline Points vertex_normals(const TriMesh& mesh) {
  return vertex_normals(mesh.vertices(), mesh.faces());
}

/// Reverse-mode derivative of q -> sum_k w_k . N_k(q). Returns one gradient
/// vector per vertex.
Points vertex_normals_vjp(const Points& q, const std::vector<Face>& faces, const Points& w);

/// Accumulate the gradient of q -> W . N(q, f) into `grad` for one face.
void face_normal_vjp(const Points& q, const Face& f, const Vec3& weight, Points& grad);

Vec3 face_centroid(const Points& q, const Face& f);
double total_area(const TriMesh& mesh);

struct VolumeResult {
  double volume = 0.0;
  bool closed = true;  // false: surface has boundary edges, volume is not meaningful
};

/// Signed enclosed volume through the divergence theorem; positive for outward
/// orientation.
VolumeResult mesh_volume(const TriMesh& mesh);
double signed_volume(const Points& q, const std::vector<Face>& faces);

struct OrientationReport {
  bool consistent = true;  // no directed edge used twice, no edge in >2 faces
  bool closed = true;      // every edge shared by exactly two faces
  std::string message;     // describes the first offending edge, if any
  std::optional<std::array<int, 2>> offending_edge;
};

OrientationReport check_orientation(const TriMesh& mesh);

/// Throws MeshError unless the mesh is closed and consistently oriented.
void require_closed_oriented(const TriMesh& mesh, const std::string& what);

// Synthetic shapes. Icosphere level L has 10 * 4^L + 2 vertices, outward
// orientation.
TriMesh make_icosphere(int level, double radius = 1.0, const Vec3& center = Vec3::Zero());
TriMesh make_ellipsoid(const Vec3& axes, int level, const Vec3& center = Vec3::Zero());

}  // namespace atroreg
