#pragma once

#include <string>

#include "atroreg/kernels.hpp"
#include "atroreg/mesh.hpp"

namespace atroreg {

enum class AttachmentKind {
  current,   // kernel norm between oriented surfaces seen as currents
  landmark,  // sum of squared distances to corresponding target vertices
};

std::string to_string(AttachmentKind k);
AttachmentKind parse_attachment_kind(const std::string& name);

struct AttachmentSpec {
  AttachmentKind kind = AttachmentKind::current;
  KernelSpec kernel;  // current-space kernel, unused for landmarks
  double weight = 1.0;
};

/// Squared current distance between `moving` and `target`, with one Dirac
/// per face at its centroid carrying the area-weighted normal:
///   <S,S> - 2 <S,T> + <T,T>,   <S,T> = sum_{f,g} k(c_f, c_g) N_f . N_g
/// Not multiplied by the weight.
double current_norm(const AttachmentSpec& spec, const TriMesh& moving, const TriMesh& target);

/// Gradient of current_norm with respect to the moving vertices.
Points current_norm_gradient(const AttachmentSpec& spec, const TriMesh& moving, const TriMesh& target);

/// Dispatch on spec.kind. Unweighted.
double attachment_value(const AttachmentSpec& spec, const Points& moving_vertices,
                        const TriMesh& template_mesh, const TriMesh& target);
Points attachment_gradient(const AttachmentSpec& spec, const Points& moving_vertices,
                           const TriMesh& template_mesh, const TriMesh& target);

}  // namespace atroreg
