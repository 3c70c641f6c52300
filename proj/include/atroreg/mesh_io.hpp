#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "atroreg/mesh.hpp"

namespace atroreg {

/// Parse or format failure; `line()` is 1-based, 0 when not tied to a line.
class MeshIOError : public std::runtime_error {
 public:
  MeshIOError(const std::string& path, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

enum class OrientationPolicy { require, warn, ignore };

struct LoadOptions {
  OrientationPolicy orientation = OrientationPolicy::warn;
};

/// Format is picked from the extension: .off, .obj, .vtk.
TriMesh load_mesh(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes .off or .vtk. A scalar field is only representable in VTK
/// (as POINT_DATA); passing one with an .off path is an error.
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               const ScalarField* scalars = nullptr, const std::string& scalar_name = "scalars");

TriMesh read_off(std::istream& in, const std::string& name = "<stream>");
TriMesh read_obj(std::istream& in, const std::string& name = "<stream>");
TriMesh read_vtk(std::istream& in, const std::string& name = "<stream>",
                 ScalarField* scalars = nullptr);
void write_off(std::ostream& out, const TriMesh& mesh);
void write_vtk(std::ostream& out, const TriMesh& mesh, const ScalarField* scalars = nullptr,
               const std::string& scalar_name = "scalars");

}  // namespace atroreg
