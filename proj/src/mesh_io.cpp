#include "atroreg/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <vector>

namespace atroreg {

MeshIOError::MeshIOError(const std::string& path, int line, const std::string& what)
    : std::runtime_error(line > 0 ? path + ":" + std::to_string(line) + ": " + what
                                  : path + ": " + what),
      line_(line) {}

namespace {

struct Token {
  std::string text;
  int line;
};

// Splits the stream into whitespace-separated tokens, dropping '#' comments
// when `strip_comments` is set.
class TokenStream {
 public:
  TokenStream(std::istream& in, std::string name, bool strip_comments, int first_line = 0)
      : name_(std::move(name)) {
    std::string line;
    int lineno = first_line;
    while (std::getline(in, line)) {
      ++lineno;
      if (strip_comments) {
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      }
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens_.push_back({tok, lineno});
      last_line_ = lineno;
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }
  int line() const { return done() ? last_line_ : tokens_[pos_].line; }

  const Token& next(const char* expecting) {
    if (done()) fail(std::string("unexpected end of file, expected ") + expecting);
    return tokens_[pos_++];
  }
  const Token& peek() const { return tokens_[pos_]; }

  double next_double(const char* expecting) {
    const Token& t = next(expecting);
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    if (*b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) fail_at(t.line, std::string("expected ") + expecting + ", got '" + t.text + "'");
    return v;
  }

  long next_long(const char* expecting) {
    const Token& t = next(expecting);
    long v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
      fail_at(t.line, std::string("expected ") + expecting + ", got '" + t.text + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw MeshIOError(name_, line(), what); }
  [[noreturn]] void fail_at(int line, const std::string& what) const {
    throw MeshIOError(name_, line, what);
  }

 private:
  std::string name_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int last_line_ = 0;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

TriMesh build(Points verts, std::vector<Face> faces, const std::string& name) {
  try {
    return TriMesh(std::move(verts), std::move(faces));
  } catch (const MeshError& e) {
    throw MeshIOError(name, 0, e.what());
  }
}

void write_points(std::ostream& out, const Points& pts) {
  for (const Vec3& v : pts) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
}

}  // namespace

TriMesh read_off(std::istream& in, const std::string& name) {
  TokenStream ts(in, name, true);
  const Token& header = ts.next("OFF header");
  if (header.text != "OFF") ts.fail_at(header.line, "missing OFF header, got '" + header.text + "'");
  const long nv = ts.next_long("vertex count");
  const long nf = ts.next_long("face count");
  ts.next_long("edge count");
  if (nv < 0 || nf < 0) ts.fail("negative element count");

  Points verts(nv);
  for (long i = 0; i < nv; ++i) {
    for (int c = 0; c < 3; ++c) verts[i][c] = ts.next_double("vertex coordinate");
  }
  std::vector<Face> faces(nf);
  for (long f = 0; f < nf; ++f) {
    const int line = ts.line();
    const long arity = ts.next_long("face vertex count");
    if (arity != 3) ts.fail_at(line, "only triangular faces are supported, got " + std::to_string(arity));
    for (int c = 0; c < 3; ++c) {
      const long idx = ts.next_long("face index");
      if (idx < 0 || idx >= nv) ts.fail_at(line, "face index " + std::to_string(idx) + " out of range");
      faces[f][c] = static_cast<int>(idx);
    }
    // optional per-face colour values on the same line
    while (!ts.done() && ts.peek().line == line) ts.next("");
  }
  return build(std::move(verts), std::move(faces), name);
}

TriMesh read_obj(std::istream& in, const std::string& name) {
  Points verts;
  std::vector<Face> faces;
  std::string line;
  int lineno = 0;
  auto resolve = [&](const std::string& tok) {
    // v, v/vt, v//vn, v/vt/vn; 1-based, negative values are relative
    const std::string head = tok.substr(0, tok.find('/'));
    long idx = 0;
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
    if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0)
      throw MeshIOError(name, lineno, "bad face index '" + tok + "'");
    const long n = static_cast<long>(verts.size());
    const long zero_based = idx > 0 ? idx - 1 : n + idx;
    if (zero_based < 0 || zero_based >= n)
      throw MeshIOError(name, lineno, "face index '" + tok + "' out of range");
    return static_cast<int>(zero_based);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw MeshIOError(name, lineno, "malformed vertex");
      verts.push_back(p);
    } else if (kind == "f") {
      std::vector<std::string> toks;
      std::string t;
      while (ls >> t) toks.push_back(t);
      if (toks.size() != 3)
        throw MeshIOError(name, lineno,
                          "only triangular faces are supported, got " + std::to_string(toks.size()));
      faces.push_back({resolve(toks[0]), resolve(toks[1]), resolve(toks[2])});
    }
    // vt, vn, g, o, s, usemtl, mtllib: geometry only, ignored
  }
  return build(std::move(verts), std::move(faces), name);
}

TriMesh read_vtk(std::istream& in, const std::string& name, ScalarField* scalars) {
  std::string line;
  int lineno = 0;
  auto getline_or_fail = [&](const char* what) {
    if (!std::getline(in, line)) throw MeshIOError(name, lineno, std::string("unexpected end of file, expected ") + what);
    ++lineno;
  };
  getline_or_fail("VTK version header");
  if (line.rfind("# vtk DataFile", 0) != 0) throw MeshIOError(name, lineno, "missing '# vtk DataFile' header");
  getline_or_fail("title");
  getline_or_fail("ASCII");
  if (lower(line).find("ascii") == std::string::npos)
    throw MeshIOError(name, lineno, "only ASCII legacy VTK is supported");

  // The remainder is token based; line numbers stay relative to the file.
  TokenStream ts(in, name, false, lineno);

  const Token& ds = ts.next("DATASET");
  if (ds.text != "DATASET") ts.fail_at(ds.line, "expected DATASET, got '" + ds.text + "'");
  const Token& kind = ts.next("POLYDATA");
  if (kind.text != "POLYDATA") ts.fail_at(kind.line, "only POLYDATA datasets are supported");

  Points verts;
  std::vector<Face> faces;
  bool have_points = false;

  while (!ts.done()) {
    const Token& kw = ts.next("section keyword");
    if (kw.text == "POINTS") {
      const long n = ts.next_long("point count");
      ts.next("point type");
      verts.resize(n);
      for (long i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) verts[i][c] = ts.next_double("point coordinate");
      have_points = true;
    } else if (kw.text == "POLYGONS" || kw.text == "TRIANGLE_STRIPS" || kw.text == "LINES" ||
               kw.text == "VERTICES") {
      const long count = ts.next_long("cell count");
      ts.next_long("cell list size");
      for (long c = 0; c < count; ++c) {
        const int at = ts.line();
        const long arity = ts.next_long("cell size");
        if (kw.text != "POLYGONS") {
          for (long k = 0; k < arity; ++k) ts.next("cell index");
          continue;
        }
        if (arity != 3)
          ts.fail_at(at, "only triangular polygons are supported, got " + std::to_string(arity));
        Face f{};
        for (int k = 0; k < 3; ++k) {
          const long idx = ts.next_long("polygon index");
          if (!have_points || idx < 0 || idx >= static_cast<long>(verts.size()))
            ts.fail_at(at, "polygon index " + std::to_string(idx) + " out of range");
          f[k] = static_cast<int>(idx);
        }
        faces.push_back(f);
      }
    } else if (kw.text == "POINT_DATA") {
      const long n = ts.next_long("point data count");
      if (n != static_cast<long>(verts.size())) ts.fail("POINT_DATA count does not match POINTS");
      // Read the first SCALARS array, skip everything after it.
      while (!ts.done()) {
        const Token& sec = ts.next("attribute keyword");
        if (sec.text == "SCALARS") {
          ts.next("scalar name");
          ts.next("scalar type");
          if (!ts.done() && ts.peek().text != "LOOKUP_TABLE") {
            const long ncomp = ts.next_long("component count");
            if (ncomp != 1) ts.fail("only single-component SCALARS are supported");
          }
          const Token& lut = ts.next("LOOKUP_TABLE");
          if (lut.text != "LOOKUP_TABLE") ts.fail_at(lut.line, "expected LOOKUP_TABLE");
          ts.next("lookup table name");
          ScalarField values(n);
          for (long i = 0; i < n; ++i) values[i] = ts.next_double("scalar value");
          if (scalars) *scalars = std::move(values);
          break;
        }
      }
      break;
    } else if (kw.text == "CELL_DATA" || kw.text == "METADATA" || kw.text == "FIELD") {
      break;
    } else {
      ts.fail_at(kw.line, "unknown section '" + kw.text + "'");
    }
  }
  if (!have_points) throw MeshIOError(name, 0, "no POINTS section");
  return build(std::move(verts), std::move(faces), name);
}

void write_off(std::ostream& out, const TriMesh& mesh) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
  write_points(out, mesh.vertices());
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void write_vtk(std::ostream& out, const TriMesh& mesh, const ScalarField* scalars,
               const std::string& scalar_name) {
  if (scalars && scalars->size() != mesh.num_vertices())
    throw MeshIOError("<vtk>", 0, "scalar field length does not match vertex count");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# vtk DataFile Version 3.0\natroreg surface\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  write_points(out, mesh.vertices());
  out << "POLYGONS " << mesh.num_faces() << ' ' << 4 * mesh.num_faces() << '\n';
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  if (scalars) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    out << "SCALARS " << scalar_name << " double 1\nLOOKUP_TABLE default\n";
    for (double s : *scalars) out << s << '\n';
  }
}

TriMesh load_mesh(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw MeshIOError(path.string(), 0, "cannot open file");
  const std::string ext = lower(path.extension().string());
  const std::string name = path.string();
  TriMesh mesh;
  if (ext == ".off")
    mesh = read_off(in, name);
  else if (ext == ".obj")
    mesh = read_obj(in, name);
  else if (ext == ".vtk")
    mesh = read_vtk(in, name);
  else
    throw MeshIOError(name, 0, "unsupported mesh extension '" + ext + "'");

  if (options.orientation != OrientationPolicy::ignore) {
    const OrientationReport r = check_orientation(mesh);
    if (!r.consistent || !r.closed) {
      const std::string what = !r.consistent ? r.message : "surface is not closed, " + r.message;
      if (options.orientation == OrientationPolicy::require) throw MeshIOError(name, 0, what);
      std::cerr << "warning: " << name << ": " << what << '\n';
    }
  }
  return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path, const ScalarField* scalars,
               const std::string& scalar_name) {
  const std::string ext = lower(path.extension().string());
  std::ofstream out(path);
  if (!out) throw MeshIOError(path.string(), 0, "cannot open file for writing");
  if (ext == ".off") {
    if (scalars) throw MeshIOError(path.string(), 0, "OFF cannot store a per-vertex scalar field; use .vtk");
    write_off(out, mesh);
  } else if (ext == ".vtk") {
    write_vtk(out, mesh, scalars, scalar_name);
  } else {
    throw MeshIOError(path.string(), 0, "unsupported output extension '" + ext + "'");
  }
  if (!out) throw MeshIOError(path.string(), 0, "write failed");
}

}  // namespace atroreg
