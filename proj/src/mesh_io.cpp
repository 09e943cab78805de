#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stokes_bie/mesh.hpp"

namespace stokes_bie {

namespace {

// Strips '#' comments and surrounding whitespace.
std::string clean_line(const std::string& raw) {
  std::string s = raw.substr(0, raw.find('#'));
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

struct RawMesh {
  std::vector<Vec3> vertices;
  std::vector<SurfaceMesh::Face> faces;
};

RawMesh parse_off(std::istream& in) {
  RawMesh raw;
  std::string line;
  int line_no = 0;
  auto next = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++line_no;
      out = clean_line(line);
      if (!out.empty()) return true;
    }
    return false;
  };

  std::string s;
  if (!next(s)) throw ParseError("OFF: empty file", line_no);
  std::string counts;
  if (s.rfind("OFF", 0) == 0) {
    counts = clean_line(s.substr(3));
    if (counts.empty() && !next(counts)) throw ParseError("OFF: missing element counts", line_no);
  } else {
    throw ParseError("OFF: missing 'OFF' header", line_no);
  }
  long nv = -1, nf = -1, ne = 0;
  {
    std::istringstream is(counts);
    if (!(is >> nv >> nf) || nv < 0 || nf < 0) throw ParseError("OFF: malformed counts line", line_no);
    is >> ne;
  }
  raw.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next(s)) throw ParseError("OFF: unexpected end of file in vertex block", line_no);
    std::istringstream is(s);
    Vec3 v;
    if (!(is >> v.x() >> v.y() >> v.z())) throw ParseError("OFF: malformed vertex", line_no);
    raw.vertices.push_back(v);
  }
  raw.faces.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    if (!next(s)) throw ParseError("OFF: unexpected end of file in face block", line_no);
    std::istringstream is(s);
    int count = 0;
    if (!(is >> count)) throw ParseError("OFF: malformed face", line_no);
    if (count != 3) {
      throw ParseError("OFF: only triangular faces are supported, found " + std::to_string(count) + " indices",
                       line_no);
    }
    SurfaceMesh::Face f;
    for (int k = 0; k < 3; ++k) {
      if (!(is >> f[k])) throw ParseError("OFF: malformed face", line_no);
      if (f[k] < 0 || f[k] >= nv) throw ParseError("OFF: vertex index out of range", line_no);
    }
    raw.faces.push_back(f);
  }
  return raw;
}

RawMesh parse_obj(std::istream& in) {
  RawMesh raw;
  std::string line;
  int line_no = 0;
  std::vector<int> face_lines;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = clean_line(line);
    if (s.empty()) continue;
    std::istringstream is(s);
    std::string tag;
    is >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(is >> v.x() >> v.y() >> v.z())) throw ParseError("OBJ: malformed vertex", line_no);
      raw.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string token;
      while (is >> token) {
        const std::string head = token.substr(0, token.find('/'));
        int value = 0;
        try {
          std::size_t used = 0;
          value = std::stoi(head, &used);
          if (used != head.size()) throw std::invalid_argument(head);
        } catch (const std::exception&) {
          throw ParseError("OBJ: malformed face index '" + token + "'", line_no);
        }
        const int nv = static_cast<int>(raw.vertices.size());
        const int resolved = value > 0 ? value - 1 : nv + value;
        if (value == 0 || resolved < 0 || resolved >= nv) {
          throw ParseError("OBJ: vertex index out of range", line_no);
        }
        idx.push_back(resolved);
      }
      if (idx.size() != 3) {
        throw ParseError("OBJ: only triangular faces are supported, found " + std::to_string(idx.size()) +
                             " indices",
                         line_no);
      }
      raw.faces.push_back({idx[0], idx[1], idx[2]});
    }
    // vn, vt, g, o, s, usemtl ... carry nothing we need.
  }
  return raw;
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".obj") return MeshFormat::obj;
  throw std::invalid_argument("unknown mesh extension '" + ext + "' (expected .off or .obj)");
}

SurfaceMesh parse_mesh(std::istream& in, MeshFormat format, const LoadOptions& options) {
  RawMesh raw = format == MeshFormat::off ? parse_off(in) : parse_obj(in);
  if (options.repair_orientation) raw.faces = orient_faces(raw.vertices, std::move(raw.faces));
  return SurfaceMesh(std::move(raw.vertices), std::move(raw.faces));
}

SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  return parse_mesh(in, format, options);
}

SurfaceMesh load_mesh(const std::filesystem::path& path, const LoadOptions& options) {
  return load_mesh(path, format_from_path(path), options);
}

void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  out << std::setprecision(17);
  if (format == MeshFormat::off) {
    out << "OFF\n" << mesh.num_nodes() << ' ' << mesh.num_elements() << " 0\n";
    for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  } else {
    for (const auto& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw MeshError("failed writing mesh file " + path.string());
}

}  // namespace stokes_bie
