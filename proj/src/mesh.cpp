#include "gtex/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace gtex {

namespace {

double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

void build_adjacency(ProxyMesh& mesh) {
  mesh.vertex_tri_adjacency.assign(mesh.positions.size(), {});
  for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
    for (auto v : mesh.triangles[t]) mesh.vertex_tri_adjacency[v].push_back(t);
  }
}

struct ObjCorner {
  long v = 0;
  long vt = 0;
  long vn = 0;
};

long resolve_index(long idx, std::size_t count, std::size_t line, const char* what) {
  long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (idx == 0 || resolved < 0 || resolved >= static_cast<long>(count)) {
    throw ParseError(std::string(what) + " index " + std::to_string(idx) + " out of range", line);
  }
  return resolved;
}

ObjCorner parse_corner(const std::string& token, std::size_t line) {
  ObjCorner c;
  std::array<std::string, 3> parts;
  std::size_t part = 0;
  for (char ch : token) {
    if (ch == '/') {
      if (++part > 2) throw ParseError("malformed face corner '" + token + "'", line);
    } else {
      parts[part] += ch;
    }
  }
  auto to_long = [&](const std::string& s) -> long {
    if (s.empty()) return 0;
    try {
      std::size_t used = 0;
      long v = std::stol(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError("malformed face corner '" + token + "'", line);
    }
  };
  c.v = to_long(parts[0]);
  c.vt = to_long(parts[1]);
  c.vn = to_long(parts[2]);
  if (c.v == 0) throw ParseError("face corner without vertex index", line);
  return c;
}

void check_manifold(const ProxyMesh& mesh, const std::vector<std::size_t>& face_lines) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw ParseError("face repeats a vertex", face_lines.empty() ? 0 : face_lines[t]);
    }
    for (int e = 0; e < 3; ++e) {
      auto a = tri[e];
      auto b = tri[(e + 1) % 3];
      if (++edge_use[{std::min(a, b), std::max(a, b)}] > 2) {
        throw ParseError("non-manifold edge " + std::to_string(a + 1) + "-" + std::to_string(b + 1),
                         face_lines.empty() ? 0 : face_lines[t]);
      }
    }
  }
}

template <typename T>
void hash_bytes(std::uint64_t& h, const T& value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
}

}  // namespace

ProxyMesh make_proxy_mesh(std::vector<Vec3> positions, std::vector<Triangle> triangles,
                          std::vector<TriangleUv> uvs, std::vector<Vec3> normals) {
  ProxyMesh mesh;
  mesh.positions = std::move(positions);
  mesh.triangles = std::move(triangles);
  mesh.uvs = std::move(uvs);
  if (mesh.triangles.empty()) throw Error("empty mesh");
  if (mesh.uvs.size() != mesh.triangles.size()) throw Error("mesh has no UV atlas");
  for (const auto& tri : mesh.triangles) {
    for (auto v : tri) {
      if (v >= mesh.positions.size()) throw Error("triangle index out of range");
    }
  }
  build_adjacency(mesh);
  for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
    if (mesh.vertex_tri_adjacency[v].empty()) {
      throw Error("vertex " + std::to_string(v) + " is not referenced by any triangle");
    }
  }
  if (normals.size() == mesh.positions.size()) {
    mesh.normals = std::move(normals);
    for (auto& n : mesh.normals) {
      double len = n.norm();
      if (!(len > 0.0)) throw Error("zero-length vertex normal");
      n /= len;
    }
  } else {
    mesh = compute_vertex_normals(std::move(mesh));
  }
  mesh = compute_w_scalers(std::move(mesh));
  return mesh;
}

ProxyMesh parse_obj(std::istream& in) {
  std::vector<Vec3> positions;
  std::vector<Vec2> texcoords;
  std::vector<Vec3> file_normals;
  std::vector<Triangle> triangles;
  std::vector<TriangleUv> uvs;
  std::vector<std::array<long, 3>> corner_normals;
  std::vector<std::size_t> face_lines;
  bool missing_uv = false;
  bool missing_normal = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string tag;
    if (!(ls >> tag)) continue;
    auto read_doubles = [&](int n) {
      std::array<double, 3> v{};
      for (int i = 0; i < n; ++i) {
        if (!(ls >> v[i])) throw ParseError("expected " + std::to_string(n) + " numbers", line_no);
      }
      return v;
    };
    if (tag == "v") {
      auto v = read_doubles(3);
      positions.emplace_back(v[0], v[1], v[2]);
    } else if (tag == "vt") {
      auto v = read_doubles(2);
      texcoords.emplace_back(v[0], v[1]);
    } else if (tag == "vn") {
      auto v = read_doubles(3);
      file_normals.emplace_back(v[0], v[1], v[2]);
    } else if (tag == "f") {
      std::vector<ObjCorner> corners;
      std::string tok;
      while (ls >> tok) corners.push_back(parse_corner(tok, line_no));
      if (corners.size() < 3) throw ParseError("face with fewer than 3 corners", line_no);
      if (corners.size() > 4) {
        throw ParseError("faces with more than 4 corners are not supported", line_no);
      }
      std::vector<std::uint32_t> vi;
      std::vector<Vec2> ti;
      std::vector<long> ni;
      for (const auto& c : corners) {
        vi.push_back(static_cast<std::uint32_t>(
            resolve_index(c.v, positions.size(), line_no, "vertex")));
        if (c.vt == 0) {
          missing_uv = true;
          ti.emplace_back(0.0, 0.0);
        } else {
          ti.push_back(texcoords[resolve_index(c.vt, texcoords.size(), line_no, "texcoord")]);
        }
        if (c.vn == 0) {
          missing_normal = true;
          ni.push_back(-1);
        } else {
          ni.push_back(resolve_index(c.vn, file_normals.size(), line_no, "normal"));
        }
      }
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        triangles.push_back({vi[0], vi[k], vi[k + 1]});
        uvs.push_back({ti[0], ti[k], ti[k + 1]});
        corner_normals.push_back({ni[0], ni[k], ni[k + 1]});
        face_lines.push_back(line_no);
      }
    }
  }
  if (triangles.empty()) throw ParseError("empty mesh", line_no);
  if (missing_uv) throw ParseError("mesh has no UV atlas", 0);

  // Drop vertices no face references.
  std::vector<std::int64_t> remap(positions.size(), -1);
  for (const auto& tri : triangles) {
    for (auto v : tri) remap[v] = 0;
  }
  std::vector<Vec3> used;
  for (std::size_t v = 0; v < positions.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = static_cast<std::int64_t>(used.size());
    used.push_back(positions[v]);
  }
  for (auto& tri : triangles) {
    for (auto& v : tri) v = static_cast<std::uint32_t>(remap[v]);
  }

  ProxyMesh probe;
  probe.positions = used;
  probe.triangles = triangles;
  check_manifold(probe, face_lines);

  std::vector<Vec3> normals;
  if (!missing_normal) {
    normals.assign(used.size(), Vec3::Zero());
    std::vector<bool> seen(used.size(), false);
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      for (int c = 0; c < 3; ++c) {
        auto v = triangles[t][c];
        if (!seen[v]) {
          normals[v] = file_normals[corner_normals[t][c]];
          seen[v] = true;
        }
      }
    }
  }
  try {
    return make_proxy_mesh(std::move(used), std::move(triangles), std::move(uvs),
                           std::move(normals));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), 0);
  }
}

ProxyMesh load_proxy_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh " + path.string());
  try {
    return parse_obj(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_obj(const ProxyMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& p : mesh.positions) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& tri : mesh.uvs) {
    for (const auto& uv : tri) out << "vt " << uv.x() << ' ' << uv.y() << '\n';
  }
  for (const auto& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    out << 'f';
    for (int c = 0; c < 3; ++c) {
      auto v = mesh.triangles[t][c] + 1;
      out << ' ' << v << '/' << (3 * t + c + 1) << '/' << v;
    }
    out << '\n';
  }
}

ProxyMesh compute_vertex_normals(ProxyMesh mesh) {
  if (mesh.vertex_tri_adjacency.size() != mesh.positions.size()) build_adjacency(mesh);
  mesh.normals.assign(mesh.positions.size(), Vec3::Zero());
  for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
    Vec3 sum = Vec3::Zero();
    Vec3 largest = Vec3::Zero();
    for (auto t : mesh.vertex_tri_adjacency[v]) {
      const auto& tri = mesh.triangles[t];
      Vec3 n = (mesh.positions[tri[1]] - mesh.positions[tri[0]])
                   .cross(mesh.positions[tri[2]] - mesh.positions[tri[0]]);
      sum += n;  // |n| = 2 * area
      if (n.norm() > largest.norm()) largest = n;
    }
    double len = sum.norm();
    if (len > 1e-300 && std::isfinite(len)) {
      mesh.normals[v] = sum / len;
    } else if (largest.norm() > 0.0) {
      mesh.normals[v] = largest.normalized();
    } else {
      throw Error("degenerate vertex star at vertex " + std::to_string(v));
    }
  }
  return mesh;
}

ProxyMesh compute_w_scalers(ProxyMesh mesh) {
  if (mesh.vertex_tri_adjacency.size() != mesh.positions.size()) build_adjacency(mesh);
  mesh.omega_tri.assign(mesh.triangles.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& uv = mesh.uvs[t];
    double sum = 0.0;
    for (int e = 0; e < 3; ++e) {
      int a = e;
      int b = (e + 1) % 3;
      double uv_len = (uv[a] - uv[b]).norm();
      if (uv_len < 1e-12) throw Error("degenerate UV edge in triangle " + std::to_string(t));
      sum += (mesh.positions[tri[a]] - mesh.positions[tri[b]]).norm() / uv_len;
    }
    mesh.omega_tri[t] = sum / 3.0;
  }
  mesh.omega_vert.assign(mesh.positions.size(), 0.0);
  for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
    const auto& star = mesh.vertex_tri_adjacency[v];
    double sum = 0.0;
    for (auto t : star) sum += mesh.omega_tri[t];
    mesh.omega_vert[v] = star.empty() ? 0.0 : sum / static_cast<double>(star.size());
  }
  return mesh;
}

void validate(const ProxyMesh& mesh) {
  const auto nv = mesh.positions.size();
  if (mesh.triangles.empty()) throw Error("empty mesh");
  if (mesh.normals.size() != nv || mesh.omega_vert.size() != nv ||
      mesh.vertex_tri_adjacency.size() != nv) {
    throw Error("per-vertex arrays do not match the vertex count");
  }
  if (mesh.uvs.size() != mesh.triangles.size() || mesh.omega_tri.size() != mesh.triangles.size()) {
    throw Error("per-triangle arrays do not match the triangle count");
  }
  for (const auto& n : mesh.normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw Error("vertex normal is not unit length");
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (auto v : mesh.triangles[t]) {
      if (v >= nv) throw Error("triangle index out of range");
    }
    const auto& uv = mesh.uvs[t];
    if (std::abs(signed_area2(uv[0], uv[1], uv[2])) * 0.5 <= 1e-12) {
      throw Error("degenerate UV triangle " + std::to_string(t));
    }
    if (!(mesh.omega_tri[t] > 0.0)) throw Error("non-positive triangle w-scaler");
  }
  for (auto w : mesh.omega_vert) {
    if (!(w > 0.0)) throw Error("non-positive vertex w-scaler");
  }
}

double mean_uv_edge_length(const ProxyMesh& mesh, std::size_t tri) {
  const auto& uv = mesh.uvs[tri];
  return ((uv[0] - uv[1]).norm() + (uv[1] - uv[2]).norm() + (uv[2] - uv[0]).norm()) / 3.0;
}

UvLocator::UvLocator(const ProxyMesh& mesh) : mesh_(&mesh) {
  resolution_ = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(mesh.triangle_count())))));
  cells_.assign(static_cast<std::size_t>(resolution_) * resolution_, {});
  auto cell_of = [&](double x) {
    return std::clamp(static_cast<int>(std::floor(x * resolution_)), 0, resolution_ - 1);
  };
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& uv = mesh.uvs[t];
    double pad = 1e-9;
    double x0 = std::min({uv[0].x(), uv[1].x(), uv[2].x()}) - pad;
    double x1 = std::max({uv[0].x(), uv[1].x(), uv[2].x()}) + pad;
    double y0 = std::min({uv[0].y(), uv[1].y(), uv[2].y()}) - pad;
    double y1 = std::max({uv[0].y(), uv[1].y(), uv[2].y()}) + pad;
    for (int cy = cell_of(y0); cy <= cell_of(y1); ++cy) {
      for (int cx = cell_of(x0); cx <= cell_of(x1); ++cx) {
        cells_[static_cast<std::size_t>(cy) * resolution_ + cx].push_back(t);
      }
    }
  }
}

std::optional<UvHit> UvLocator::locate(const Vec2& uv) const {
  if (!uv.allFinite()) return std::nullopt;
  int cx = std::clamp(static_cast<int>(std::floor(uv.x() * resolution_)), 0, resolution_ - 1);
  int cy = std::clamp(static_cast<int>(std::floor(uv.y() * resolution_)), 0, resolution_ - 1);
  for (auto t : cells_[static_cast<std::size_t>(cy) * resolution_ + cx]) {
    const auto& c = mesh_->uvs[t];
    double area = signed_area2(c[0], c[1], c[2]);
    Vec3 phi(signed_area2(uv, c[1], c[2]) / area, signed_area2(c[0], uv, c[2]) / area,
             signed_area2(c[0], c[1], uv) / area);
    if (phi.minCoeff() >= -1e-9) return UvHit{t, phi};
  }
  return std::nullopt;
}

std::optional<UvHit> locate_uv(const ProxyMesh& mesh, const Vec2& uv) {
  return UvLocator(mesh).locate(uv);
}

std::uint64_t mesh_fingerprint(const ProxyMesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  hash_bytes(h, static_cast<std::uint64_t>(mesh.positions.size()));
  hash_bytes(h, static_cast<std::uint64_t>(mesh.triangles.size()));
  for (const auto& p : mesh.positions) {
    for (int i = 0; i < 3; ++i) hash_bytes(h, p[i]);
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int c = 0; c < 3; ++c) {
      hash_bytes(h, mesh.triangles[t][c]);
      hash_bytes(h, mesh.uvs[t][c].x());
      hash_bytes(h, mesh.uvs[t][c].y());
    }
  }
  return h;
}

std::string mesh_report(const ProxyMesh& mesh) {
  std::ostringstream out;
  auto stats = [](const std::vector<double>& v) {
    double lo = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
    double hi = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return std::array<double, 3>{lo, v.empty() ? 0.0 : sum / double(v.size()), hi};
  };
  double uv_area = 0.0;
  for (const auto& uv : mesh.uvs) uv_area += std::abs(signed_area2(uv[0], uv[1], uv[2])) * 0.5;
  auto wt = stats(mesh.omega_tri);
  auto wv = stats(mesh.omega_vert);
  out << "vertices: " << mesh.vertex_count() << '\n'
      << "triangles: " << mesh.triangle_count() << '\n'
      << "uv_area: " << uv_area << '\n'
      << "omega_tri: min " << wt[0] << " mean " << wt[1] << " max " << wt[2] << '\n'
      << "omega_vert: min " << wv[0] << " mean " << wv[1] << " max " << wv[2] << '\n'
      << "fingerprint: " << std::hex << std::setw(16) << std::setfill('0') << mesh_fingerprint(mesh)
      << '\n';
  return out.str();
}

}  // namespace gtex
