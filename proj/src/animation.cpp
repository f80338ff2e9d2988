#include "gtex/animation.hpp"

#include "gtex/projection.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace gtex {

namespace {

std::size_t cycle(int frame, std::size_t count) {
  if (count == 0) throw Error("deformer has no frames");
  if (frame < 0) throw Error("negative frame index");
  return static_cast<std::size_t>(frame) % count;
}

Vec3 read_vec3(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(what + " must be a 3-vector", 0);
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::vector<Vec3> sine_positions(const ProxyMesh& mesh, const SineDeformer& d, int frame) {
  std::vector<Vec3> out = mesh.positions;
  const double phase = d.phase_rate * frame;
  for (auto& p : out) {
    p += d.direction * (d.amplitude * std::sin(2.0 * std::numbers::pi * d.frequency * p.dot(d.axis) + phase));
  }
  return out;
}

std::vector<Vec3> lattice_positions(const ProxyMesh& mesh, const LatticeDeformer& d, int frame,
                                    std::size_t& clamped) {
  const auto [nx, ny, nz] = d.dims;
  if (nx < 2 || ny < 2 || nz < 2) throw Error("lattice dims must be at least 2 per axis");
  const auto& ctrl = d.frames[cycle(frame, d.frames.size())];
  if (ctrl.size() != static_cast<std::size_t>(nx) * ny * nz) {
    throw Error("lattice frame has the wrong number of control points");
  }
  const Vec3 extent = d.box_max - d.box_min;
  if (!(extent.minCoeff() > 0.0)) throw Error("lattice box is empty");
  std::vector<Vec3> out;
  out.reserve(mesh.vertex_count());
  const int n[3] = {nx, ny, nz};
  for (const auto& p : mesh.positions) {
    Vec3 s = (p - d.box_min).cwiseQuotient(extent);
    bool outside = false;
    int cell[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
      if (s[a] < 0.0 || s[a] > 1.0) outside = true;
      double g = std::clamp(s[a], 0.0, 1.0) * (n[a] - 1);
      cell[a] = std::min(static_cast<int>(std::floor(g)), n[a] - 2);
      frac[a] = g - cell[a];
    }
    clamped += outside;
    Vec3 q = Vec3::Zero();
    for (int dz = 0; dz < 2; ++dz) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          double w = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                     (dz ? frac[2] : 1.0 - frac[2]);
          int i = cell[0] + dx, j = cell[1] + dy, k = cell[2] + dz;
          q += w * ctrl[static_cast<std::size_t>(i + nx * (j + ny * k))];
        }
      }
    }
    out.push_back(q);
  }
  return out;
}

}  // namespace

std::vector<Vec3> LatticeDeformer::rest_points() const {
  const auto [nx, ny, nz] = dims;
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        Vec3 t(double(i) / (nx - 1), double(j) / (ny - 1), double(k) / (nz - 1));
        out.push_back(box_min + t.cwiseProduct(box_max - box_min));
      }
    }
  }
  return out;
}

LatticeDeformer LatticeDeformer::load(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error("cannot open " + json_path.string());
  LatticeDeformer d;
  try {
    auto doc = nlohmann::json::parse(in);
    const auto& dims = doc.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw ParseError("lattice dims must have 3 entries", 0);
    for (int a = 0; a < 3; ++a) d.dims[a] = dims[a].get<int>();
    d.box_min = read_vec3(doc.at("box_min"), "box_min");
    d.box_max = read_vec3(doc.at("box_max"), "box_max");
    for (const auto& frame : doc.at("frames")) {
      std::vector<Vec3> pts;
      for (const auto& p : frame) pts.push_back(read_vec3(p, "control point"));
      d.frames.push_back(std::move(pts));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_path.string() + ": " + e.what(), 0);
  }
  if (d.dims[0] < 2 || d.dims[1] < 2 || d.dims[2] < 2) {
    throw ParseError("lattice dims must be at least 2 per axis", 0);
  }
  const std::size_t count = static_cast<std::size_t>(d.dims[0]) * d.dims[1] * d.dims[2];
  for (const auto& f : d.frames) {
    if (f.size() != count) throw ParseError("lattice frame has the wrong number of control points", 0);
  }
  if (d.frames.empty()) throw ParseError("lattice has no frames", 0);
  return d;
}

MeshSequence MeshSequence::load(const std::filesystem::path& dir, const ProxyMesh& rest) {
  MeshSequence seq;
  for (int f = 0;; ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.obj", f);
    auto path = dir / name;
    if (!std::filesystem::exists(path)) break;
    ProxyMesh m = load_proxy_mesh(path);
    if (m.vertex_count() != rest.vertex_count() || m.triangles != rest.triangles) {
      throw Error(path.string() + ": topology does not match the rest mesh");
    }
    seq.frames.push_back(std::move(m.positions));
  }
  if (seq.frames.empty()) throw Error("no frame_0000.obj in " + dir.string());
  return seq;
}

ProxyMesh with_positions(const ProxyMesh& rest, std::vector<Vec3> positions) {
  if (positions.size() != rest.vertex_count()) throw Error("vertex count mismatch");
  ProxyMesh mesh = rest;
  mesh.positions = std::move(positions);
  return compute_vertex_normals(std::move(mesh));
}

DeformResult apply_deformer(const ProxyMesh& mesh, const Deformer& d, int frame) {
  DeformResult out;
  std::vector<Vec3> positions;
  if (const auto* s = std::get_if<SineDeformer>(&d)) {
    positions = sine_positions(mesh, *s, frame);
  } else if (const auto* l = std::get_if<LatticeDeformer>(&d)) {
    positions = lattice_positions(mesh, *l, frame, out.clamped);
  } else {
    const auto& seq = std::get<MeshSequence>(d);
    positions = seq.frames[cycle(frame, seq.frames.size())];
    if (positions.size() != mesh.vertex_count()) throw Error("mesh sequence vertex count mismatch");
  }
  out.mesh = with_positions(mesh, std::move(positions));
  return out;
}

std::vector<ImageRGBA> render_animation(const GaussianTexture& gt, const ProxyMesh& mesh,
                                        const Deformer& d, const Camera& cam, int frames,
                                        const Vec3& background, const RenderSettings& settings) {
  std::vector<ImageRGBA> out;
  for (int f = 0; f < frames; ++f) {
    ProxyMesh deformed = apply_deformer(mesh, d, f).mesh;
    out.push_back(render(world_gaussians(gt, deformed), cam, background, settings));
  }
  return out;
}

}  // namespace gtex
