#include "gtex/gaussian_texture.hpp"

#include "gtex/projection.hpp"
#include "gtex/shell_map.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace gtex {

double TexGaussian::param(int k) const { return const_cast<TexGaussian*>(this)->param(k); }

double& TexGaussian::param(int k) {
  switch (k) {
    case 0: case 1: case 2: return u_r_lo[k];
    case 3: case 4: case 5: return u_r_hi[k - 3];
    case 6: return theta_d;
    case 7: return log_s_d;
    case 8: return log_s_f;
    case 9: return opacity_logit;
    default: break;
  }
  if (k < kGeometryParams || k >= kMaxParams) throw Error("parameter index out of range");
  return color[k - kGeometryParams];
}

ParamClass param_class(int k) {
  switch (k) {
    case 0: case 1: case 3: case 4: return ParamClass::Uv;
    case 2: case 5: return ParamClass::W;
    case 6: return ParamClass::Theta;
    case 7: case 8: return ParamClass::LogScale;
    case 9: return ParamClass::Opacity;
    default: return ParamClass::Color;
  }
}

std::string_view param_class_name(ParamClass c) {
  switch (c) {
    case ParamClass::Uv: return "uv";
    case ParamClass::W: return "w";
    case ParamClass::Theta: return "theta";
    case ParamClass::LogScale: return "log_scale";
    case ParamClass::Opacity: return "opacity";
    case ParamClass::Color: return "color";
  }
  return "?";
}

Vec3 texture_cross(const Vec3& a, const Vec3& b) {
  Vec3 as(a.x(), a.z(), a.y());
  Vec3 bs(b.x(), b.z(), b.y());
  Vec3 c = as.cross(bs);
  return Vec3(c.x(), c.z(), c.y());
}

BoundingPoints derive_bounding_points(const TexGaussian& g) {
  BoundingPoints bp;
  bp.center = 0.5 * (g.u_r_lo + g.u_r_hi);
  Vec3 d = g.u_r_hi - g.u_r_lo;
  bp.right_length = d.norm();
  if (!(bp.right_length > 1e-9)) throw Error("right bounding points coincide");
  bp.right = d / bp.right_length;

  bp.seed = Vec3::UnitZ();
  bp.seed_orth = bp.seed - bp.seed.dot(bp.right) * bp.right;
  bp.seed_orth_length = bp.seed_orth.norm();
  if (bp.seed_orth_length < 1e-9) {
    bp.seed = Vec3::UnitY();
    bp.seed_orth = bp.seed - bp.seed.dot(bp.right) * bp.right;
    bp.seed_orth_length = bp.seed_orth.norm();
  }
  Vec3 e = bp.seed_orth / bp.seed_orth_length;
  double c = std::cos(g.theta_d);
  double s = std::sin(g.theta_d);
  bp.down = c * e + s * bp.right.cross(e);
  bp.forward = texture_cross(bp.right, bp.down);

  double sd = g.s_d();
  double sf = g.s_f();
  bp.points[kRightLo] = g.u_r_lo;
  bp.points[kRightHi] = g.u_r_hi;
  bp.points[kDownLo] = bp.center - sd * bp.down;
  bp.points[kDownHi] = bp.center + sd * bp.down;
  bp.points[kForwardLo] = bp.center - sf * bp.forward;
  bp.points[kForwardHi] = bp.center + sf * bp.forward;
  return bp;
}

void bounding_points_backward(const TexGaussian& g, const BoundingPoints& bp,
                              const std::array<Vec3, 6>& gp, const Vec3& grad_center,
                              double* grad) {
  double sd = g.s_d();
  double sf = g.s_f();
  Vec3 g_center = grad_center + gp[kDownLo] + gp[kDownHi] + gp[kForwardLo] + gp[kForwardHi];
  Vec3 down_diff = gp[kDownHi] - gp[kDownLo];
  Vec3 fwd_diff = gp[kForwardHi] - gp[kForwardLo];
  Vec3 g_down = sd * down_diff;
  Vec3 g_fwd = sf * fwd_diff;
  grad[7] += sd * bp.down.dot(down_diff);
  grad[8] += sf * bp.forward.dot(fwd_diff);

  // forward = down x right
  Vec3 g_right = g_fwd.cross(bp.down);
  g_down += bp.right.cross(g_fwd);

  // down = cos e + sin (right x e)
  Vec3 e = bp.seed_orth / bp.seed_orth_length;
  double c = std::cos(g.theta_d);
  double s = std::sin(g.theta_d);
  Vec3 g_rot = s * g_down;
  Vec3 g_e = c * g_down + g_rot.cross(bp.right);
  g_right += e.cross(g_rot);
  grad[6] += g_down.dot(-s * e + c * bp.right.cross(e));

  // e = seed_orth / |seed_orth|, seed_orth = seed - (seed . right) right
  Vec3 g_orth = (g_e - e * e.dot(g_e)) / bp.seed_orth_length;
  g_right += -bp.right.dot(g_orth) * bp.seed - bp.seed.dot(bp.right) * g_orth;

  // right = (hi - lo) / |hi - lo|
  Vec3 g_d = (g_right - bp.right * bp.right.dot(g_right)) / bp.right_length;
  Vec3 g_lo = gp[kRightLo] - g_d + 0.5 * g_center;
  Vec3 g_hi = gp[kRightHi] + g_d + 0.5 * g_center;
  for (int i = 0; i < 3; ++i) {
    grad[i] += g_lo[i];
    grad[3 + i] += g_hi[i];
  }
}

GaussianTexture init_gaussians(const ProxyMesh& mesh, const InitConfig& config) {
  if (config.sh_degree < 0 || config.sh_degree > kMaxShDegree) throw Error("unsupported SH degree");
  GaussianTexture gt;
  gt.sh_degree = config.sh_degree;
  gt.mesh_fingerprint = mesh_fingerprint(mesh);
  gt.gaussians.reserve(mesh.triangle_count() * 3);
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& uv = mesh.uvs[t];
    Vec2 centroid = (uv[0] + uv[1] + uv[2]) / 3.0;
    double log_scale = std::log(config.scale_factor * mean_uv_edge_length(mesh, t));
    for (int k = 0; k < 3; ++k) {
      TexGaussian g;
      g.tri_id = t;
      g.u_r_lo = Vec3(uv[k].x(), uv[k].y(), 0.0);
      g.u_r_hi = Vec3(centroid.x(), centroid.y(), 0.0);
      g.theta_d = 0.0;
      g.log_s_d = log_scale;
      g.log_s_f = log_scale;
      g.opacity_logit = logit(config.opacity);
      for (int c = 0; c < 3; ++c) g.color[c] = config.color[c];
      gt.gaussians.push_back(g);
    }
  }
  return gt;
}

namespace {

Vec2 uv_from_phi(const TriangleUv& corners, const Vec3& phi) {
  return phi[0] * corners[0] + phi[1] * corners[1] + phi[2] * corners[2];
}

}  // namespace

void confine_to_triangle(TexGaussian& g, const ProxyMesh& mesh) {
  constexpr double kMargin = 1e-9;
  const auto& corners = mesh.uvs.at(g.tri_id);
  auto tri = ShellTriangle::from_mesh(mesh, g.tri_id);
  Vec3 center = 0.5 * (g.u_r_lo + g.u_r_hi);
  Vec3 half = 0.5 * (g.u_r_hi - g.u_r_lo);
  if (half.head<2>().norm() <= 1e-12 && std::abs(half.z()) <= 1e-12) {
    half = Vec3(corners[1].x() - corners[0].x(), corners[1].y() - corners[0].y(), 0.0) * 1e-3;
  }
  auto bp = derive_bounding_points(g);
  auto reach = [&](double scale) {
    std::array<Vec3, 3> axes = {half * scale, bp.down * g.s_d() * scale,
                                bp.forward * g.s_f() * scale};
    Vec3 r = Vec3::Zero();
    for (const auto& a : axes) r = r.cwiseMax((tri.du * a.x() + tri.dv * a.y()).cwiseAbs());
    return r;
  };

  // Shrink until the Gaussian fits around the centroid, then pull the center
  // toward the centroid just far enough.
  Vec3 r = reach(1.0);
  double k = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (r[i] > 1.0 / 3.0 - kMargin) k = std::min(k, (1.0 / 3.0 - kMargin) / r[i]);
  }
  if (k < 1.0) {
    k *= 1.0 - 1e-9;
    r = reach(k);
    half *= k;
    g.log_s_d += std::log(k);
    g.log_s_f += std::log(k);
  }
  Vec3 phi = tri.barycentric(center.x(), center.y());
  double t = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (phi[i] < r[i] + kMargin) t = std::min(t, (1.0 / 3.0 - r[i] - kMargin) / (1.0 / 3.0 - phi[i]));
  }
  if (t < 1.0) {
    phi = Vec3::Constant((1.0 - t) / 3.0) + t * phi;
    center.head<2>() = uv_from_phi(corners, phi);
  }
  g.u_r_lo = center - half;
  g.u_r_hi = center + half;
}

DensifyResult densify(const GaussianTexture& gt, const ProxyMesh& mesh,
                      const std::vector<double>& mean_grad, const DensifyConfig& config,
                      std::mt19937_64& rng) {
  if (mean_grad.size() != gt.size()) throw Error("gradient statistics do not match the texture");
  DensifyResult out;
  out.texture.sh_degree = gt.sh_degree;
  out.texture.mesh_fingerprint = gt.mesh_fingerprint;
  std::vector<TexGaussian> offspring;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double cutoff = config.percent_dense * config.scene_extent;
  const double shrink = std::log(config.split_factor);

  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto& g = gt.gaussians[i];
    if (!(mean_grad[i] >= config.grad_threshold)) {
      out.texture.gaussians.push_back(g);
      out.origin.push_back(static_cast<std::int64_t>(i));
      continue;
    }
    auto tri = ShellTriangle::from_mesh(mesh, g.tri_id);
    auto rec = project_gaussian(g, tri, gt.sh_degree);
    double extent = std::max({rec.shear.col(0).norm(), rec.shear.col(1).norm(),
                              rec.shear.col(2).norm()});
    if (extent <= cutoff) {
      out.texture.gaussians.push_back(g);
      out.origin.push_back(static_cast<std::int64_t>(i));
      TexGaussian clone = g;
      confine_to_triangle(clone, mesh);
      offspring.push_back(clone);
      ++out.cloned;
    } else {
      const auto& bp = rec.bounds;
      Vec3 half_right = g.u_r_hi - bp.center;
      for (int child = 0; child < 2; ++child) {
        double z0 = normal(rng);
        double z1 = normal(rng);
        double z2 = normal(rng);
        Vec3 offset = z0 * half_right + z1 * g.s_d() * bp.down + z2 * g.s_f() * bp.forward;
        offset.z() = 0.0;
        Vec3 center = bp.center + offset;
        TexGaussian c = g;
        c.u_r_lo = center - half_right / config.split_factor;
        c.u_r_hi = center + half_right / config.split_factor;
        c.log_s_d -= shrink;
        c.log_s_f -= shrink;
        confine_to_triangle(c, mesh);
        offspring.push_back(c);
      }
      ++out.split;
    }
  }
  for (auto& g : offspring) {
    out.texture.gaussians.push_back(g);
    out.origin.push_back(-1);
  }
  return out;
}

std::vector<std::size_t> prune_survivors(const GaussianTexture& gt, double alpha_min) {
  std::vector<std::size_t> keep;
  keep.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.gaussians[i].opacity() >= alpha_min) keep.push_back(i);
  }
  return keep;
}

GaussianTexture prune(const GaussianTexture& gt, double alpha_min) {
  GaussianTexture out;
  out.sh_degree = gt.sh_degree;
  out.mesh_fingerprint = gt.mesh_fingerprint;
  for (auto i : prune_survivors(gt, alpha_min)) out.gaussians.push_back(gt.gaussians[i]);
  return out;
}

RebindResult rebind(const GaussianTexture& gt, const ProxyMesh& target) {
  RebindResult out;
  out.texture.sh_degree = gt.sh_degree;
  out.texture.mesh_fingerprint = mesh_fingerprint(target);
  if (out.texture.mesh_fingerprint == gt.mesh_fingerprint) {
    out.texture = gt;
    return out;
  }
  UvLocator locator(target);
  for (const auto& g : gt.gaussians) {
    Vec2 anchor = 0.5 * (g.u_r_lo.head<2>() + g.u_r_hi.head<2>());
    std::optional<std::uint32_t> tri;
    if (g.tri_id < target.triangle_count() &&
        uv_to_barycentric(anchor, target.uvs[g.tri_id]).minCoeff() >= -1e-9) {
      tri = g.tri_id;
    } else if (auto hit = locator.locate(anchor)) {
      tri = hit->tri_id;
    }
    if (!tri) {
      ++out.dropped;
      continue;
    }
    TexGaussian moved = g;
    moved.tri_id = *tri;
    out.texture.gaussians.push_back(moved);
  }
  if (2 * out.dropped > gt.size()) {
    throw Error("atlases incompatible: " + std::to_string(out.dropped) + " of " +
                std::to_string(gt.size()) + " Gaussians fall outside the target atlas");
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'3', 'D', 'G', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

void put_f32(std::ostream& out, double value) {
  put(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("truncated 3DGT file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

double get_f32(std::istream& in) {
  return static_cast<double>(std::bit_cast<float>(get<std::uint32_t>(in)));
}

}  // namespace

TextureFileHeader read_texture_header(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw Error("truncated 3DGT file");
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error("not a 3DGT file (bad magic)");
  TextureFileHeader h;
  h.version = get<std::uint32_t>(in);
  if (h.version != kVersion) throw Error("unsupported 3DGT version " + std::to_string(h.version));
  h.sh_degree = get<std::uint32_t>(in);
  if (h.sh_degree > static_cast<std::uint32_t>(kMaxShDegree)) throw Error("unsupported SH degree");
  h.count = get<std::uint64_t>(in);
  return h;
}

void save(const GaussianTexture& gt, std::ostream& out) {
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(gt.sh_degree));
  put(out, static_cast<std::uint64_t>(gt.size()));
  const int params = gt.params_per_gaussian();
  for (const auto& g : gt.gaussians) {
    put(out, g.tri_id);
    for (int k = 0; k < params; ++k) put_f32(out, g.param(k));
  }
  put(out, gt.mesh_fingerprint);
  if (!out) throw Error("failed writing 3DGT data");
}

void save(const GaussianTexture& gt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  save(gt, out);
}

GaussianTexture load(std::istream& in) {
  auto header = read_texture_header(in);
  GaussianTexture gt;
  gt.sh_degree = static_cast<int>(header.sh_degree);
  const int params = gt.params_per_gaussian();
  for (std::uint64_t i = 0; i < header.count; ++i) {
    TexGaussian g;
    g.tri_id = get<std::uint32_t>(in);
    for (int k = 0; k < params; ++k) g.param(k) = get_f32(in);
    gt.gaussians.push_back(g);
  }
  gt.mesh_fingerprint = get<std::uint64_t>(in);
  return gt;
}

GaussianTexture load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load(in);
}

}  // namespace gtex
