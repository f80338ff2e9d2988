#pragma once

#include "gtex/common.hpp"
#include "gtex/mesh.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string_view>
#include <vector>

namespace gtex {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxColorValues = 3 * (kMaxShDegree + 1) * (kMaxShDegree + 1);
inline constexpr int kGeometryParams = 10;
inline constexpr int kMaxParams = kGeometryParams + kMaxColorValues;

constexpr int color_values_for_degree(int sh_degree) {
  return 3 * (sh_degree + 1) * (sh_degree + 1);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// One Gaussian living in the texture space of a triangle.
///
/// Texture points are (u, v, w): (u, v) in atlas units, w the height above the
/// atlas plane. The flat parameter layout used by the optimizer and the
/// gradient checker is
///   0..2  u_r_lo    3..5  u_r_hi    6 theta_d    7 log_s_d    8 log_s_f
///   9     opacity_logit             10..  color, coefficient-major [k][rgb]
/// For SH degree 0 the first three color values are plain RGB; higher
/// coefficients are added on top of it.
struct TexGaussian {
  std::uint32_t tri_id = 0;
  Vec3 u_r_lo = Vec3::Zero();
  Vec3 u_r_hi = Vec3::UnitX();
  double theta_d = 0.0;
  double log_s_d = 0.0;
  double log_s_f = 0.0;
  double opacity_logit = 0.0;
  std::array<double, kMaxColorValues> color{};

  double s_d() const { return std::exp(log_s_d); }
  double s_f() const { return std::exp(log_s_f); }
  double opacity() const { return sigmoid(opacity_logit); }

  double param(int k) const;
  double& param(int k);

  bool operator==(const TexGaussian&) const = default;
};

enum class ParamClass { Uv, W, Theta, LogScale, Opacity, Color };

ParamClass param_class(int k);
std::string_view param_class_name(ParamClass c);

/// The 3DGT: an ordered set of texture Gaussians plus the fingerprint of the
/// proxy mesh it was authored against.
struct GaussianTexture {
  int sh_degree = 0;
  std::vector<TexGaussian> gaussians;
  std::uint64_t mesh_fingerprint = 0;

  std::size_t size() const noexcept { return gaussians.size(); }
  int color_values() const noexcept { return color_values_for_degree(sh_degree); }
  int params_per_gaussian() const noexcept { return kGeometryParams + color_values(); }

  bool operator==(const GaussianTexture&) const = default;
};

/// Six bounding points plus the orthonormal frame that produced them.
/// Point order: r_lo, r_hi, d_lo, d_hi, f_lo, f_hi.
struct BoundingPoints {
  std::array<Vec3, 6> points;
  Vec3 center;
  Vec3 right;
  Vec3 down;
  Vec3 forward;
  // Intermediates kept for the reverse pass.
  double right_length = 0.0;
  Vec3 seed;           // canonical down (or fallback), pre-orthogonalization
  Vec3 seed_orth;      // seed minus its component along `right`
  double seed_orth_length = 0.0;
};

enum BoundingIndex { kRightLo = 0, kRightHi, kDownLo, kDownHi, kForwardLo, kForwardHi };

/// Texture-space cross product with the (u, w, v) component ordering; equals
/// the negated standard cross product.
Vec3 texture_cross(const Vec3& a, const Vec3& b);

BoundingPoints derive_bounding_points(const TexGaussian& g);

/// Gradient of the bounding-point derivation: given dL/d(points) and
/// dL/d(center), adds the parameter gradient into `grad` (flat layout).
void bounding_points_backward(const TexGaussian& g, const BoundingPoints& bp,
                              const std::array<Vec3, 6>& grad_points, const Vec3& grad_center,
                              double* grad);

struct InitConfig {
  double scale_factor = 0.25;
  double opacity = 0.1;
  Vec3 color = Vec3::Constant(0.5);
  int sh_degree = 0;
};

GaussianTexture init_gaussians(const ProxyMesh& mesh, const InitConfig& config = {});

struct DensifyConfig {
  double grad_threshold = 2e-3;
  double split_factor = 1.6;
  double percent_dense = 0.01;
  double scene_extent = 1.0;
};

struct DensifyResult {
  GaussianTexture texture;
  std::vector<std::int64_t> origin;  // source index, -1 for new offspring
  std::size_t cloned = 0;
  std::size_t split = 0;
};

/// Clone/split Gaussians whose mean screen-space gradient reaches the
/// threshold. Offspring stay on the parent triangle and are pulled back inside
/// it before insertion.
DensifyResult densify(const GaussianTexture& gt, const ProxyMesh& mesh,
                      const std::vector<double>& mean_grad, const DensifyConfig& config,
                      std::mt19937_64& rng);

/// Moves an offspring's bounding points inside its triangle.
void confine_to_triangle(TexGaussian& g, const ProxyMesh& mesh);

std::vector<std::size_t> prune_survivors(const GaussianTexture& gt, double alpha_min = 0.005);
GaussianTexture prune(const GaussianTexture& gt, double alpha_min = 0.005);

struct RebindResult {
  GaussianTexture texture;
  std::size_t dropped = 0;
};

/// Texture transfer: relocates every Gaussian's anchor UV in `target`'s atlas.
RebindResult rebind(const GaussianTexture& gt, const ProxyMesh& target);

/// Binary layout (little-endian): "3DGT", u32 version = 1, u32 sh_degree,
/// u64 count, then per Gaussian u32 tri_id followed by f32 fields in flat
/// parameter order, then the u64 mesh fingerprint. Values are rounded to f32.
struct TextureFileHeader {
  std::uint32_t version = 1;
  std::uint32_t sh_degree = 0;
  std::uint64_t count = 0;
};

TextureFileHeader read_texture_header(std::istream& in);

void save(const GaussianTexture& gt, std::ostream& out);
void save(const GaussianTexture& gt, const std::filesystem::path& path);
GaussianTexture load(std::istream& in);
GaussianTexture load(const std::filesystem::path& path);

}  // namespace gtex
