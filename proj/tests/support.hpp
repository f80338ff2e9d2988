#pragma once

#include "gtex/fixtures.hpp"
#include "gtex/gaussian_texture.hpp"
#include "gtex/mesh.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

namespace gtex::test {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gtex_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ProxyMesh parse_obj_text(const std::string& text) {
  std::istringstream in(text);
  return parse_obj(in);
}

/// World triangle equal to its UV triangle (0,0), (1,0), (0,1) in z = 0,
/// scaled by `scale`; omega is `scale` everywhere.
inline ProxyMesh unit_triangle(double scale = 1.0) {
  return make_proxy_mesh({Vec3(0, 0, 0), Vec3(scale, 0, 0), Vec3(0, scale, 0)}, {{0, 1, 2}},
                         {{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}});
}

/// |a - b| <= rel * |b| + abs
inline bool near(double a, double b, double rel, double abs) {
  return std::abs(a - b) <= rel * std::abs(b) + abs;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace gtex::test
