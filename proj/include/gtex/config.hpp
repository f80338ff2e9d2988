#pragma once

#include "gtex/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gtex {

/// Flat `key = value` document; '#' starts a comment. Later keys win.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  /// Overwrites `out` when the key is present; throws ParseError on bad values.
  void read(const std::string& key, double& out) const;
  void read(const std::string& key, int& out) const;
  void read(const std::string& key, std::uint64_t& out) const;
  void read(const std::string& key, bool& out) const;
  void read(const std::string& key, std::string& out) const;
  void read(const std::string& key, Vec3& out) const;  // "x, y, z"

  /// Keys never passed to read(); lets callers reject typos.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
  mutable std::map<std::string, bool> used_;
};

}  // namespace gtex
