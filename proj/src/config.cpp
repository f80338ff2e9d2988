#include "gtex/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace gtex {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text, std::size_t line) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("bad value for '" + key + "': '" + text + "'", line);
  }
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string text = trim(raw);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
      throw ParseError("bad key '" + key + "'", line);
    }
    cfg.values_[key] = value;
    cfg.lines_[key] = line;
    cfg.used_[key] = false;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse(in);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  lines_[key] = 0;
  used_[key] = false;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_[key] = true;
  return it->second;
}

void KeyValueConfig::read(const std::string& key, double& out) const {
  if (auto v = get(key)) out = parse_number<double>(key, *v, lines_.at(key));
}

void KeyValueConfig::read(const std::string& key, int& out) const {
  if (auto v = get(key)) out = parse_number<int>(key, *v, lines_.at(key));
}

void KeyValueConfig::read(const std::string& key, std::uint64_t& out) const {
  if (auto v = get(key)) out = parse_number<std::uint64_t>(key, *v, lines_.at(key));
}

void KeyValueConfig::read(const std::string& key, bool& out) const {
  auto v = get(key);
  if (!v) return;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
    out = true;
  } else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
    out = false;
  } else {
    throw ParseError("bad boolean for '" + key + "': '" + *v + "'", lines_.at(key));
  }
}

void KeyValueConfig::read(const std::string& key, std::string& out) const {
  if (auto v = get(key)) out = *v;
}

void KeyValueConfig::read(const std::string& key, Vec3& out) const {
  auto v = get(key);
  if (!v) return;
  std::stringstream ss(*v);
  std::string part;
  Vec3 result;
  int n = 0;
  while (std::getline(ss, part, ',')) {
    if (n == 3) throw ParseError("expected 3 components for '" + key + "'", lines_.at(key));
    result[n++] = parse_number<double>(key, trim(part), lines_.at(key));
  }
  if (n != 3) throw ParseError("expected 3 components for '" + key + "'", lines_.at(key));
  out = result;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, used] : used_) {
    if (!used) out.push_back(key);
  }
  return out;
}

}  // namespace gtex
