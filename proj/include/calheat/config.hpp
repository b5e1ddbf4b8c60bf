#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "calheat/error.hpp"
#include "calheat/geometry.hpp"

namespace calheat::config {

/// Malformed configuration; `line` is 0 when the problem is not tied to a line.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& origin, int line, const std::string& what);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Plain `key = value` settings, one per line, `#` starts a comment.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& origin() const { return origin_; }
  /// Directory that relative file references resolve against.
  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& entry(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string origin_ = "<config>";
  std::filesystem::path base_dir_ = ".";
  std::map<std::string, Entry> values_;
};

/// Curve definitions, one per line:
///   curve <name>; kind circle|ellipse|fourier; params <numbers>
/// circle: cx cy r. ellipse: cx cy a b [angle]. fourier: cx cy r0 cos <c1 c2 ...> sin <s1 s2 ...>.
std::map<std::string, geometry::BoundaryCurve> parse_curve_file(std::istream& in, const std::string& origin);

/// A single inline spec such as `circle 0 0 1` or `fourier 0 0 0.4 cos 0 0 0.03 sin`.
geometry::BoundaryCurve parse_curve_spec(const std::string& kind_and_params, const std::string& origin, int line);

}  // namespace calheat::config
