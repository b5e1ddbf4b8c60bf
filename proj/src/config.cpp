#include "calheat/config.hpp"

#include <fstream>
#include <sstream>

namespace calheat::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool to_double(const std::string& s, double& v) {
  try {
    std::size_t used = 0;
    v = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, int line, const std::string& what)
    : InvalidArgument("config", origin + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
      line_(line) {}

Config Config::parse(std::istream& in, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, line, "expected `key = value`");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin, line, "empty key");
    if (c.values_.count(key)) throw ConfigError(origin, line, "duplicate key `" + key + "`");
    c.values_[key] = {value, line};
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  Config c = parse(in, path.string());
  c.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  if (k.empty()) throw ConfigError(origin_, 0, "empty key");
  values_[k] = {trim(value), 0};
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> k;
  for (const auto& [key, e] : values_) k.push_back(key);
  return k;
}

const Config::Entry& Config::entry(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(origin_, 0, "missing required key `" + key + "`");
  return it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(origin_, entry(key).line, "`" + key + "`: " + what);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? entry(key).value : fallback;
}

std::string Config::get_string(const std::string& key) const { return entry(key).value; }

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  double v;
  if (!to_double(entry(key).value, v)) fail(key, "expected a number, got `" + entry(key).value + "`");
  return v;
}

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  double v;
  if (!to_double(entry(key).value, v) || v != static_cast<int>(v)) {
    fail(key, "expected an integer, got `" + entry(key).value + "`");
  }
  return static_cast<int>(v);
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& w : split_ws(entry(key).value)) {
    double v;
    if (!to_double(w, v)) fail(key, "expected numbers, got `" + w + "`");
    out.push_back(v);
  }
  return out;
}

geometry::BoundaryCurve parse_curve_spec(const std::string& spec, const std::string& origin, int line) {
  const auto words = split_ws(spec);
  if (words.empty()) throw ConfigError(origin, line, "empty curve specification");
  const std::string& kind = words[0];
  std::vector<double> nums;
  std::vector<double> cos_c, sin_c;
  std::vector<double>* target = &nums;
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (kind == "fourier" && words[i] == "cos") {
      target = &cos_c;
      continue;
    }
    if (kind == "fourier" && words[i] == "sin") {
      target = &sin_c;
      continue;
    }
    double v;
    if (!to_double(words[i], v)) throw ConfigError(origin, line, "bad curve parameter `" + words[i] + "`");
    target->push_back(v);
  }
  try {
    if (kind == "circle") {
      if (nums.size() != 3) throw ConfigError(origin, line, "circle needs: cx cy r");
      if (!(nums[2] > 0)) throw ConfigError(origin, line, "circle radius must be positive");
      return geometry::BoundaryCurve::circle({nums[0], nums[1]}, nums[2]);
    }
    if (kind == "ellipse") {
      if (nums.size() != 4 && nums.size() != 5) throw ConfigError(origin, line, "ellipse needs: cx cy a b [angle]");
      if (!(nums[2] > 0 && nums[3] > 0)) throw ConfigError(origin, line, "ellipse semi-axes must be positive");
      return geometry::BoundaryCurve::ellipse({nums[0], nums[1]}, nums[2], nums[3], nums.size() == 5 ? nums[4] : 0.0);
    }
    if (kind == "fourier") {
      if (nums.size() != 3) throw ConfigError(origin, line, "fourier needs: cx cy r0 cos ... sin ...");
      return geometry::BoundaryCurve::fourier({nums[0], nums[1]}, nums[2], cos_c, sin_c);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(origin, line, e.what());
  }
  throw ConfigError(origin, line, "unknown curve kind `" + kind + "`");
}

std::map<std::string, geometry::BoundaryCurve> parse_curve_file(std::istream& in, const std::string& origin) {
  std::map<std::string, geometry::BoundaryCurve> curves;
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    std::string name, kind, params;
    std::istringstream fields(text);
    for (std::string part; std::getline(fields, part, ';');) {
      const auto words = split_ws(part);
      if (words.empty()) continue;
      const std::string rest = trim(trim(part).substr(words[0].size()));
      if (words[0] == "curve")
        name = rest;
      else if (words[0] == "kind")
        kind = rest;
      else if (words[0] == "params")
        params = rest;
      else
        throw ConfigError(origin, line, "unknown field `" + words[0] + "`");
    }
    if (name.empty() || kind.empty()) throw ConfigError(origin, line, "curve lines need `curve <name>` and `kind <kind>`");
    if (curves.count(name)) throw ConfigError(origin, line, "duplicate curve `" + name + "`");
    curves.emplace(name, parse_curve_spec(kind + " " + params, origin, line));
  }
  return curves;
}

}  // namespace calheat::config
