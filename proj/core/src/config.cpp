#include "gibbsq/config.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/io.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace gibbsq {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void collect(const pt::ptree& tree, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [k, child] : tree) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (child.empty()) {
      out.push_back(key);
    } else {
      collect(child, key, out);
    }
  }
}

double to_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw InvalidArgument("config: '" + key + "' = '" + text + "' is not a finite number");
  }
  return v;
}

}  // namespace

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream is(text);
  try {
    pt::read_ini(is, c.tree_);
  } catch (const pt::ini_parser_error& ex) {
    throw InvalidArgument(std::string("config: ") + ex.what());
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  try {
    return from_string(read_text(path));
  } catch (const InvalidArgument& ex) {
    throw InvalidArgument(path + ": " + ex.what());
  }
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidArgument("config override '" + assignment + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw InvalidArgument("config: empty key");
  tree_.put(key, value);
}

std::optional<std::string> Config::raw(const std::string& key) const {
  const auto v = tree_.get_optional<std::string>(key);
  if (!v) return std::nullopt;
  return trim(*v);
}

bool Config::has(const std::string& key) const { return raw(key).has_value(); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = raw(key);
  return v ? to_double(key, *v) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  char* end = nullptr;
  const long long out = std::strtoll(v->c_str(), &end, 10);
  if (v->empty() || end != v->c_str() + v->size()) {
    throw InvalidArgument("config: '" + key + "' = '" + *v + "' is not an integer");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw InvalidArgument("config: '" + key + "' = '" + *v + "' is not a boolean");
}

Vector Config::get_vector(const std::string& key, const Vector& fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::string s = *v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::vector<double> values;
  std::string tok;
  while (is >> tok) values.push_back(to_double(key, tok));
  if (values.empty()) throw InvalidArgument("config: '" + key + "' is an empty vector");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  collect(tree_, "", out);
  return out;
}

}  // namespace gibbsq
