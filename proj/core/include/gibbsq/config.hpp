#ifndef GIBBSQ_CONFIG_HPP_
#define GIBBSQ_CONFIG_HPP_

#include "gibbsq/types.hpp"

#include <boost/property_tree/ptree.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gibbsq {

/// Nested key-value settings read from INI text. Keys are addressed as
/// "section.key"; keys before any section header live at the top level.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  /// Applies one "key=value" override.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma- or space-separated list of reals; fallback when absent.
  Vector get_vector(const std::string& key, const Vector& fallback) const;

  std::vector<std::string> keys() const;

 private:
  std::optional<std::string> raw(const std::string& key) const;
  boost::property_tree::ptree tree_;
};

}  // namespace gibbsq

#endif  // GIBBSQ_CONFIG_HPP_
