#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caseidx {

/// Key-value text configuration:
///
///     # comment
///     key = value
///
/// Keys and values are trimmed; blank lines and lines starting with '#' are
/// ignored. A repeated key is an error.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KvConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list value; empty items dropped.
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// Serialized form, keys sorted.
  std::string to_string() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

}  // namespace caseidx
