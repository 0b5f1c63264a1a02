#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gafrl {

// Plain-text key=value settings. '#' starts a comment, blank lines are
// ignored, whitespace around keys and values is trimmed. Later keys win.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig load(const std::string& path);
  static KeyValueConfig parse(std::istream& in);

  void set(const std::string& key, const std::string& value);
  bool contains(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws ConfigError when the key is absent.
  std::string require(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

std::string trim(std::string_view s);

}  // namespace gafrl
