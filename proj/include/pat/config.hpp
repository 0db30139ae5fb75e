#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pat::cfg {

// Flat key=value settings file. '#' lines are comments, duplicate keys are a
// FormatError, insertion order is preserved so a serialized config diffs
// cleanly against its source. Reads are tracked, letting callers reject
// settings nothing consumed (usually a typo).
class Config {
 public:
  Config() = default;
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(std::string_view text, std::string_view origin = "<string>");

  bool has(std::string_view key) const;
  void set(std::string_view key, std::string_view value);

  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key) const;
  bool get_bool(std::string_view key, bool fallback) const;

  // Keys in first-insertion order with their values.
  std::vector<std::pair<std::string, std::string>> items() const;
  // Keys present but never read through a getter.
  std::vector<std::string> unread_keys() const;

  std::string serialize() const;

 private:
  std::string raw(std::string_view key) const;  // marks the key as read

  std::vector<std::string> order_;
  std::map<std::string, std::string, std::less<>> kv_;
  mutable std::set<std::string, std::less<>> read_;
};

// FNV-1a, 64 bit. Stable fingerprint for manifests; not cryptographic.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t hash_file(const std::filesystem::path& path);  // IoError if unreadable
std::string hex64(std::uint64_t v);

}  // namespace pat::cfg
