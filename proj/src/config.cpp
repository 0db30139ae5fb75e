#include "pat/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pat/errors.hpp"

namespace pat::cfg {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char ch : k)
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '=') return false;
  return true;
}

}  // namespace

Config Config::parse_string(std::string_view text, std::string_view origin) {
  Config c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw FormatError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected key=value");
    const std::string_view key = trim(stripped.substr(0, eq));
    const std::string_view val = trim(stripped.substr(eq + 1));
    if (!valid_key(key))
      throw FormatError(std::string(origin) + ":" + std::to_string(line_no) + ": bad key");
    if (c.kv_.count(key))
      throw FormatError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": duplicate key '" + std::string(key) + "'");
    c.order_.emplace_back(key);
    c.kv_.emplace(std::string(key), std::string(val));
  }
  return c;
}

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path.string());
}

bool Config::has(std::string_view key) const { return kv_.find(key) != kv_.end(); }

void Config::set(std::string_view key, std::string_view value) {
  if (!valid_key(key)) throw ArgumentError("config: bad key '" + std::string(key) + "'");
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    order_.emplace_back(key);
    kv_.emplace(std::string(key), std::string(value));
  } else {
    it->second = std::string(value);
  }
}

std::string Config::raw(std::string_view key) const {
  auto it = kv_.find(key);
  if (it == kv_.end())
    throw ArgumentError("config: missing key '" + std::string(key) + "'");
  read_.insert(std::string(key));
  return it->second;
}

std::string Config::get_string(std::string_view key) const { return raw(key); }

std::string Config::get_string(std::string_view key, std::string_view fallback) const {
  return has(key) ? raw(key) : std::string(fallback);
}

double Config::get_double(std::string_view key) const {
  const std::string v = raw(key);
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE)
    throw FormatError("config: '" + std::string(key) + "' is not a number: " + v);
  return d;
}

double Config::get_double(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(std::string_view key) const {
  const std::string v = raw(key);
  errno = 0;
  char* end = nullptr;
  const long long d = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE)
    throw FormatError("config: '" + std::string(key) + "' is not an integer: " + v);
  return d;
}

std::int64_t Config::get_int(std::string_view key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_uint(std::string_view key) const {
  const std::string v = raw(key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long d = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE || v.front() == '-')
    throw FormatError("config: '" + std::string(key) + "' is not a non-negative integer: " + v);
  return d;
}

std::uint64_t Config::get_uint(std::string_view key, std::uint64_t fallback) const {
  return has(key) ? get_uint(key) : fallback;
}

bool Config::get_bool(std::string_view key) const {
  std::string v = raw(key);
  for (char& ch : v) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw FormatError("config: '" + std::string(key) + "' is not a boolean: " + v);
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::pair<std::string, std::string>> Config::items() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(order_.size());
  for (const std::string& k : order_) out.emplace_back(k, kv_.find(k)->second);
  return out;
}

std::vector<std::string> Config::unread_keys() const {
  std::vector<std::string> out;
  for (const std::string& k : order_)
    if (!read_.count(k)) out.push_back(k);
  return out;
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : items()) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace pat::cfg
