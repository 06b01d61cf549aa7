#include "dataring/manifest.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace dataring {

namespace {

void validate_key(const std::string& key) {
  if (key.empty() || key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
      key.front() == '#')
    throw std::invalid_argument("invalid manifest key: '" + key + "'");
}

}  // namespace

void Manifest::set(const std::string& key, std::string value) {
  validate_key(key);
  if (value.find('\n') != std::string::npos)
    throw std::invalid_argument("manifest values must be single-line");
  for (auto& entry : entries_) {
    if (entry.first == key) {
      entry.second = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void Manifest::set_u64(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void Manifest::set_i64(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

void Manifest::set_double(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  set(key, buf);
}

bool Manifest::contains(const std::string& key) const {
  for (const auto& entry : entries_)
    if (entry.first == key) return true;
  return false;
}

const std::string& Manifest::get(const std::string& key) const {
  for (const auto& entry : entries_)
    if (entry.first == key) return entry.second;
  throw std::out_of_range("manifest key not found: '" + key + "'");
}

std::string Manifest::get_or(const std::string& key, std::string fallback) const {
  for (const auto& entry : entries_)
    if (entry.first == key) return entry.second;
  return fallback;
}

std::uint64_t Manifest::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end == s.c_str() || *end != '\0')
    throw std::invalid_argument("manifest key '" + key + "' is not an unsigned integer: " + s);
  return static_cast<std::uint64_t>(v);
}

std::int64_t Manifest::get_i64(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end == s.c_str() || *end != '\0')
    throw std::invalid_argument("manifest key '" + key + "' is not an integer: " + s);
  return static_cast<std::int64_t>(v);
}

double Manifest::get_double(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end == s.c_str() || *end != '\0')
    throw std::invalid_argument("manifest key '" + key + "' is not a number: " + s);
  return v;
}

void Manifest::save(std::ostream& out) const {
  for (const auto& entry : entries_) out << entry.first << '=' << entry.second << '\n';
}

void Manifest::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  save(out);
  if (!out.flush()) throw std::runtime_error("failed writing manifest: " + path);
}

Manifest Manifest::load(std::istream& in) {
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                  " is not key=value: " + line);
    m.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

Manifest Manifest::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read manifest: " + path);
  return load(in);
}

}  // namespace dataring
