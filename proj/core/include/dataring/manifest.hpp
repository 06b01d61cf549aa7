#pragma once
// Flat key=value run manifest.  Every experiment writes one capturing all of
// its parameters plus the master seed, and any run can be replayed from it;
// insertion order is preserved so saved manifests are reproducible byte for
// byte.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dataring {

class Manifest {
 public:
  void set(const std::string& key, std::string value);
  void set_u64(const std::string& key, std::uint64_t value);
  void set_i64(const std::string& key, std::int64_t value);
  void set_double(const std::string& key, double value);  // %.17g round-trip

  bool contains(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws if missing
  std::string get_or(const std::string& key, std::string fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::int64_t get_i64(const std::string& key) const;
  double get_double(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static Manifest load(std::istream& in);
  static Manifest load_file(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace dataring
