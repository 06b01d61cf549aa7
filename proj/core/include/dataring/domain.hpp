#pragma once
// Enumerated public domain: every dataset record maps to exactly one label.
// A domain is an ordered list of attribute-value tuples (lexicographic in the
// integer encoding).  Capped domains hold the real dataset labels plus
// seed-deterministic filler labels sampled near the real points.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dataring {

struct AttributeDescriptor {
  enum class Kind { kCategorical, kInteger };
  std::string name;
  Kind kind = Kind::kCategorical;
  std::vector<std::string> values;  // integer code -> original text
};

// One record as a tuple of per-attribute integer codes.
using Tuple = std::vector<std::uint32_t>;

class Domain {
 public:
  Domain() = default;

  // Materializes every combination of attribute codes (small schemas only).
  static Domain full_product(std::vector<AttributeDescriptor> attrs);

  std::size_t size() const { return attrs_.empty() ? 0 : flat_.size() / attrs_.size(); }
  std::size_t arity() const { return attrs_.size(); }
  const std::vector<AttributeDescriptor>& attributes() const { return attrs_; }

  Tuple tuple_of(std::size_t label) const;
  std::optional<std::size_t> label_of(const Tuple& tuple) const;

  // Domain cap a (0 for uncapped full-product domains) and the filler seed.
  long cap() const { return cap_; }
  std::uint64_t seed() const { return seed_; }

  // Flat key=value manifest; fully reconstructible (capped domains persist
  // the real rows so the filler sampling can be replayed).
  void save(std::ostream& out) const;
  static Domain load(std::istream& in);

 private:
  friend Domain build_domain(const std::vector<AttributeDescriptor>& schema,
                             const std::vector<Tuple>& dataset_rows, long a, std::uint64_t seed);

  std::vector<AttributeDescriptor> attrs_;
  std::vector<std::uint32_t> flat_;  // size() * arity(), tuples sorted lexicographically
  long cap_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Tuple> real_rows_;  // capped domains: the rows the cap was built around
};

// Capped domain of size a*N: the N distinct dataset rows plus (a-1)*N filler
// labels obtained by perturbing one attribute of an already-included point
// (rejecting collisions), deterministically from `seed`.
Domain build_domain(const std::vector<AttributeDescriptor>& schema,
                    const std::vector<Tuple>& dataset_rows, long a, std::uint64_t seed);

}  // namespace dataring
