#include "dataring/domain.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "dataring/rng.hpp"

namespace dataring {

namespace {

void validate_schema(const std::vector<AttributeDescriptor>& attrs) {
  if (attrs.empty()) throw std::invalid_argument("schema has no attributes");
  std::set<std::string> names;
  for (const auto& a : attrs) {
    if (a.values.empty()) throw std::invalid_argument("attribute '" + a.name + "' has no values");
    if (!names.insert(a.name).second)
      throw std::invalid_argument("duplicate attribute name '" + a.name + "'");
  }
}

void validate_row(const Tuple& row, const std::vector<AttributeDescriptor>& attrs) {
  if (row.size() != attrs.size()) throw std::invalid_argument("row arity mismatch");
  for (std::size_t k = 0; k < row.size(); ++k)
    if (row[k] >= attrs[k].values.size())
      throw std::invalid_argument("attribute code out of range for '" + attrs[k].name + "'");
}

std::string pack(const Tuple& t) {
  std::string s(t.size() * 4, '\0');
  for (std::size_t i = 0; i < t.size(); ++i)
    for (int b = 0; b < 4; ++b) s[4 * i + b] = static_cast<char>(t[i] >> (8 * b));
  return s;
}

// Full-product size with saturation, to decide whether a cap is satisfiable.
std::uint64_t saturating_product_size(const std::vector<AttributeDescriptor>& attrs) {
  std::uint64_t total = 1;
  for (const auto& a : attrs) {
    std::uint64_t m = a.values.size();
    if (total > UINT64_MAX / m) return UINT64_MAX;
    total *= m;
  }
  return total;
}

}  // namespace

Domain Domain::full_product(std::vector<AttributeDescriptor> attrs) {
  validate_schema(attrs);
  std::uint64_t total = saturating_product_size(attrs);
  constexpr std::uint64_t kMaxMaterialized = 1ull << 26;
  if (total > kMaxMaterialized)
    throw std::invalid_argument("full product domain too large to materialize");
  Domain d;
  d.attrs_ = std::move(attrs);
  const std::size_t arity = d.attrs_.size();
  d.flat_.reserve(static_cast<std::size_t>(total) * arity);
  Tuple cur(arity, 0);
  // Odometer enumeration, last attribute fastest == lexicographic order.
  for (std::uint64_t i = 0; i < total; ++i) {
    d.flat_.insert(d.flat_.end(), cur.begin(), cur.end());
    for (std::size_t k = arity; k-- > 0;) {
      if (++cur[k] < d.attrs_[k].values.size()) break;
      cur[k] = 0;
    }
  }
  return d;
}

Tuple Domain::tuple_of(std::size_t label) const {
  if (label >= size()) throw std::out_of_range("label outside domain");
  const std::size_t arity = attrs_.size();
  return Tuple(flat_.begin() + label * arity, flat_.begin() + (label + 1) * arity);
}

std::optional<std::size_t> Domain::label_of(const Tuple& tuple) const {
  if (tuple.size() != arity()) return std::nullopt;
  const std::size_t arity_n = attrs_.size();
  std::size_t lo = 0;
  std::size_t hi = size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::uint32_t* row = flat_.data() + mid * arity_n;
    int cmp = 0;
    for (std::size_t k = 0; k < arity_n; ++k) {
      if (row[k] != tuple[k]) {
        cmp = row[k] < tuple[k] ? -1 : 1;
        break;
      }
    }
    if (cmp < 0)
      lo = mid + 1;
    else if (cmp > 0)
      hi = mid;
    else
      return mid;
  }
  return std::nullopt;
}

Domain build_domain(const std::vector<AttributeDescriptor>& schema,
                    const std::vector<Tuple>& dataset_rows, long a, std::uint64_t seed) {
  validate_schema(schema);
  if (a <= 1) throw std::invalid_argument("domain cap must be greater than 1");
  if (dataset_rows.empty()) throw std::invalid_argument("cannot build a capped domain around zero rows");
  for (const auto& row : dataset_rows) validate_row(row, schema);

  // Deduplicate the real rows.
  std::vector<Tuple> pool;  // reals first, then accepted fillers
  std::unordered_set<std::string> seen;
  pool.reserve(dataset_rows.size());
  for (const auto& row : dataset_rows)
    if (seen.insert(pack(row)).second) pool.push_back(row);
  const std::uint64_t n = pool.size();
  const std::uint64_t target = static_cast<std::uint64_t>(a) * n;
  if (saturating_product_size(schema) < target)
    throw std::invalid_argument("domain cap exceeds the full product domain");

  std::vector<std::size_t> mutable_attrs;
  for (std::size_t k = 0; k < schema.size(); ++k)
    if (schema[k].values.size() >= 2) mutable_attrs.push_back(k);
  if (mutable_attrs.empty() && target > n)
    throw std::invalid_argument("schema admits no filler labels");

  // Fillers: perturb one attribute of a uniformly chosen already-included
  // point; rejection keeps labels distinct.  The reachable set is the whole
  // product domain, so this terminates whenever the cap is satisfiable.
  Rng rng(seed);
  while (pool.size() < target) {
    const Tuple& base = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    const std::size_t k = mutable_attrs[static_cast<std::size_t>(rng.below(mutable_attrs.size()))];
    const std::uint32_t radix = static_cast<std::uint32_t>(schema[k].values.size());
    std::uint32_t code = static_cast<std::uint32_t>(rng.below(radix - 1));
    if (code >= base[k]) ++code;  // uniform over codes != base[k]
    Tuple candidate = base;
    candidate[k] = code;
    if (seen.insert(pack(candidate)).second) pool.push_back(std::move(candidate));
  }

  std::sort(pool.begin(), pool.end());
  Domain d;
  d.attrs_ = schema;
  d.cap_ = a;
  d.seed_ = seed;
  d.real_rows_.assign(dataset_rows.begin(), dataset_rows.end());
  const std::size_t arity = schema.size();
  d.flat_.reserve(pool.size() * arity);
  for (const auto& t : pool) d.flat_.insert(d.flat_.end(), t.begin(), t.end());
  return d;
}

void Domain::save(std::ostream& out) const {
  out << "format=dataring-domain-v1\n";
  out << "cap=" << cap_ << "\n";
  out << "seed=" << seed_ << "\n";
  out << "attrs=" << attrs_.size() << "\n";
  for (std::size_t i = 0; i < attrs_.size(); ++i) {
    const auto& a = attrs_[i];
    out << "attr." << i << ".name=" << a.name << "\n";
    out << "attr." << i << ".kind="
        << (a.kind == AttributeDescriptor::Kind::kInteger ? "integer" : "categorical") << "\n";
    out << "attr." << i << ".values=" << a.values.size() << "\n";
    for (std::size_t v = 0; v < a.values.size(); ++v)
      out << "attr." << i << ".value." << v << "=" << a.values[v] << "\n";
  }
  out << "rows=" << real_rows_.size() << "\n";
  for (std::size_t r = 0; r < real_rows_.size(); ++r) {
    out << "row." << r << "=";
    for (std::size_t k = 0; k < real_rows_[r].size(); ++k)
      out << (k ? " " : "") << real_rows_[r][k];
    out << "\n";
  }
}

namespace {

std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("domain manifest truncated at '" + key + "'");
  const auto eq = line.find('=');
  if (eq == std::string::npos || line.substr(0, eq) != key)
    throw std::runtime_error("domain manifest: expected '" + key + "', got '" + line + "'");
  return line.substr(eq + 1);
}

}  // namespace

Domain Domain::load(std::istream& in) {
  if (expect_line(in, "format") != "dataring-domain-v1")
    throw std::runtime_error("unsupported domain manifest format");
  const long cap = std::stol(expect_line(in, "cap"));
  const std::uint64_t seed = std::stoull(expect_line(in, "seed"));
  const std::size_t n_attrs = std::stoul(expect_line(in, "attrs"));
  std::vector<AttributeDescriptor> attrs(n_attrs);
  for (std::size_t i = 0; i < n_attrs; ++i) {
    const std::string prefix = "attr." + std::to_string(i);
    attrs[i].name = expect_line(in, prefix + ".name");
    const std::string kind = expect_line(in, prefix + ".kind");
    if (kind == "integer")
      attrs[i].kind = AttributeDescriptor::Kind::kInteger;
    else if (kind == "categorical")
      attrs[i].kind = AttributeDescriptor::Kind::kCategorical;
    else
      throw std::runtime_error("unknown attribute kind '" + kind + "'");
    const std::size_t n_values = std::stoul(expect_line(in, prefix + ".values"));
    attrs[i].values.resize(n_values);
    for (std::size_t v = 0; v < n_values; ++v)
      attrs[i].values[v] = expect_line(in, prefix + ".value." + std::to_string(v));
  }
  const std::size_t n_rows = std::stoul(expect_line(in, "rows"));
  std::vector<Tuple> rows(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::istringstream cells(expect_line(in, "row." + std::to_string(r)));
    std::uint32_t code;
    while (cells >> code) rows[r].push_back(code);
  }
  if (cap == 0) {
    if (!rows.empty()) throw std::runtime_error("uncapped domain manifest must not carry rows");
    return full_product(std::move(attrs));
  }
  return build_domain(attrs, rows, cap, seed);
}

}  // namespace dataring
