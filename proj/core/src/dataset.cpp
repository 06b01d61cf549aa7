#include "dataring/dataset.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "dataring/rng.hpp"

namespace dataring {

HistogramDataset HistogramDataset::from_indicator(std::vector<std::uint8_t> bits) {
  HistogramDataset ds;
  for (std::uint8_t b : bits)
    if (b > 1) throw std::invalid_argument("indicator entries must be 0 or 1");
  ds.n_ = static_cast<long>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  ds.bits_ = std::move(bits);
  return ds;
}

HistogramDataset HistogramDataset::from_labels(std::size_t domain_size,
                                               const std::vector<std::size_t>& labels) {
  std::vector<std::uint8_t> bits(domain_size, 0);
  for (std::size_t label : labels) {
    if (label >= domain_size) throw std::out_of_range("label outside domain");
    bits[label] = 1;
  }
  return from_indicator(std::move(bits));
}

std::vector<std::size_t> HistogramDataset::set_labels() const {
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n_));
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(i);
  return out;
}

void HistogramDataset::save(std::ostream& out) const {
  std::uint8_t prefix[8];
  std::uint64_t n = static_cast<std::uint64_t>(n_);
  for (int i = 0; i < 8; ++i) prefix[i] = static_cast<std::uint8_t>(n >> (8 * i));
  out.write(reinterpret_cast<const char*>(prefix), 8);
  std::vector<std::uint8_t> packed((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  out.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
}

HistogramDataset HistogramDataset::load(std::istream& in, std::size_t domain_size) {
  std::uint8_t prefix[8];
  in.read(reinterpret_cast<char*>(prefix), 8);
  if (in.gcount() != 8) throw std::runtime_error("dataset image truncated");
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(prefix[i]) << (8 * i);
  std::vector<std::uint8_t> packed((domain_size + 7) / 8);
  in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (static_cast<std::size_t>(in.gcount()) != packed.size())
    throw std::runtime_error("dataset image truncated");
  std::vector<std::uint8_t> bits(domain_size, 0);
  for (std::size_t i = 0; i < domain_size; ++i)
    bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
  HistogramDataset ds = from_indicator(std::move(bits));
  if (static_cast<std::uint64_t>(ds.record_count()) != n)
    throw std::runtime_error("dataset image record count does not match indicator");
  return ds;
}

LoadReport load_dataset(const std::vector<Tuple>& rows, const Domain& domain) {
  std::vector<std::uint8_t> bits(domain.size(), 0);
  long duplicates = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto label = domain.label_of(rows[r]);
    if (!label) throw std::invalid_argument("row " + std::to_string(r) + " outside domain");
    if (bits[*label])
      ++duplicates;
    else
      bits[*label] = 1;
  }
  return LoadReport{HistogramDataset::from_indicator(std::move(bits)), duplicates};
}

BackgroundKnowledge sample_background(const HistogramDataset& ds, long l, std::uint64_t seed) {
  if (l < 1 || l > ds.record_count())
    throw std::invalid_argument("background size must be in [1, N]");
  std::vector<std::size_t> labels = ds.set_labels();
  Rng rng(seed);
  // Partial Fisher-Yates: the first l entries are a uniform sample.
  for (long i = 0; i < l; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(labels.size() - i));
    std::swap(labels[static_cast<std::size_t>(i)], labels[j]);
  }
  labels.resize(static_cast<std::size_t>(l));
  std::sort(labels.begin(), labels.end());
  return BackgroundKnowledge{std::move(labels), seed};
}

HistogramDataset synth_dataset(long n, std::size_t domain_size, std::uint64_t seed) {
  if (n < 0 || static_cast<std::size_t>(n) > domain_size)
    throw std::invalid_argument("dataset size must be in [0, |domain|]");
  std::vector<std::size_t> labels(domain_size);
  std::iota(labels.begin(), labels.end(), std::size_t{0});
  Rng rng(seed);
  for (long i = 0; i < n; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(labels.size() - i));
    std::swap(labels[static_cast<std::size_t>(i)], labels[j]);
  }
  labels.resize(static_cast<std::size_t>(n));
  return HistogramDataset::from_labels(domain_size, labels);
}

// ---- CSV ------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted)
    throw std::invalid_argument("unterminated quote on CSV line " + std::to_string(line_no));
  cells.push_back(std::move(cur));
  return cells;
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line, line_no);
    if (table.header.empty()) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size())
        throw std::invalid_argument("CSV line " + std::to_string(line_no) +
                                    " has wrong field count");
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) throw std::invalid_argument("CSV requires a header row");
  return table;
}

IngestResult encode_rows(const CsvTable& table, const std::vector<AttributeDescriptor::Kind>& kinds,
                         const std::vector<AttributeDescriptor>* reuse_schema) {
  const std::size_t arity = table.header.size();
  if (!kinds.empty() && kinds.size() != arity)
    throw std::invalid_argument("kinds list does not match column count");
  if (reuse_schema && reuse_schema->size() != arity)
    throw std::invalid_argument("reused schema does not match column count");

  IngestResult out;
  out.schema.resize(arity);
  std::vector<std::unordered_map<std::string, std::uint32_t>> code_of(arity);

  for (std::size_t k = 0; k < arity; ++k) {
    auto& attr = out.schema[k];
    attr.name = table.header[k];
    attr.kind = kinds.empty() ? AttributeDescriptor::Kind::kCategorical : kinds[k];
    if (reuse_schema) {
      const auto& prev = (*reuse_schema)[k];
      if (prev.name != attr.name)
        throw std::invalid_argument("column '" + attr.name + "' does not match persisted schema");
      attr = prev;
      for (std::uint32_t c = 0; c < attr.values.size(); ++c) code_of[k].emplace(attr.values[c], c);
    }
  }

  // Integer-kind columns are encoded by ascending numeric value, so collect
  // their distinct values first (unless a persisted mapping is reused).
  if (!reuse_schema) {
    for (std::size_t k = 0; k < arity; ++k) {
      if (out.schema[k].kind != AttributeDescriptor::Kind::kInteger) continue;
      std::map<long long, std::string> distinct;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& cell = table.rows[r][k];
        try {
          std::size_t pos = 0;
          const long long v = std::stoll(cell, &pos);
          if (pos != cell.size()) throw std::invalid_argument(cell);
          distinct.emplace(v, cell);
        } catch (const std::exception&) {
          throw std::invalid_argument("row " + std::to_string(r) + ": column '" +
                                      out.schema[k].name + "' value '" + cell +
                                      "' is not an integer");
        }
      }
      for (auto& [v, text] : distinct) {
        code_of[k].emplace(text, static_cast<std::uint32_t>(out.schema[k].values.size()));
        out.schema[k].values.push_back(text);
      }
    }
  }

  out.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Tuple row(arity);
    for (std::size_t k = 0; k < arity; ++k) {
      const std::string& cell = table.rows[r][k];
      auto it = code_of[k].find(cell);
      if (it == code_of[k].end()) {
        const bool may_extend =
            !reuse_schema && out.schema[k].kind == AttributeDescriptor::Kind::kCategorical;
        if (!may_extend)
          throw std::invalid_argument("row " + std::to_string(r) + ": column '" +
                                      out.schema[k].name + "' value '" + cell +
                                      "' not in schema");
        const std::uint32_t code = static_cast<std::uint32_t>(out.schema[k].values.size());
        out.schema[k].values.push_back(cell);
        it = code_of[k].emplace(cell, code).first;
      }
      row[k] = it->second;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace dataring
