#pragma once
// Histogram datasets (binary indicators over a domain), CSV ingestion with
// integer encoding, background-knowledge sampling, and synthetic data.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dataring/domain.hpp"

namespace dataring {

class HistogramDataset {
 public:
  HistogramDataset() = default;

  static HistogramDataset from_indicator(std::vector<std::uint8_t> bits);
  static HistogramDataset from_labels(std::size_t domain_size,
                                      const std::vector<std::size_t>& labels);

  std::size_t domain_size() const { return bits_.size(); }
  long record_count() const { return n_; }  // N = popcount of the indicator
  int val(std::size_t label) const { return bits_.at(label); }
  const std::vector<std::uint8_t>& indicator() const { return bits_; }
  std::vector<std::size_t> set_labels() const;

  // Packed bit image with an 8-byte little-endian record-count prefix; the
  // bit length comes from the accompanying domain.
  void save(std::ostream& out) const;
  static HistogramDataset load(std::istream& in, std::size_t domain_size);

 private:
  std::vector<std::uint8_t> bits_;
  long n_ = 0;
};

struct LoadReport {
  HistogramDataset dataset;
  long duplicates = 0;  // input rows collapsed by the uniqueness assumption
};

// Maps encoded rows onto domain labels; duplicate rows collapse to one.
// Throws (with the offending row index) when a row is outside the domain.
LoadReport load_dataset(const std::vector<Tuple>& rows, const Domain& domain);

struct BackgroundKnowledge {
  std::vector<std::size_t> labels;  // sorted subset of the dataset's set labels
  std::uint64_t seed = 0;
};

// Uniform without-replacement sample of l set labels (1 <= l <= N).
BackgroundKnowledge sample_background(const HistogramDataset& ds, long l, std::uint64_t seed);

// n distinct labels, uniform without replacement over [0, domain_size).
HistogramDataset synth_dataset(long n, std::size_t domain_size, std::uint64_t seed);

// ---- CSV ingestion -------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Comma-separated UTF-8 with a mandatory header row; double-quoted fields
// with "" escapes are accepted.
CsvTable parse_csv(std::istream& in);

struct IngestResult {
  std::vector<AttributeDescriptor> schema;
  std::vector<Tuple> rows;  // in input order, unencoded duplicates included
};

// Integer encoding: categorical values are numbered in first-seen order;
// integer-kind columns are numbered by ascending numeric value.  When
// `reuse_schema` is given (re-ingestion), its mappings are applied verbatim
// and unseen values are errors.
IngestResult encode_rows(const CsvTable& table,
                         const std::vector<AttributeDescriptor::Kind>& kinds = {},
                         const std::vector<AttributeDescriptor>* reuse_schema = nullptr);

}  // namespace dataring
