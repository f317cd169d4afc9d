#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dpcopula {

enum class AttributeKind { categorical, ordinal_discrete, continuous };

std::string_view to_string(AttributeKind kind);
AttributeKind parse_attribute_kind(std::string_view text);

/// Which side of each bin interval is closed.
enum class BinClosure { left, right };

/// Public, data-independent binning rule: bins split [lower, upper] at `edges`.
///
/// With left closure the bins are [lower,e0), [e0,e1), ..., [e_last,inf); with
/// right closure (-inf,e0], (e0,e1], ..., (e_last,upper]. Values outside
/// [lower, upper] are clamped into the edge bins.
struct BinRule {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> edges;
  BinClosure closure = BinClosure::left;

  std::size_t bin_count() const { return edges.size() + 1; }
  std::size_t bin_of(double value) const;
  std::vector<std::string> labels() const;
  /// Throws ConfigError naming `attribute` if the rule is malformed.
  void validate(std::string_view attribute) const;
};

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::categorical;
  std::vector<std::string> vocabulary;  // used when `binning` is empty
  std::optional<BinRule> binning;

  bool is_binned() const { return binning.has_value(); }
  /// Values the attribute takes after binning, in column order.
  std::vector<std::string> encoded_vocabulary() const;
  std::size_t encoded_size() const { return is_binned() ? binning->bin_count() : vocabulary.size(); }
};

class AttributeSchema {
 public:
  AttributeSchema() = default;
  /// Validates the invariants and throws ConfigError on violation.
  explicit AttributeSchema(std::vector<AttributeSpec> attributes);

  const std::vector<AttributeSpec>& attributes() const { return attributes_; }
  const AttributeSpec& attribute(std::size_t i) const { return attributes_.at(i); }
  std::size_t size() const { return attributes_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// d, the number of binary columns produced by dummy coding.
  std::size_t binary_width() const;

  bool operator==(const AttributeSchema&) const = default;

 private:
  std::vector<AttributeSpec> attributes_;
};

bool operator==(const BinRule& a, const BinRule& b);
bool operator==(const AttributeSpec& a, const AttributeSpec& b);

/// Rows of an original (non-binary) dataset, stored column-wise.
///
/// A column holds raw numbers while its attribute still has a pending BinRule,
/// and vocabulary codes otherwise.
class TabularDataset {
 public:
  using RawColumn = std::vector<double>;
  using CodeColumn = std::vector<std::uint32_t>;
  using Column = std::variant<RawColumn, CodeColumn>;

  TabularDataset(AttributeSchema schema, std::vector<Column> columns);

  const AttributeSchema& schema() const { return schema_; }
  std::size_t rows() const { return rows_; }
  std::size_t attribute_count() const { return schema_.size(); }

  bool is_encoded(std::size_t attribute) const;
  bool fully_encoded() const;
  std::span<const std::uint32_t> codes(std::size_t attribute) const;
  std::span<const double> raw(std::size_t attribute) const;
  const Column& column(std::size_t attribute) const { return columns_.at(attribute); }
  /// Label of an encoded cell.
  const std::string& label(std::size_t row, std::size_t attribute) const;

 private:
  AttributeSchema schema_;
  std::vector<Column> columns_;
  std::vector<std::vector<std::string>> labels_;
  std::size_t rows_ = 0;
};

/// Reads a comma-separated file whose header names the schema's attributes in any order.
/// Throws DataError for unknown/missing columns, unparseable or empty cells and
/// out-of-vocabulary values (the message names the 1-based data row).
TabularDataset load_csv(const std::filesystem::path& path, const AttributeSchema& schema);
TabularDataset parse_csv(std::string_view text, const AttributeSchema& schema);

/// Replaces raw values of binned attributes by their bin index; identity on encoded columns.
TabularDataset apply_binning(const TabularDataset& ds);

/// Half-open range of binary columns belonging to one original attribute.
struct ColumnRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t col) const { return col >= begin && col < end; }
  bool operator==(const ColumnRange&) const = default;
};

/// Links binary columns to (attribute, value). Columns follow schema order, then vocabulary order.
class GroupMap {
 public:
  GroupMap() = default;
  explicit GroupMap(const AttributeSchema& schema);

  std::size_t width() const { return column_attribute_.size(); }
  std::size_t attribute_count() const { return ranges_.size(); }
  std::size_t attribute_of(std::size_t column) const { return column_attribute_.at(column); }
  std::size_t value_of(std::size_t column) const { return column - ranges_.at(attribute_of(column)).begin; }
  const ColumnRange& range(std::size_t attribute) const { return ranges_.at(attribute); }
  const std::string& attribute_name(std::size_t attribute) const { return names_.at(attribute); }
  const std::string& value_label(std::size_t column) const { return labels_.at(column); }
  /// "attr=value"
  std::string column_name(std::size_t column) const;
  bool same_attribute(std::size_t a, std::size_t b) const { return attribute_of(a) == attribute_of(b); }

  bool operator==(const GroupMap&) const = default;

 private:
  std::vector<std::size_t> column_attribute_;
  std::vector<ColumnRange> ranges_;
  std::vector<std::string> names_;
  std::vector<std::string> labels_;
};

/// Dummy-coded 0/1 matrix, one bit-packed vector per column.
class BinaryDataset {
 public:
  BinaryDataset(GroupMap groups, std::size_t rows);

  const GroupMap& groups() const { return groups_; }
  std::size_t rows() const { return rows_; }
  std::size_t width() const { return groups_.width(); }
  std::size_t words_per_column() const { return words_; }

  bool get(std::size_t row, std::size_t column) const {
    return (bits_[column * words_ + row / 64] >> (row % 64)) & 1U;
  }
  void set(std::size_t row, std::size_t column, bool value) {
    auto& w = bits_[column * words_ + row / 64];
    const std::uint64_t mask = std::uint64_t{1} << (row % 64);
    w = value ? (w | mask) : (w & ~mask);
  }
  std::span<const std::uint64_t> column_words(std::size_t column) const {
    return {bits_.data() + column * words_, words_};
  }
  std::span<std::uint64_t> column_words(std::size_t column) { return {bits_.data() + column * words_, words_}; }

  std::size_t ones(std::size_t column) const;
  bool operator==(const BinaryDataset&) const = default;

 private:
  GroupMap groups_;
  std::size_t rows_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
};

/// Requires every attribute encoded (apply_binning first); throws DataError otherwise.
BinaryDataset dummy_encode(const TabularDataset& ds);

struct OneWayCounts {
  std::uint64_t zeros = 0;
  std::uint64_t ones = 0;
  bool operator==(const OneWayCounts&) const = default;
};

OneWayCounts one_way_counts(const BinaryDataset& bds, std::size_t column);

struct PairwiseCounts {
  std::uint64_t n11 = 0;
  std::uint64_t n10 = 0;
  std::uint64_t n01 = 0;
  std::uint64_t n00 = 0;
  std::uint64_t total() const { return n11 + n10 + n01 + n00; }
  bool operator==(const PairwiseCounts&) const = default;
};

/// 2x2 tables for every cross-attribute binary pair (i, j). Same-attribute pairs are
/// structural zeroes and are not stored.
class PairwiseTable {
 public:
  explicit PairwiseTable(const GroupMap& groups);

  bool has(std::size_t i, std::size_t j) const;
  /// Counts for (i, j), oriented so that "1x" refers to column i. Throws for same-attribute pairs.
  PairwiseCounts at(std::size_t i, std::size_t j) const;
  void store(std::size_t i, std::size_t j, const PairwiseCounts& counts);
  std::size_t width() const { return width_; }
  /// Number of stored unordered pairs.
  std::size_t pair_count() const;

 private:
  std::vector<std::size_t> attribute_;
  std::size_t width_;
  std::vector<PairwiseCounts> cells_;  // upper triangle, row-major d x d
};

/// O(m^2 n + d^2) pairwise counts from per-attribute-pair value tallies.
PairwiseTable pairwise_counts_fast(const TabularDataset& ds, const BinaryDataset& bds, unsigned threads = 1);

/// Debug output of the binary matrix: header "attr=value", one 0/1 row per record.
void write_binary_csv(const BinaryDataset& bds, const std::filesystem::path& path);
std::string binary_csv_string(const BinaryDataset& bds);
/// Reads a binary CSV, checking its header against `groups`. Throws DataError on mismatch.
BinaryDataset read_binary_csv(const std::filesystem::path& path, const GroupMap& groups);
BinaryDataset parse_binary_csv(std::string_view text, const GroupMap& groups);

/// Writes an encoded dataset with value labels.
void write_tabular_csv(const TabularDataset& ds, const std::filesystem::path& path);

}  // namespace dpcopula
