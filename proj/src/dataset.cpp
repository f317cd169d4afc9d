#include "dpcopula/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dpcopula/errors.hpp"
#include "dpcopula/parallel.hpp"

namespace dpcopula {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF records.
class CsvReader {
 public:
  explicit CsvReader(std::string_view text) : text_(text) {}

  bool next(std::vector<std::string>& fields) {
    fields.clear();
    while (pos_ < text_.size() && (text_[pos_] == '\n' || text_[pos_] == '\r')) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    ++line_;
    std::string field;
    bool quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field.push_back('"');
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        break;
      } else {
        field.push_back(c);
      }
    }
    if (quoted) throw DataError("unterminated quoted field near line " + std::to_string(line_));
    fields.push_back(std::move(field));
    return true;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::categorical:
      return "categorical";
    case AttributeKind::ordinal_discrete:
      return "ordinal-discrete";
    case AttributeKind::continuous:
      return "continuous";
  }
  return "?";
}

AttributeKind parse_attribute_kind(std::string_view text) {
  if (text == "categorical") return AttributeKind::categorical;
  if (text == "ordinal-discrete") return AttributeKind::ordinal_discrete;
  if (text == "continuous") return AttributeKind::continuous;
  throw ConfigError("unknown attribute kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// BinRule

std::size_t BinRule::bin_of(double value) const {
  if (closure == BinClosure::left) {
    // number of edges <= value
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
  }
  // number of edges < value
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
}

std::vector<std::string> BinRule::labels() const {
  std::vector<std::string> out;
  out.reserve(bin_count());
  if (closure == BinClosure::left) {
    double lo = lower;
    for (double e : edges) {
      out.push_back("[" + format_number(lo) + "," + format_number(e) + ")");
      lo = e;
    }
    out.push_back("[" + format_number(lo) + ",∞)");
  } else {
    std::string lo = "-∞";
    for (double e : edges) {
      out.push_back("(" + lo + "," + format_number(e) + "]");
      lo = format_number(e);
    }
    out.push_back("(" + lo + "," + format_number(upper) + "]");
  }
  return out;
}

void BinRule::validate(std::string_view attribute) const {
  const std::string who = "attribute '" + std::string(attribute) + "': ";
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw ConfigError(who + "binning needs finite lower < upper");
  }
  double prev = lower;
  for (double e : edges) {
    if (!std::isfinite(e) || !(e > prev)) throw ConfigError(who + "bin edges must be strictly increasing inside (lower, upper)");
    prev = e;
  }
  if (!edges.empty() && !(edges.back() < upper)) {
    throw ConfigError(who + "bin edges must be strictly increasing inside (lower, upper)");
  }
}

bool operator==(const BinRule& a, const BinRule& b) {
  return a.lower == b.lower && a.upper == b.upper && a.edges == b.edges && a.closure == b.closure;
}

bool operator==(const AttributeSpec& a, const AttributeSpec& b) {
  return a.name == b.name && a.kind == b.kind && a.vocabulary == b.vocabulary && a.binning == b.binning;
}

std::vector<std::string> AttributeSpec::encoded_vocabulary() const {
  return is_binned() ? binning->labels() : vocabulary;
}

// ---------------------------------------------------------------------------
// AttributeSchema

AttributeSchema::AttributeSchema(std::vector<AttributeSpec> attributes) : attributes_(std::move(attributes)) {
  if (attributes_.empty()) throw ConfigError("schema declares no attributes");
  std::unordered_set<std::string> names;
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw ConfigError("attribute with empty name");
    if (!names.insert(a.name).second) throw ConfigError("duplicate attribute '" + a.name + "'");
    if (a.is_binned()) {
      if (a.kind == AttributeKind::categorical) {
        throw ConfigError("attribute '" + a.name + "': categorical attributes cannot be binned");
      }
      a.binning->validate(a.name);
    } else {
      if (a.kind == AttributeKind::continuous) {
        throw ConfigError("attribute '" + a.name + "': continuous attributes need a binning rule");
      }
      if (a.vocabulary.empty()) throw ConfigError("attribute '" + a.name + "': empty vocabulary");
      std::unordered_set<std::string> seen;
      for (const auto& v : a.vocabulary) {
        if (!seen.insert(v).second) {
          throw ConfigError("attribute '" + a.name + "': duplicate vocabulary label '" + v + "'");
        }
      }
    }
  }
}

std::optional<std::size_t> AttributeSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t AttributeSchema::binary_width() const {
  std::size_t d = 0;
  for (const auto& a : attributes_) d += a.encoded_size();
  return d;
}

// ---------------------------------------------------------------------------
// TabularDataset

TabularDataset::TabularDataset(AttributeSchema schema, std::vector<Column> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  if (columns_.size() != schema_.size()) throw DataError("column count does not match schema");
  labels_.reserve(schema_.size());
  for (std::size_t a = 0; a < schema_.size(); ++a) {
    const auto& spec = schema_.attribute(a);
    const std::size_t len = std::visit([](const auto& c) { return c.size(); }, columns_[a]);
    if (a == 0) {
      rows_ = len;
    } else if (len != rows_) {
      throw DataError("ragged columns in dataset");
    }
    if (std::holds_alternative<RawColumn>(columns_[a]) && !spec.is_binned()) {
      throw DataError("attribute '" + spec.name + "' has raw values but no binning rule");
    }
    labels_.push_back(spec.encoded_vocabulary());
    if (const auto* codes = std::get_if<CodeColumn>(&columns_[a])) {
      const std::size_t k = labels_.back().size();
      for (auto c : *codes) {
        if (c >= k) throw DataError("attribute '" + spec.name + "': code out of range");
      }
    }
  }
  if (rows_ == 0) throw DataError("dataset has no rows");
}

bool TabularDataset::is_encoded(std::size_t attribute) const {
  return std::holds_alternative<CodeColumn>(columns_.at(attribute));
}

bool TabularDataset::fully_encoded() const {
  for (std::size_t a = 0; a < columns_.size(); ++a) {
    if (!is_encoded(a)) return false;
  }
  return true;
}

std::span<const std::uint32_t> TabularDataset::codes(std::size_t attribute) const {
  const auto* c = std::get_if<CodeColumn>(&columns_.at(attribute));
  if (!c) throw DataError("attribute '" + schema_.attribute(attribute).name + "' is not binned yet");
  return *c;
}

std::span<const double> TabularDataset::raw(std::size_t attribute) const {
  const auto* c = std::get_if<RawColumn>(&columns_.at(attribute));
  if (!c) throw DataError("attribute '" + schema_.attribute(attribute).name + "' holds no raw values");
  return *c;
}

const std::string& TabularDataset::label(std::size_t row, std::size_t attribute) const {
  return labels_.at(attribute).at(codes(attribute)[row]);
}

// ---------------------------------------------------------------------------
// CSV ingestion

TabularDataset parse_csv(std::string_view text, const AttributeSchema& schema) {
  CsvReader reader(text);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw DataError("CSV input is empty");

  const std::size_t m = schema.size();
  std::vector<std::size_t> attr_of_field(fields.size());
  std::vector<bool> seen(m, false);
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const auto name = trim(fields[f]);
    auto idx = schema.index_of(name);
    if (!idx) throw DataError("unknown column '" + std::string(name) + "'");
    if (seen[*idx]) throw DataError("duplicate column '" + std::string(name) + "'");
    seen[*idx] = true;
    attr_of_field[f] = *idx;
  }
  for (std::size_t a = 0; a < m; ++a) {
    if (!seen[a]) throw DataError("missing column '" + schema.attribute(a).name + "'");
  }

  std::vector<std::unordered_map<std::string, std::uint32_t>> lookup(m);
  std::vector<TabularDataset::Column> columns(m);
  for (std::size_t a = 0; a < m; ++a) {
    const auto& spec = schema.attribute(a);
    if (spec.is_binned()) {
      columns[a] = TabularDataset::RawColumn{};
    } else {
      columns[a] = TabularDataset::CodeColumn{};
      for (std::uint32_t v = 0; v < spec.vocabulary.size(); ++v) lookup[a].emplace(spec.vocabulary[v], v);
    }
  }

  std::size_t row = 0;
  while (reader.next(fields)) {
    ++row;
    if (fields.size() != attr_of_field.size()) {
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(attr_of_field.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const std::size_t a = attr_of_field[f];
      const auto& spec = schema.attribute(a);
      const auto cell = trim(fields[f]);
      if (cell.empty()) {
        throw DataError("row " + std::to_string(row) + ", column '" + spec.name + "': missing value");
      }
      if (spec.is_binned()) {
        double v = 0.0;
        auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
          throw DataError("row " + std::to_string(row) + ", column '" + spec.name + "': cannot parse '" +
                          std::string(cell) + "' as a number");
        }
        std::get<TabularDataset::RawColumn>(columns[a]).push_back(v);
      } else {
        auto it = lookup[a].find(std::string(cell));
        if (it == lookup[a].end()) {
          throw DataError("row " + std::to_string(row) + ", column '" + spec.name + "': value '" +
                          std::string(cell) + "' is not in the vocabulary");
        }
        std::get<TabularDataset::CodeColumn>(columns[a]).push_back(it->second);
      }
    }
  }
  if (row == 0) throw DataError("CSV input has a header but no rows");
  return TabularDataset(schema, std::move(columns));
}

TabularDataset load_csv(const std::filesystem::path& path, const AttributeSchema& schema) {
  return parse_csv(read_file(path), schema);
}

TabularDataset apply_binning(const TabularDataset& ds) {
  std::vector<TabularDataset::Column> columns;
  columns.reserve(ds.attribute_count());
  for (std::size_t a = 0; a < ds.attribute_count(); ++a) {
    if (ds.is_encoded(a)) {
      columns.push_back(ds.column(a));
      continue;
    }
    const auto& rule = *ds.schema().attribute(a).binning;
    TabularDataset::CodeColumn codes;
    codes.reserve(ds.rows());
    for (double v : ds.raw(a)) codes.push_back(static_cast<std::uint32_t>(rule.bin_of(v)));
    columns.push_back(std::move(codes));
  }
  return TabularDataset(ds.schema(), std::move(columns));
}

// ---------------------------------------------------------------------------
// GroupMap / BinaryDataset

GroupMap::GroupMap(const AttributeSchema& schema) {
  std::size_t begin = 0;
  for (std::size_t a = 0; a < schema.size(); ++a) {
    const auto& spec = schema.attribute(a);
    auto vocab = spec.encoded_vocabulary();
    names_.push_back(spec.name);
    ranges_.push_back({begin, begin + vocab.size()});
    for (auto& v : vocab) {
      column_attribute_.push_back(a);
      labels_.push_back(std::move(v));
    }
    begin += ranges_.back().size();
  }
}

std::string GroupMap::column_name(std::size_t column) const {
  return names_.at(attribute_of(column)) + "=" + labels_.at(column);
}

BinaryDataset::BinaryDataset(GroupMap groups, std::size_t rows)
    : groups_(std::move(groups)), rows_(rows), words_((rows + 63) / 64), bits_(groups_.width() * words_, 0) {}

std::size_t BinaryDataset::ones(std::size_t column) const {
  std::size_t total = 0;
  for (auto w : column_words(column)) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

BinaryDataset dummy_encode(const TabularDataset& ds) {
  if (!ds.fully_encoded()) throw DataError("dummy_encode needs binned data; call apply_binning first");
  BinaryDataset out(GroupMap(ds.schema()), ds.rows());
  for (std::size_t a = 0; a < ds.attribute_count(); ++a) {
    const auto begin = out.groups().range(a).begin;
    const auto codes = ds.codes(a);
    for (std::size_t r = 0; r < codes.size(); ++r) out.set(r, begin + codes[r], true);
  }
  return out;
}

OneWayCounts one_way_counts(const BinaryDataset& bds, std::size_t column) {
  if (column >= bds.width()) {
    throw DataError("column index " + std::to_string(column) + " out of range [0, " + std::to_string(bds.width()) + ")");
  }
  const std::uint64_t ones = bds.ones(column);
  return {bds.rows() - ones, ones};
}

// ---------------------------------------------------------------------------
// Pairwise counts

PairwiseTable::PairwiseTable(const GroupMap& groups) : width_(groups.width()), cells_(width_ * width_) {
  attribute_.reserve(width_);
  for (std::size_t c = 0; c < width_; ++c) attribute_.push_back(groups.attribute_of(c));
}

bool PairwiseTable::has(std::size_t i, std::size_t j) const {
  return i < width_ && j < width_ && attribute_[i] != attribute_[j];
}

PairwiseCounts PairwiseTable::at(std::size_t i, std::size_t j) const {
  if (!has(i, j)) throw DataError("no pairwise counts for structural-zero or out-of-range pair");
  if (i < j) return cells_[i * width_ + j];
  const auto& c = cells_[j * width_ + i];
  return {c.n11, c.n01, c.n10, c.n00};
}

void PairwiseTable::store(std::size_t i, std::size_t j, const PairwiseCounts& counts) {
  if (!has(i, j)) throw DataError("cannot store counts for a structural-zero pair");
  if (i < j) {
    cells_[i * width_ + j] = counts;
  } else {
    cells_[j * width_ + i] = {counts.n11, counts.n01, counts.n10, counts.n00};
  }
}

std::size_t PairwiseTable::pair_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < width_; ++i) {
    for (std::size_t j = i + 1; j < width_; ++j) n += attribute_[i] != attribute_[j];
  }
  return n;
}

PairwiseTable pairwise_counts_fast(const TabularDataset& ds, const BinaryDataset& bds, unsigned threads) {
  const GroupMap& groups = bds.groups();
  if (!ds.fully_encoded() || groups != GroupMap(ds.schema()) || ds.rows() != bds.rows()) {
    throw DataError("binary dataset is not the encoding of the given tabular dataset");
  }
  const std::size_t m = ds.attribute_count();
  const std::uint64_t n = ds.rows();

  // one-way histograms per attribute value == hist_B of the matching binary column
  std::vector<std::vector<std::uint64_t>> hist(m);
  for (std::size_t a = 0; a < m; ++a) {
    hist[a].assign(groups.range(a).size(), 0);
    for (auto c : ds.codes(a)) ++hist[a][c];
  }

  std::vector<std::pair<std::size_t, std::size_t>> attr_pairs;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) attr_pairs.emplace_back(a, b);
  }

  PairwiseTable table(groups);
  parallel_for(attr_pairs.size(), threads, [&](std::size_t p) {
    const auto [a, b] = attr_pairs[p];
    const std::size_t kb = groups.range(b).size();
    // value-combination tally hist(a1, a2), keyed by a1 * |A_b| + a2
    std::vector<std::uint64_t> joint(groups.range(a).size() * kb, 0);
    const auto ca = ds.codes(a);
    const auto cb = ds.codes(b);
    for (std::size_t r = 0; r < ca.size(); ++r) ++joint[ca[r] * kb + cb[r]];

    for (std::size_t va = 0; va < hist[a].size(); ++va) {
      for (std::size_t vb = 0; vb < kb; ++vb) {
        PairwiseCounts pc;
        pc.n11 = joint[va * kb + vb];
        pc.n10 = hist[a][va] - pc.n11;
        pc.n01 = hist[b][vb] - pc.n11;
        pc.n00 = n - pc.n11 - pc.n10 - pc.n01;
        // distinct attribute pairs write disjoint cells
        table.store(groups.range(a).begin + va, groups.range(b).begin + vb, pc);
      }
    }
  });
  return table;
}

// ---------------------------------------------------------------------------
// CSV output

std::string binary_csv_string(const BinaryDataset& bds) {
  std::string out;
  const std::size_t d = bds.width();
  out.reserve((bds.rows() + 1) * (2 * d + 1));
  for (std::size_t c = 0; c < d; ++c) {
    if (c) out.push_back(',');
    out += csv_escape(bds.groups().column_name(c));
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < bds.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (c) out.push_back(',');
      out.push_back(bds.get(r, c) ? '1' : '0');
    }
    out.push_back('\n');
  }
  return out;
}

void write_binary_csv(const BinaryDataset& bds, const std::filesystem::path& path) {
  write_text(path, binary_csv_string(bds));
}

BinaryDataset parse_binary_csv(std::string_view text, const GroupMap& groups) {
  CsvReader reader(text);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw DataError("binary CSV is empty");
  if (fields.size() != groups.width()) {
    throw DataError("binary CSV has " + std::to_string(fields.size()) + " columns, schema expects " +
                    std::to_string(groups.width()));
  }
  for (std::size_t c = 0; c < fields.size(); ++c) {
    if (fields[c] != groups.column_name(c)) {
      throw DataError("binary CSV column " + std::to_string(c + 1) + " is '" + fields[c] + "', schema expects '" +
                      groups.column_name(c) + "'");
    }
  }
  std::vector<std::vector<bool>> rows;
  while (reader.next(fields)) {
    if (fields.size() != groups.width()) {
      throw DataError("binary CSV row " + std::to_string(rows.size() + 1) + " has the wrong number of fields");
    }
    std::vector<bool> bits(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c] == "1") {
        bits[c] = true;
      } else if (fields[c] != "0") {
        throw DataError("binary CSV row " + std::to_string(rows.size() + 1) + ": non-binary value '" + fields[c] + "'");
      }
    }
    rows.push_back(std::move(bits));
  }
  if (rows.empty()) throw DataError("binary CSV has no rows");
  BinaryDataset out(groups, rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < groups.width(); ++c) {
      if (rows[r][c]) out.set(r, c, true);
    }
  }
  return out;
}

BinaryDataset read_binary_csv(const std::filesystem::path& path, const GroupMap& groups) {
  return parse_binary_csv(read_file(path), groups);
}

void write_tabular_csv(const TabularDataset& ds, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t a = 0; a < ds.attribute_count(); ++a) {
    if (a) out.push_back(',');
    out += csv_escape(ds.schema().attribute(a).name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t a = 0; a < ds.attribute_count(); ++a) {
      if (a) out.push_back(',');
      out += csv_escape(ds.label(r, a));
    }
    out.push_back('\n');
  }
  write_text(path, out);
}

}  // namespace dpcopula
