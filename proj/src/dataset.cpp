#include "fairmix/dataset.hpp"

#include "fairmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fairmix {

namespace {

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(sep);
    out += items[i];
  }
  return out;
}

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.emplace_back(trim(cell));
  return cells;
}

std::size_t level_index(const std::vector<std::string>& levels, const std::string& value, const std::string& column) {
  const auto it = std::find(levels.begin(), levels.end(), value);
  if (it == levels.end()) throw DataError("column '" + column + "': unknown level '" + value + "'");
  return static_cast<std::size_t>(it - levels.begin());
}

std::vector<std::string> distinct_sorted(const RawTable& raw, std::size_t col) {
  std::set<std::string> seen;
  for (const auto& row : raw.rows) seen.insert(row[col]);
  return {seen.begin(), seen.end()};
}

std::vector<std::string> resolve_levels(const RawTable& raw, const ColumnSchema& c) {
  const std::size_t col = raw.column(c.name);
  if (c.levels.empty()) return distinct_sorted(raw, col);
  for (const auto& row : raw.rows) level_index(c.levels, row[col], c.name);
  return c.levels;
}

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numerical: return "numerical";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::sensitive: return "sensitive";
    case ColumnKind::label: return "label";
    case ColumnKind::ignored: return "ignored";
  }
  return "ignored";
}

ColumnKind parse_column_kind(const std::string& text) {
  if (text == "numerical") return ColumnKind::numerical;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "sensitive") return ColumnKind::sensitive;
  if (text == "label") return ColumnKind::label;
  if (text == "ignored") return ColumnKind::ignored;
  throw ConfigError("unknown column kind '" + text + "'");
}

// ---------------------------------------------------------------------------
// Schema

void Schema::validate() const {
  std::set<std::string> names;
  int labels = 0;
  int numeric = 0;
  int categorical = 0;
  for (const auto& c : columns) {
    if (!names.insert(c.name).second) throw ConfigError("schema: column '" + c.name + "' declared twice");
    switch (c.kind) {
      case ColumnKind::label:
        ++labels;
        if (!c.positive) throw ConfigError("schema: label column '" + c.name + "' needs positive=<level>");
        break;
      case ColumnKind::numerical: ++numeric; break;
      case ColumnKind::categorical: ++categorical; break;
      default: break;
    }
    if (c.kind != ColumnKind::sensitive && (c.privileged || c.german_age)) {
      throw ConfigError("schema: privileged/transform only apply to sensitive columns ('" + c.name + "')");
    }
  }
  if (labels != 1) throw ConfigError("schema: exactly one label column required, found " + std::to_string(labels));
  if (numeric < 1) throw ConfigError("schema: at least one numerical column required");
  if (categorical < 1) throw ConfigError("schema: at least one categorical column required");
}

const ColumnSchema& Schema::label() const {
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::label) return c;
  }
  throw ConfigError("schema: no label column");
}

std::vector<const ColumnSchema*> Schema::of_kind(ColumnKind kind) const {
  std::vector<const ColumnSchema*> out;
  for (const auto& c : columns) {
    if (c.kind == kind) out.push_back(&c);
  }
  return out;
}

bool Schema::is_missing(std::string_view cell) const {
  return std::find(missing_tokens.begin(), missing_tokens.end(), cell) != missing_tokens.end();
}

Schema Schema::parse(std::string_view text, const std::string& source) {
  const KeyValues kv = KeyValues::parse(text, source);
  Schema schema;
  if (const auto version = kv.find("format_version"); version && *version != std::to_string(kFormatVersion)) {
    throw ConfigError(source + ": unsupported schema format_version " + *version);
  }
  if (const auto missing = kv.find("missing")) {
    schema.missing_tokens = {""};
    for (const auto& tok : split(*missing, ',')) {
      const std::string t(trim(tok));
      if (!t.empty()) schema.missing_tokens.push_back(t);
    }
  }
  for (const auto& [key, value] : kv.entries()) {
    if (key == "format_version" || key == "missing") continue;
    if (key.rfind("column.", 0) != 0) throw ConfigError(source + ": unknown key '" + key + "'");
    ColumnSchema c;
    c.name = key.substr(7);
    const auto parts = split(value, ';');
    c.kind = parse_column_kind(std::string(trim(parts[0])));
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const std::string_view opt = trim(parts[i]);
      if (opt.empty()) continue;
      const auto eq = opt.find('=');
      if (eq == std::string_view::npos) throw ConfigError(source + ": option '" + std::string(opt) + "' needs '='");
      const std::string name(trim(opt.substr(0, eq)));
      const std::string val(trim(opt.substr(eq + 1)));
      if (name == "levels") {
        c.levels = split(val, '|');
        for (auto& l : c.levels) l = std::string(trim(l));
      } else if (name == "privileged") {
        c.privileged = val;
      } else if (name == "positive") {
        c.positive = val;
      } else if (name == "transform" && val == "german_age") {
        c.german_age = true;
      } else {
        throw ConfigError(source + ": unknown option '" + name + "=" + val + "' for column '" + c.name + "'");
      }
    }
    schema.columns.push_back(std::move(c));
  }
  schema.validate();
  return schema;
}

Schema Schema::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("schema file not found: " + path.string());
  return parse(read_file(path), path.string());
}

std::string Schema::to_string() const {
  std::string out = "format_version = " + std::to_string(kFormatVersion) + "\n";
  std::vector<std::string> tokens;
  for (const auto& t : missing_tokens) {
    if (!t.empty()) tokens.push_back(t);
  }
  out += "missing = " + join(tokens, ',') + "\n";
  for (const auto& c : columns) {
    out += "column." + c.name + " = " + fairmix::to_string(c.kind);
    if (!c.levels.empty()) out += "; levels=" + join(c.levels, '|');
    if (c.privileged) out += "; privileged=" + *c.privileged;
    if (c.positive) out += "; positive=" + *c.positive;
    if (c.german_age) out += "; transform=german_age";
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::size_t RawTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("column '" + name + "' not present in table header");
  return static_cast<std::size_t>(it - header.begin());
}

RawTable parse_csv(std::string_view text, const Schema& schema, const std::string& source) {
  RawTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  std::vector<std::size_t> used;

  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      if (pos > text.size()) break;
      continue;
    }

    auto cells = split_record(line);
    if (!have_header) {
      table.header = std::move(cells);
      std::set<std::string> unique(table.header.begin(), table.header.end());
      if (unique.size() != table.header.size()) throw DataError(source + ":1: duplicate header names");
      for (const auto& c : schema.columns) {
        const auto it = std::find(table.header.begin(), table.header.end(), c.name);
        if (it == table.header.end()) throw DataError(source + ": schema column '" + c.name + "' absent from header");
        if (c.kind != ColumnKind::ignored) used.push_back(static_cast<std::size_t>(it - table.header.begin()));
      }
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(source + ": line " + std::to_string(line_no) + ": ragged row with " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(table.header.size()));
    }
    const bool missing =
        std::any_of(used.begin(), used.end(), [&](std::size_t col) { return schema.is_missing(cells[col]); });
    if (missing) {
      ++table.dropped_rows;
      continue;
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw DataError(source + ": missing header row");
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const Schema& schema) {
  if (!std::filesystem::exists(path)) throw ConfigError("data file not found: " + path.string());
  return parse_csv(read_file(path), schema, path.string());
}

// ---------------------------------------------------------------------------
// Level map

std::vector<std::string> SensitiveBlock::column_names() const {
  if (encoding != SensitiveEncoding::indicators) return {name};
  std::vector<std::string> out;
  for (std::size_t i = 1; i < levels.size(); ++i) out.push_back(name + "=" + levels[i]);
  return out;
}

Index LevelMap::categorical_width() const {
  Index w = 0;
  for (const auto& b : categorical) w += static_cast<Index>(b.levels.size());
  return w;
}

Index LevelMap::sensitive_width() const {
  Index w = 0;
  for (const auto& b : sensitive) w += b.width;
  return w;
}

const SensitiveBlock& LevelMap::sensitive_block(const std::string& name) const {
  for (const auto& b : sensitive) {
    if (b.name == name) return b;
  }
  throw ConfigError("unknown sensitive attribute '" + name + "'");
}

std::string LevelMap::to_string() const {
  KeyValues kv;
  kv.set("format_version", kFormatVersion);
  kv.set("label.column", label_column);
  kv.set("label.positive", label_positive);
  std::vector<std::string> names;
  for (const auto& c : numeric) names.push_back(c.name);
  kv.set("numeric.columns", join(names, ','));
  for (const auto& c : numeric) {
    kv.set("numeric." + c.name + ".mean", c.mean);
    kv.set("numeric." + c.name + ".stdev", c.stdev);
  }
  names.clear();
  for (const auto& b : categorical) names.push_back(b.name);
  kv.set("categorical.columns", join(names, ','));
  for (const auto& b : categorical) kv.set("categorical." + b.name + ".levels", join(b.levels, '|'));
  names.clear();
  for (const auto& b : sensitive) names.push_back(b.name);
  kv.set("sensitive.columns", join(names, ','));
  for (const auto& b : sensitive) {
    const std::string prefix = "sensitive." + b.name;
    switch (b.encoding) {
      case SensitiveEncoding::privileged_level:
        kv.set(prefix + ".encoding", std::string("privileged_level"));
        kv.set(prefix + ".privileged", b.privileged);
        break;
      case SensitiveEncoding::indicators:
        kv.set(prefix + ".encoding", std::string("indicators"));
        kv.set(prefix + ".levels", join(b.levels, '|'));
        break;
      case SensitiveEncoding::german_age: kv.set(prefix + ".encoding", std::string("german_age")); break;
    }
  }
  return kv.to_string();
}

LevelMap LevelMap::parse(std::string_view text, const std::string& source) {
  const KeyValues kv = KeyValues::parse(text, source);
  if (kv.get("format_version") != std::to_string(kFormatVersion)) {
    throw DataError(source + ": unsupported level map format_version");
  }
  const auto names = [&](const std::string& key) {
    std::vector<std::string> out;
    const std::string v = kv.get(key);
    if (!v.empty()) out = split(v, ',');
    return out;
  };
  LevelMap map;
  map.label_column = kv.get("label.column");
  map.label_positive = kv.get("label.positive");
  for (const auto& name : names("numeric.columns")) {
    map.numeric.push_back({name, kv.get_double("numeric." + name + ".mean"), kv.get_double("numeric." + name + ".stdev")});
  }
  Index offset = 0;
  for (const auto& name : names("categorical.columns")) {
    CategoricalBlock b{name, split(kv.get("categorical." + name + ".levels"), '|'), offset};
    offset += static_cast<Index>(b.levels.size());
    map.categorical.push_back(std::move(b));
  }
  offset = 0;
  for (const auto& name : names("sensitive.columns")) {
    SensitiveBlock b;
    b.name = name;
    const std::string enc = kv.get("sensitive." + name + ".encoding");
    if (enc == "privileged_level") {
      b.encoding = SensitiveEncoding::privileged_level;
      b.privileged = kv.get("sensitive." + name + ".privileged");
    } else if (enc == "indicators") {
      b.encoding = SensitiveEncoding::indicators;
      b.levels = split(kv.get("sensitive." + name + ".levels"), '|');
      b.width = static_cast<Index>(b.levels.size()) - 1;
    } else if (enc == "german_age") {
      b.encoding = SensitiveEncoding::german_age;
    } else {
      throw DataError(source + ": unknown sensitive encoding '" + enc + "'");
    }
    b.offset = offset;
    offset += b.width;
    map.sensitive.push_back(std::move(b));
  }
  return map;
}

void LevelMap::save(const std::filesystem::path& path) const { write_file(path, to_string()); }

LevelMap LevelMap::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("level map not found: " + path.string());
  return parse(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Encoding

int discretize_german_age(double age) {
  if (!(age > 0.0)) throw std::invalid_argument("age must be positive, got " + format_double(age));
  return (age >= 25.0 && age <= 60.0) ? 1 : 0;
}

EncodedDataset encode(const RawTable& raw, const Schema& schema) {
  schema.validate();
  const std::size_t n = raw.rows_count();
  if (n < 2) throw DataError("encode: need at least 2 rows, have " + std::to_string(n));

  LevelMap map;
  const ColumnSchema& label = schema.label();
  map.label_column = label.name;
  map.label_positive = *label.positive;
  {
    const auto values = distinct_sorted(raw, raw.column(label.name));
    if (values.size() > 2) throw DataError("label column '" + label.name + "' has more than two distinct values");
  }

  for (const ColumnSchema* c : schema.of_kind(ColumnKind::numerical)) {
    const std::size_t col = raw.column(c->name);
    double sum = 0.0;
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = parse_double(raw.rows[i][col], "column '" + c->name + "', row " + std::to_string(i + 1));
      sum += values[i];
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double stdev = std::sqrt(ss / static_cast<double>(n));
    if (!(stdev > 0.0)) throw DataError("numerical column '" + c->name + "' is constant (stdev = 0)");
    map.numeric.push_back({c->name, mean, stdev});
  }

  Index offset = 0;
  for (const ColumnSchema* c : schema.of_kind(ColumnKind::categorical)) {
    CategoricalBlock b{c->name, resolve_levels(raw, *c), offset};
    offset += static_cast<Index>(b.levels.size());
    map.categorical.push_back(std::move(b));
  }

  offset = 0;
  for (const ColumnSchema* c : schema.of_kind(ColumnKind::sensitive)) {
    SensitiveBlock b;
    b.name = c->name;
    if (c->german_age) {
      b.encoding = SensitiveEncoding::german_age;
    } else if (c->privileged) {
      b.encoding = SensitiveEncoding::privileged_level;
      b.privileged = *c->privileged;
    } else {
      b.encoding = SensitiveEncoding::indicators;
      b.levels = resolve_levels(raw, *c);
      if (b.levels.size() < 2) throw DataError("sensitive column '" + c->name + "' has a single level");
      b.width = static_cast<Index>(b.levels.size()) - 1;
    }
    b.offset = offset;
    offset += b.width;
    map.sensitive.push_back(std::move(b));
  }

  return encode_with(raw, map);
}

EncodedDataset encode_with(const RawTable& raw, const LevelMap& levels) {
  const Index n = static_cast<Index>(raw.rows_count());
  EncodedDataset ds;
  ds.levels = levels;
  ds.x_num.resize(n, levels.numeric_width());
  ds.x_cat = Matrix::Zero(n, levels.categorical_width());
  ds.s = Matrix::Zero(n, levels.sensitive_width());
  ds.y.resize(n);

  const std::size_t label_col = raw.column(levels.label_column);
  for (Index i = 0; i < n; ++i) ds.y(i) = raw.rows[static_cast<std::size_t>(i)][label_col] == levels.label_positive ? 1.0 : 0.0;

  for (Index j = 0; j < levels.numeric_width(); ++j) {
    const auto& stats = levels.numeric[static_cast<std::size_t>(j)];
    const std::size_t col = raw.column(stats.name);
    for (Index i = 0; i < n; ++i) {
      const double v = parse_double(raw.rows[static_cast<std::size_t>(i)][col],
                                    "column '" + stats.name + "', row " + std::to_string(i + 1));
      ds.x_num(i, j) = (v - stats.mean) / stats.stdev;
    }
  }

  for (const auto& b : levels.categorical) {
    const std::size_t col = raw.column(b.name);
    for (Index i = 0; i < n; ++i) {
      const auto level = level_index(b.levels, raw.rows[static_cast<std::size_t>(i)][col], b.name);
      ds.x_cat(i, b.offset + static_cast<Index>(level)) = 1.0;
    }
  }

  for (const auto& b : levels.sensitive) {
    const std::size_t col = raw.column(b.name);
    for (Index i = 0; i < n; ++i) {
      const std::string& cell = raw.rows[static_cast<std::size_t>(i)][col];
      switch (b.encoding) {
        case SensitiveEncoding::privileged_level: ds.s(i, b.offset) = cell == b.privileged ? 1.0 : 0.0; break;
        case SensitiveEncoding::german_age:
          ds.s(i, b.offset) = discretize_german_age(parse_double(cell, "column '" + b.name + "', row " + std::to_string(i + 1)));
          break;
        case SensitiveEncoding::indicators: {
          const auto level = level_index(b.levels, cell, b.name);
          if (level > 0) ds.s(i, b.offset + static_cast<Index>(level) - 1) = 1.0;
          break;
        }
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Split

namespace {

std::string join_indices(const std::vector<Index>& idx) {
  std::string out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(idx[i]);
  }
  return out;
}

std::vector<Index> parse_indices(const std::string& text, const std::string& context) {
  std::vector<Index> out;
  for (const auto& tok : split(text, ' ')) {
    if (trim(tok).empty()) continue;
    out.push_back(static_cast<Index>(parse_integer(tok, context)));
  }
  return out;
}

}  // namespace

std::string SplitIndices::to_string() const {
  KeyValues kv;
  kv.set("format_version", kFormatVersion);
  kv.set("seed", std::to_string(seed));
  kv.set("test_fraction", test_fraction);
  kv.set("train", join_indices(train));
  kv.set("test", join_indices(test));
  return kv.to_string();
}

SplitIndices SplitIndices::parse(std::string_view text, const std::string& source) {
  const KeyValues kv = KeyValues::parse(text, source);
  if (kv.get("format_version") != std::to_string(kFormatVersion)) {
    throw DataError(source + ": unsupported split format_version");
  }
  SplitIndices s;
  s.seed = std::stoull(kv.get("seed"));
  s.test_fraction = kv.get_double("test_fraction");
  s.train = parse_indices(kv.get("train"), source + ": train");
  s.test = parse_indices(kv.get("test"), source + ": test");
  return s;
}

void SplitIndices::save(const std::filesystem::path& path) const { write_file(path, to_string()); }

SplitIndices SplitIndices::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("split file not found: " + path.string());
  return parse(read_file(path), path.string());
}

SplitIndices stratified_split(const Vector& y, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("stratified_split: test_fraction must lie in (0, 1)");
  }
  std::vector<Index> by_class[2];
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) {
      by_class[0].push_back(i);
    } else if (y(i) == 1.0) {
      by_class[1].push_back(i);
    } else {
      throw DataError("stratified_split: labels must be 0/1");
    }
  }
  SplitIndices out;
  out.seed = seed;
  out.test_fraction = test_fraction;
  for (int cls = 0; cls < 2; ++cls) {
    auto& members = by_class[cls];
    if (members.size() < 2) {
      throw DataError("stratified_split: class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                      " rows; need at least 2");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(members);
    const auto size = static_cast<long long>(members.size());
    long long n_test = std::llround(test_fraction * static_cast<double>(size));
    n_test = std::clamp(n_test, 1LL, size - 1);
    out.test.insert(out.test.end(), members.begin(), members.begin() + n_test);
    out.train.insert(out.train.end(), members.begin() + n_test, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector take_rows(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

}  // namespace fairmix
