#pragma once

#include "fairmix/io.hpp"
#include "fairmix/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fairmix {

enum class ColumnKind { numerical, categorical, sensitive, label, ignored };

std::string to_string(ColumnKind kind);
ColumnKind parse_column_kind(const std::string& text);

// How a sensitive column becomes 0/1 columns of S.
enum class SensitiveEncoding {
  privileged_level,  // one column: 1 iff value == privileged level
  indicators,        // one column per level except the reference (first) level
  german_age,        // one column: 1 iff 25 <= age <= 60
};

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::ignored;
  std::vector<std::string> levels;        // declared level set; inferred when empty
  std::optional<std::string> privileged;  // sensitive only
  std::optional<std::string> positive;    // label only
  bool german_age = false;                // sensitive only
};

/// Typed column list plus missing-value tokens.
///
/// Text form (key-value):
///   format_version = 1
///   missing = ?,NA
///   column.<name> = <kind>[; levels=a|b|c][; privileged=x][; positive=x][; transform=german_age]
/// Columns keep file order.
struct Schema {
  std::vector<ColumnSchema> columns;
  std::vector<std::string> missing_tokens{"", "?", "NA"};

  void validate() const;
  const ColumnSchema& label() const;
  std::vector<const ColumnSchema*> of_kind(ColumnKind kind) const;
  bool is_missing(std::string_view cell) const;

  static Schema parse(std::string_view text, const std::string& source);
  static Schema load(const std::filesystem::path& path);
  std::string to_string() const;
};

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t dropped_rows = 0;  // rows removed for missing values

  std::size_t rows_count() const { return rows.size(); }
  std::size_t column(const std::string& name) const;  // DataError if absent
};

/// Reads a comma-separated file with a header row. Rows with a missing value
/// in any column the schema uses are dropped and counted.
RawTable load_csv(const std::filesystem::path& path, const Schema& schema);
RawTable parse_csv(std::string_view text, const Schema& schema, const std::string& source = "<csv>");

struct NumericColumnStats {
  std::string name;
  double mean = 0.0;
  double stdev = 1.0;  // population
};

struct CategoricalBlock {
  std::string name;
  std::vector<std::string> levels;
  Index offset = 0;  // first column in X_cat
};

struct SensitiveBlock {
  std::string name;
  SensitiveEncoding encoding = SensitiveEncoding::privileged_level;
  std::string privileged;           // privileged_level
  std::vector<std::string> levels;  // indicators: all levels, levels[0] is the reference
  Index offset = 0;                 // first column in S
  Index width = 1;

  std::vector<std::string> column_names() const;
};

/// Everything needed to re-encode raw rows identically.
struct LevelMap {
  std::string label_column;
  std::string label_positive;
  std::vector<NumericColumnStats> numeric;
  std::vector<CategoricalBlock> categorical;
  std::vector<SensitiveBlock> sensitive;

  Index numeric_width() const { return static_cast<Index>(numeric.size()); }
  Index categorical_width() const;
  Index sensitive_width() const;
  const SensitiveBlock& sensitive_block(const std::string& name) const;  // ConfigError if absent

  std::string to_string() const;
  static LevelMap parse(std::string_view text, const std::string& source);
  void save(const std::filesystem::path& path) const;
  static LevelMap load(const std::filesystem::path& path);
};

struct EncodedDataset {
  Matrix x_num;  // n x d1, standardized
  Matrix x_cat;  // n x d2, one indicator per level
  Matrix s;      // n x s, 0/1
  Vector y;      // n, 0/1
  LevelMap levels;

  Index n() const { return x_num.rows(); }
  Index d1() const { return x_num.cols(); }
  Index d2() const { return x_cat.cols(); }
  Index s_width() const { return s.cols(); }
};

/// Infers the level map from `raw` (full-data standardization statistics)
/// and encodes it.
EncodedDataset encode(const RawTable& raw, const Schema& schema);

/// Encodes `raw` with a previously persisted level map.
EncodedDataset encode_with(const RawTable& raw, const LevelMap& levels);

/// 1 (privileged) iff 25 <= age <= 60.
int discretize_german_age(double age);

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;

  std::string to_string() const;
  static SplitIndices parse(std::string_view text, const std::string& source);
  void save(const std::filesystem::path& path) const;
  static SplitIndices load(const std::filesystem::path& path);
};

/// Per-class shuffle then proportional allocation; each class contributes
/// round(fraction * class_size) rows to the test side.
SplitIndices stratified_split(const Vector& y, double test_fraction, std::uint64_t seed);

/// Rows of `m` listed in `rows`, in order.
Matrix take_rows(const Matrix& m, const std::vector<Index>& rows);
Vector take_rows(const Vector& v, const std::vector<Index>& rows);

}  // namespace fairmix
