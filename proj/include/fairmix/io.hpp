#pragma once

// Plain-text persistence shared by every stage.
//
// Matrix text format:
//   rows cols
//   v00 v01 ... (one row per line, 17 significant digits)
//
// Key-value format: one `key = value` per line, `#` starts a comment, keys
// are unique. Files written by this project begin with `format_version = 1`.

#include "fairmix/types.hpp"

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fairmix {

inline constexpr int kFormatVersion = 1;

void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in, const std::string& source = "<stream>");

void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

/// 17 significant digits; parse_double recovers the identical value.
std::string format_double(double value);
double parse_double(std::string_view text, const std::string& context);
long long parse_integer(std::string_view text, const std::string& context);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Ordered key-value document.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value);
  template <std::integral T>
    requires(!std::same_as<T, bool>)
  void set(const std::string& key, T value) {
    set(key, std::to_string(value));
  }

  bool contains(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // ConfigError if absent
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  static KeyValues parse(std::string_view text, const std::string& source);
  static KeyValues load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::string source;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
std::string file_hash(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace fairmix
