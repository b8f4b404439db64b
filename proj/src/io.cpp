#include "fairmix/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace fairmix {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw DataError(context + ": cannot parse '" + std::string(text) + "' as a real number");
  }
  return value;
}

long long parse_integer(std::string_view text, const std::string& context) {
  text = trim(text);
  long long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw DataError(context + ": cannot parse '" + std::string(text) + "' as an integer");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      return parts;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line.push_back(' ');
      line += format_double(m(i, j));
    }
    line.push_back('\n');
    out << line;
  }
}

Matrix read_matrix(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing matrix header");
  const auto header = split(trim(line), ' ');
  if (header.size() != 2) throw DataError(source + ": matrix header must be 'rows cols'");
  const long long rows = parse_integer(header[0], source + ":1");
  const long long cols = parse_integer(header[1], source + ":1");
  if (rows < 0 || cols < 0) throw DataError(source + ": negative matrix dimensions");

  Matrix m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw DataError(source + ": expected " + std::to_string(rows) + " rows");
    const std::string ctx = source + ":" + std::to_string(i + 2);
    std::string_view rest = trim(line);
    long long j = 0;
    while (!rest.empty()) {
      const auto pos = rest.find(' ');
      const auto token = rest.substr(0, pos);
      if (j >= cols) throw DataError(ctx + ": too many values");
      m(i, j++) = parse_double(token, ctx);
      rest = pos == std::string_view::npos ? std::string_view{} : trim(rest.substr(pos + 1));
    }
    if (j != cols) throw DataError(ctx + ": expected " + std::to_string(cols) + " values, found " + std::to_string(j));
  }
  return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ostringstream out;
  write_matrix(out, m);
  write_file(path, out.str());
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open matrix file " + path.string());
  return read_matrix(in, path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KeyValues::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValues::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

bool KeyValues::contains(const std::string& key) const { return find(key).has_value(); }

std::optional<std::string> KeyValues::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const std::string& KeyValues::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw ConfigError(source + ": missing key '" + key + "'");
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double KeyValues::get_double(const std::string& key) const {
  try {
    return parse_double(get(key), source + ": " + key);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

double KeyValues::get_double_or(const std::string& key, double fallback) const {
  return contains(key) ? get_double(key) : fallback;
}

long long KeyValues::get_int(const std::string& key) const {
  try {
    return parse_integer(get(key), source + ": " + key);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

long long KeyValues::get_int_or(const std::string& key, long long fallback) const {
  return contains(key) ? get_int(key) : fallback;
}

bool KeyValues::get_bool_or(const std::string& key, bool fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(source + ": key '" + key + "' expects true/false, got '" + *v + "'");
}

std::string KeyValues::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

KeyValues KeyValues::parse(std::string_view text, const std::string& source) {
  KeyValues kv;
  kv.source = source;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    if (kv.contains(key)) throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv.entries_.emplace_back(key, value);
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string());
  return parse(read_file(path), path.string());
}

void KeyValues::save(const std::filesystem::path& path) const { write_file(path, to_string()); }

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a(read_file(path))); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace fairmix
