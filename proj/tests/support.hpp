#pragma once

#include "fairmix/rng.hpp"
#include "fairmix/types.hpp"

#include <filesystem>
#include <string>

#include <unistd.h>

namespace fairmix::test {

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline Matrix random_binary(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<double>(rng.below(2));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fairmix_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path source_root() { return FAIRMIX_SOURCE_ROOT; }

}  // namespace fairmix::test
