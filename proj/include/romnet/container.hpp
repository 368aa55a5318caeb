#pragma once

// Versioned binary container for named float64 arrays.
//
// Layout: 16-byte magic, then a little-endian header
//   u64 version, u64 array_count,
//   per array: u64 name_length, name bytes, u64 dtype (1 = f64 LE), u64 rows, u64 cols,
// then the raw column-major data of each array in header order. A plain-text
// sidecar "<file>.manifest" lists the same header for humans.

#include "romnet/common.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace romnet {

inline constexpr char kContainerMagic[16] = {'R', 'O', 'M', 'N', 'E', 'T', '-', 'C',
                                             'O', 'N', 'T', 'A', 'I', 'N', 'E', 'R'};
inline constexpr std::uint64_t kContainerVersion = 1;

class Container {
 public:
  void put(const std::string& name, Mat value);
  void put_vector(const std::string& name, const Vec& value) { put(name, Mat(value)); }
  void put_scalar(const std::string& name, double value) { put(name, Mat::Constant(1, 1, value)); }
  void put_indices(const std::string& name, const std::vector<int>& idx);

  bool has(const std::string& name) const;
  const Mat& get(const std::string& name) const;
  Vec get_vector(const std::string& name) const;
  double get_scalar(const std::string& name) const { return get(name)(0, 0); }
  std::vector<int> get_indices(const std::string& name) const;

  const std::vector<std::pair<std::string, Mat>>& arrays() const { return arrays_; }

 private:
  std::vector<std::pair<std::string, Mat>> arrays_;
};

/// Writes the container and its sidecar manifest (temp file + rename).
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// Writes `content` to `path` through a temporary file and a rename.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace romnet
