#pragma once

// On-disk artifact store. Each artifact lives in a stage directory and has a
// plain-text manifest recording the hash of the configuration keys it
// consumed and the hashes of its upstream artifacts; a mismatch marks it
// stale.

#include "romnet/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace romnet {

/// An upstream artifact exists but was produced from a different
/// configuration or different inputs.
class StaleArtifactError : public Error {
 public:
  using Error::Error;
};

/// An upstream artifact has not been produced yet.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

struct Manifest {
  std::string artifact;
  std::uint64_t config_hash = 0;
  std::map<std::string, std::uint64_t> upstream;  // artifact -> its hash
  std::uint64_t hash = 0;                          // combined identity
  std::string created;
  std::map<std::string, std::string> info;         // free-form summary values

  std::string to_text() const;
  static Manifest from_text(const std::string& text);
};

/// Identity of an artifact given its config hash and upstream hashes.
std::uint64_t artifact_hash(const std::string& artifact, std::uint64_t config_hash,
                            const std::map<std::string, std::uint64_t>& upstream);

std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  /// Directory of a stage, created on demand.
  std::filesystem::path dir(const std::string& stage) const;
  std::filesystem::path manifest_path(const std::string& stage, const std::string& artifact) const;

  bool has_manifest(const std::string& stage, const std::string& artifact) const;
  Manifest read_manifest(const std::string& stage, const std::string& artifact) const;
  /// Atomic (write to a temporary file, then rename).
  void write_manifest(const std::string& stage, const Manifest& m) const;

 private:
  std::filesystem::path root_;
};

}  // namespace romnet
