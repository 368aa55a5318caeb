#include "romnet/store.hpp"

#include "romnet/container.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace romnet {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used, 16);
    if (used != s.size()) throw Error("");
    return v;
  } catch (...) {
    throw Error("malformed hash '" + s + "' in manifest");
  }
}

std::uint64_t artifact_hash(const std::string& artifact, std::uint64_t config_hash,
                            const std::map<std::string, std::uint64_t>& upstream) {
  std::string text = artifact + "|" + hex64(config_hash);
  for (const auto& [name, h] : upstream) text += "|" + name + "=" + hex64(h);
  return fnv1a(text);
}

std::string Manifest::to_text() const {
  std::ostringstream os;
  os << "artifact " << artifact << "\n";
  os << "hash " << hex64(hash) << "\n";
  os << "config_hash " << hex64(config_hash) << "\n";
  for (const auto& [name, h] : upstream) os << "upstream " << name << " " << hex64(h) << "\n";
  os << "created " << created << "\n";
  for (const auto& [k, v] : info) os << "info " << k << " " << v << "\n";
  return os.str();
}

Manifest Manifest::from_text(const std::string& text) {
  Manifest m;
  std::istringstream is(text);
  std::string line;
  bool has_hash = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "artifact") {
      ls >> m.artifact;
    } else if (key == "hash") {
      std::string h;
      ls >> h;
      m.hash = parse_hex64(h);
      has_hash = true;
    } else if (key == "config_hash") {
      std::string h;
      ls >> h;
      m.config_hash = parse_hex64(h);
    } else if (key == "upstream") {
      std::string name, h;
      ls >> name >> h;
      m.upstream[name] = parse_hex64(h);
    } else if (key == "created") {
      std::getline(ls >> std::ws, m.created);
    } else if (key == "info") {
      std::string k, v;
      ls >> k;
      std::getline(ls >> std::ws, v);
      m.info[k] = v;
    } else {
      throw Error("unknown manifest line: " + line);
    }
  }
  if (m.artifact.empty() || !has_hash) throw Error("manifest is missing its artifact name or hash");
  return m;
}

ArtifactStore::ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path ArtifactStore::dir(const std::string& stage) const {
  const auto d = root_ / stage;
  std::filesystem::create_directories(d);
  return d;
}

std::filesystem::path ArtifactStore::manifest_path(const std::string& stage, const std::string& artifact) const {
  return root_ / stage / (artifact + ".manifest.txt");
}

bool ArtifactStore::has_manifest(const std::string& stage, const std::string& artifact) const {
  return std::filesystem::exists(manifest_path(stage, artifact));
}

Manifest ArtifactStore::read_manifest(const std::string& stage, const std::string& artifact) const {
  return Manifest::from_text(read_text(manifest_path(stage, artifact)));
}

void ArtifactStore::write_manifest(const std::string& stage, const Manifest& m) const {
  Manifest out = m;
  if (out.created.empty()) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out.created = buf;
  }
  dir(stage);
  atomic_write_text(manifest_path(stage, m.artifact), out.to_text());
}

}  // namespace romnet
