#include "romnet/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace romnet {

static_assert(std::endian::native == std::endian::little,
              "the container format assumes a little-endian host");

void Container::put(const std::string& name, Mat value) {
  for (auto& [n, m] : arrays_)
    if (n == name) {
      m = std::move(value);
      return;
    }
  arrays_.emplace_back(name, std::move(value));
}

void Container::put_indices(const std::string& name, const std::vector<int>& idx) {
  Vec v(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) v[static_cast<Eigen::Index>(i)] = idx[i];
  put(name, Mat(v));
}

bool Container::has(const std::string& name) const {
  for (const auto& [n, m] : arrays_)
    if (n == name) return true;
  return false;
}

const Mat& Container::get(const std::string& name) const {
  for (const auto& [n, m] : arrays_)
    if (n == name) return m;
  throw Error("container has no array named '" + name + "'");
}

Vec Container::get_vector(const std::string& name) const {
  const Mat& m = get(name);
  return Eigen::Map<const Vec>(m.data(), m.size());
}

std::vector<int> Container::get_indices(const std::string& name) const {
  const Mat& m = get(name);
  std::vector<int> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(m.data()[i]));
  return out;
}

namespace {

void put_u64(std::string& buf, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf.append(b, 8);
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path) {
  std::uint64_t v;
  if (!in.read(reinterpret_cast<char*>(&v), 8)) throw Error("truncated container header in " + path.string());
  return v;
}

}  // namespace

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  // Unique per process and thread so concurrent writers never share a file.
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_container(const std::filesystem::path& path, const Container& c) {
  std::string buf(kContainerMagic, 16);
  put_u64(buf, kContainerVersion);
  put_u64(buf, c.arrays().size());
  std::ostringstream manifest;
  manifest << "format romnet-container\nversion " << kContainerVersion
           << "\ndtype f64-le\nlayout column-major\narrays " << c.arrays().size() << "\n";
  for (const auto& [name, m] : c.arrays()) {
    put_u64(buf, name.size());
    buf += name;
    put_u64(buf, 1);
    put_u64(buf, static_cast<std::uint64_t>(m.rows()));
    put_u64(buf, static_cast<std::uint64_t>(m.cols()));
    manifest << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  }
  for (const auto& [name, m] : c.arrays())
    buf.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  atomic_write_text(path, buf);
  std::filesystem::path side = path;
  side += ".manifest";
  atomic_write_text(side, manifest.str());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open container " + path.string());
  char magic[16];
  if (!in.read(magic, 16) || std::memcmp(magic, kContainerMagic, 16) != 0)
    throw Error(path.string() + " is not a romnet container (bad magic)");
  const std::uint64_t version = get_u64(in, path);
  if (version != kContainerVersion)
    throw Error("unsupported container version " + std::to_string(version) + " in " + path.string());
  const std::uint64_t count = get_u64(in, path);
  struct Entry {
    std::string name;
    std::uint64_t rows, cols;
  };
  std::vector<Entry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    const std::uint64_t len = get_u64(in, path);
    if (len > (1u << 20)) throw Error("corrupt array name length in " + path.string());
    e.name.resize(len);
    if (!in.read(e.name.data(), static_cast<std::streamsize>(len))) throw Error("truncated container header in " + path.string());
    const std::uint64_t dtype = get_u64(in, path);
    if (dtype != 1) throw Error("unsupported dtype " + std::to_string(dtype) + " in " + path.string());
    e.rows = get_u64(in, path);
    e.cols = get_u64(in, path);
    entries.push_back(std::move(e));
  }
  Container c;
  for (const auto& e : entries) {
    Mat m(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols));
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
      throw Error("truncated data for array '" + e.name + "' in " + path.string());
    c.put(e.name, std::move(m));
  }
  return c;
}

}  // namespace romnet
