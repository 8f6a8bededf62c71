#pragma once

// Checkpoint container, all integers little-endian:
//
//   "FCDSCKPT"                    8 bytes magic
//   u32 version                   currently 1
//   u64 seed, u64 step, u64 config_hash
//   u32 n_meta, then n_meta x { str key, str value }
//   u32 n_params, then n_params x {
//       str name, u32 rank, rank x u64 dim, numel x f64 value }
//
// where str = u32 byte length followed by the bytes. Doubles are stored as
// their IEEE-754 bit pattern.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcds/numerics/parameters.hpp"

namespace fcds::num {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointHeader {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t config_hash = 0;
};

struct Checkpoint {
  CheckpointHeader header;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> params;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  std::uint64_t u(int bytes) {
    need(bytes);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += bytes;
    return v;
  }
  std::string str() {
    const auto n = static_cast<std::size_t>(u(4));
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw CheckpointError("checkpoint truncated");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const CheckpointHeader& header, const std::map<std::string, std::string>& meta,
                                        const ParameterStore& store) {
  std::string out = "FCDSCKPT";
  detail::put_u32(out, 1);
  detail::put_u64(out, header.seed);
  detail::put_u64(out, header.step);
  detail::put_u64(out, header.config_hash);
  detail::put_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    detail::put_str(out, k);
    detail::put_str(out, v);
  }
  detail::put_u32(out, static_cast<std::uint32_t>(store.all().size()));
  for (const auto& p : store.all()) {
    detail::put_str(out, p.name);
    detail::put_u32(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto d : p.tensor.shape()) detail::put_u64(out, d);
    for (double v : p.tensor.values()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

inline Checkpoint parse_checkpoint(const std::string& bytes) {
  detail::Reader r(bytes);
  if (r.raw(8) != "FCDSCKPT") throw CheckpointError("not a checkpoint (bad magic)");
  if (const auto version = r.u(4); version != 1)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.header.seed = r.u(8);
  ck.header.step = r.u(8);
  ck.header.config_hash = r.u(8);
  const auto n_meta = r.u(4);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    auto k = r.str();
    ck.meta[k] = r.str();
  }
  const auto n_params = r.u(4);
  for (std::uint64_t i = 0; i < n_params; ++i) {
    auto name = r.str();
    const auto rank = r.u(4);
    Shape shape;
    for (std::uint64_t d = 0; d < rank; ++d) shape.push_back(static_cast<std::size_t>(r.u(8)));
    std::size_t n = num::detail::checked_numel(shape);
    std::vector<double> v(n);
    for (auto& x : v) x = std::bit_cast<double>(r.u(8));
    ck.params.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(v)));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");
  return ck;
}

// Copies checkpoint values into an already-constructed store; names and
// shapes must match exactly.
inline void load_into(const Checkpoint& ck, ParameterStore& store) {
  if (ck.params.size() != store.all().size())
    throw CheckpointError("checkpoint has " + std::to_string(ck.params.size()) + " parameters, model has " +
                          std::to_string(store.all().size()));
  for (const auto& [name, t] : ck.params) {
    if (!store.contains(name)) throw CheckpointError("checkpoint parameter " + name + " is not in the model");
    Tensor dst = store.get(name);
    if (dst.shape() != t.shape())
      throw CheckpointError("shape mismatch for " + name + ": " + shape_str(t.shape()) + " vs " +
                            shape_str(dst.shape()));
    std::copy(t.values().begin(), t.values().end(), dst.mutable_values().begin());
  }
}

// Writes to a sibling temporary and renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace fcds::num
