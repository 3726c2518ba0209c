// Binary network checkpoints.
//
// Layout (all integers and floats little-endian):
//   8 bytes   magic "PDDSNET\0"
//   u32       format version (1)
//   u32 x 5   dim, hidden, layers, encoder_layers, embed_dim
//   3 blocks  u32 n, then n x u32 layer widths (time net, encoder, main net)
//   u64       parameter count
//   f64 x n   parameters

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "pdds/errors.hpp"
#include "pdds/neuralnet.hpp"

namespace pdds {

namespace {

constexpr std::array<char, 8> kMagic{'P', 'D', 'D', 'S', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw DataError("checkpoint '" + path + "' is truncated");
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void put_widths(std::ostream& out, const Mlp& net) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.widths().size()));
  for (int w : net.widths()) put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
}

void check_widths(std::istream& in, const Mlp& net, const std::string& path) {
  const auto n = get<std::uint32_t>(in, path);
  if (n != net.widths().size()) throw DataError("checkpoint '" + path + "': layer count mismatch");
  for (int w : net.widths()) {
    if (get<std::uint32_t>(in, path) != static_cast<std::uint32_t>(w)) {
      throw DataError("checkpoint '" + path + "': layer width mismatch");
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const PotentialNetwork& net) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    const auto& c = net.config();
    for (int v : {net.dim(), c.hidden, c.layers, c.encoder_layers, c.embed_dim}) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    }
    put_widths(out, net.r_net());
    put_widths(out, net.encoder());
    put_widths(out, net.main_net());
    put<std::uint64_t>(out, net.size());
    for (double p : net.params()) put<double>(out, p);
    if (!out) throw DataError("failed writing checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move checkpoint into place at '" + path + "'");
  }
}

PotentialNetwork load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("'" + path + "' is not a network checkpoint");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw DataError("checkpoint '" + path + "' has unsupported version " +
                    std::to_string(version));
  }
  const auto dim = static_cast<int>(get<std::uint32_t>(in, path));
  NetworkConfig c;
  c.hidden = static_cast<int>(get<std::uint32_t>(in, path));
  c.layers = static_cast<int>(get<std::uint32_t>(in, path));
  c.encoder_layers = static_cast<int>(get<std::uint32_t>(in, path));
  c.embed_dim = static_cast<int>(get<std::uint32_t>(in, path));
  PotentialNetwork net(dim, c);
  check_widths(in, net.r_net(), path);
  check_widths(in, net.encoder(), path);
  check_widths(in, net.main_net(), path);
  if (get<std::uint64_t>(in, path) != net.size()) {
    throw DataError("checkpoint '" + path + "': parameter count mismatch");
  }
  for (double& p : net.params()) p = get<double>(in, path);
  return net;
}

}  // namespace pdds
