#include "mvc3d/t3dc.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mvc3d/error.hpp"

namespace mvc3d::t3dc {

namespace {

constexpr std::array<char, 4> kMagic = {'T', '3', 'D', 'C'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("T3DC: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write(std::ostream& os, const Tensor& t) {
  if (!t.defined()) throw FormatError("T3DC: cannot write an undefined tensor");
  os.write(kMagic.data(), kMagic.size());
  os.put(static_cast<char>(kVersion));
  os.put(static_cast<char>(t.rank()));
  for (std::size_t d : t.dims()) put_u32(os, static_cast<std::uint32_t>(d));
  for (double v : t.values()) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!os) throw FormatError("T3DC: write failed");
}

Tensor read(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("T3DC: bad magic");
  }
  const int version = is.get();
  if (version != kVersion) throw FormatError("T3DC: unsupported version " + std::to_string(version));
  const int rank = is.get();
  if (rank < 1 || rank > 5) throw FormatError("T3DC: invalid rank " + std::to_string(rank));
  Shape dims(static_cast<std::size_t>(rank));
  for (auto& d : dims) {
    d = get_u32(is);
    if (d == 0) throw FormatError("T3DC: zero extent");
  }
  std::vector<double> values(shape_numel(dims));
  for (double& v : values) v = static_cast<double>(std::bit_cast<float>(get_u32(is)));
  return Tensor(std::move(dims), std::move(values));
}

std::string encode(const Tensor& t) {
  std::ostringstream os(std::ios::binary);
  write(os, t);
  return os.str();
}

Tensor decode(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  Tensor t = read(is);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("T3DC: trailing bytes after payload");
  return t;
}

void save(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write(os, t);
}

Tensor load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read(is);
}

}  // namespace mvc3d::t3dc
