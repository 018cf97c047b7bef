#include "dabea/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "dabea/error.hpp"

namespace dabea {

namespace {

void put_u32le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw ValidationError(path + ": truncated DAT1 header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559,
              "DAT1 requires IEEE-754 binary32");

}  // namespace

void dat1_save(const DenseArray& t, const std::string& path) {
  if (t.rank() != 3) throw ValidationError("dat1_save: rank-3 tensor required");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os.write("DAT1", 4);
  for (std::size_t e : t.shape()) {
    if (e > std::numeric_limits<std::uint32_t>::max())
      throw ValidationError("dat1_save: extent exceeds u32");
    put_u32le(os, static_cast<std::uint32_t>(e));
  }
  std::vector<unsigned char> buf(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float f = static_cast<float>(t[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    buf[4 * i] = static_cast<unsigned char>(bits);
    buf[4 * i + 1] = static_cast<unsigned char>(bits >> 8);
    buf[4 * i + 2] = static_cast<unsigned char>(bits >> 16);
    buf[4 * i + 3] = static_cast<unsigned char>(bits >> 24);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw ValidationError("write failed: " + path);
}

DenseArray dat1_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DAT1", 4) != 0)
    throw ValidationError(path + ": not a DAT1 file");
  std::vector<std::size_t> shape(3);
  std::size_t total = 1;
  for (auto& e : shape) {
    e = get_u32le(is, path);
    if (e == 0) throw ValidationError(path + ": zero extent in DAT1 header");
    total *= e;
  }
  std::vector<unsigned char> buf(total * 4);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw ValidationError(path + ": truncated DAT1 payload");
  std::vector<double> data(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * i]) |
                               (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    data[i] = static_cast<double>(f);
  }
  DenseArray out(std::move(shape), std::move(data));
  out.check_finite(path.c_str());
  return out;
}

}  // namespace dabea
