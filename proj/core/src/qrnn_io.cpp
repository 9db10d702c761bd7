#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "lmbench/qrnn.hpp"

namespace lmbench::qrnn {

namespace {

constexpr std::array<char, 8> kMagic = {'Q', 'R', 'N', 'N', 'W', 'T', '0', '1'};
constexpr std::size_t kMagicPrefix = 6;

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_floats(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
}

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw Error(std::string(what) + " does not fit the weight file format");
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {
    // Remaining byte count, when the stream is seekable.
    auto here = in_.tellg();
    if (here != std::streampos(-1)) {
      in_.seekg(0, std::ios::end);
      auto end = in_.tellg();
      in_.seekg(here);
      if (end != std::streampos(-1)) {
        remaining_ = static_cast<std::uint64_t>(end - here);
        known_ = true;
      }
    }
    in_.clear();
  }

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw Error("truncated weight file");
  }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    bytes(reinterpret_cast<char*>(&v), sizeof v);
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    return v;
  }

  void floats(std::span<float> dst) {
    bytes(reinterpret_cast<char*>(dst.data()), dst.size() * sizeof(float));
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& f : dst) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
    }
  }

  std::vector<float> floats(std::size_t n) {
    std::vector<float> v(n);
    floats(v);
    return v;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  /// False only when the stream is known to hold fewer than `n` bytes.
  bool holds(std::uint64_t n) const { return !known_ || remaining_ >= n; }

 private:
  std::istream& in_;
  std::uint64_t remaining_ = 0;
  bool known_ = false;
};

struct LayerHeader {
  std::uint32_t m, k, r, bias;
};

}  // namespace

void write_weights(const Model& model, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, to_u32(model.vocab_size(), "vocabulary size"));
  put_u32(out, to_u32(model.embed_dim(), "embedding size"));
  put_u32(out, to_u32(model.layers().size(), "layer count"));
  for (const auto& l : model.layers()) {
    put_u32(out, to_u32(l.out_channels(), "layer width"));
    put_u32(out, to_u32(l.in_channels(), "layer width"));
    put_u32(out, to_u32(l.window(), "window size"));
    put_u32(out, l.has_bias() ? 1u : 0u);
  }
  put_floats(out, model.embedding().data());
  for (const auto& l : model.layers()) {
    put_floats(out, l.w_z.data());
    put_floats(out, l.w_f.data());
    put_floats(out, l.w_o.data());
    if (l.has_bias()) {
      put_floats(out, l.b_z);
      put_floats(out, l.b_f);
      put_floats(out, l.b_o);
    }
  }
  put_floats(out, model.output_bias());
  if (!out) throw IoError("failed writing weight file");
}

Model read_weights(std::istream& in) {
  Reader rd(in);
  std::array<char, 8> magic{};
  rd.bytes(magic.data(), magic.size());
  if (!std::equal(magic.begin(), magic.begin() + kMagicPrefix, kMagic.begin())) {
    throw Error("bad magic: not a QRNN weight file");
  }
  if (magic != kMagic) {
    throw Error("unsupported weight file version '" + std::string(magic.begin() + kMagicPrefix, magic.end()) + "'");
  }

  const std::uint64_t v = rd.u32();
  const std::uint64_t d = rd.u32();
  const std::uint32_t count = rd.u32();
  if (v == 0 || d == 0) throw Error("weight file declares an empty embedding");
  if (count == 0) throw Error("weight file declares no layers");
  if (count > 1024) throw Error("weight file declares an implausible layer count");

  std::vector<LayerHeader> headers(count);
  std::uint64_t floats = v * d + v;
  std::uint64_t width = d;
  for (std::uint32_t l = 0; l < count; ++l) {
    auto& h = headers[l];
    h = {rd.u32(), rd.u32(), rd.u32(), rd.u32()};
    if (h.m == 0 || h.k == 0 || h.r == 0) throw Error("layer " + std::to_string(l) + " has a zero dimension");
    if (h.bias > 1) throw Error("layer " + std::to_string(l) + " has an invalid bias flag");
    if (h.k != width) throw Error("layer " + std::to_string(l) + " input width breaks the shape chain");
    width = h.m;
    floats += 3ull * h.m * h.k * h.r + (h.bias ? 3ull * h.m : 0);
  }
  if (width != d) throw Error("tied embedding requires final width d");
  if (!rd.holds(floats * sizeof(float) + kMagic.size() + 12 + 16ull * count)) {
    throw Error("truncated weight file");
  }

  Tensor embedding({v, d}, rd.floats(v * d));
  std::vector<LayerWeights> layers;
  for (const auto& h : headers) {
    const std::vector<std::size_t> shape{h.m, h.k, h.r};
    const std::size_t n = static_cast<std::size_t>(h.m) * h.k * h.r;
    LayerWeights lw{Tensor(shape, rd.floats(n)), Tensor(shape, rd.floats(n)), Tensor(shape, rd.floats(n)), {}, {}, {}};
    if (h.bias) {
      lw.b_z = rd.floats(h.m);
      lw.b_f = rd.floats(h.m);
      lw.b_o = rd.floats(h.m);
    }
    layers.push_back(std::move(lw));
  }
  auto output_bias = rd.floats(v);
  if (!rd.at_end()) throw Error("trailing data after weight file payload");
  return Model(std::move(embedding), std::move(layers), std::move(output_bias));
}

void save_weights(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_weights(model, out);
}

Model load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return read_weights(in);
}

}  // namespace lmbench::qrnn
