#include "tenproj/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace tenproj {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    v = to_little(v);
    bytes(&v, sizeof v);
  }
  void f64(double v) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    bytes(&bits, sizeof bits);
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw std::runtime_error("failed writing checkpoint: " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open checkpoint: " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw std::runtime_error("truncated checkpoint: " + path_.string());
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    bytes(&v, sizeof v);
    return to_little(v);
  }
  double f64() {
    std::uint64_t bits = 0;
    bytes(&bits, sizeof bits);
    return std::bit_cast<double>(to_little(bits));
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(NetworkModel& model, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(model.size()));
  std::vector<std::vector<ParamBlock>> blocks;
  for (std::size_t i = 0; i < model.size(); ++i) {
    Layer& l = model.layer(i);
    w.u32(static_cast<std::uint32_t>(l.kind()));
    for (Index d : l.input_shape()) w.u32(static_cast<std::uint32_t>(d));
    for (Index d : l.output_shape()) w.u32(static_cast<std::uint32_t>(d));
    blocks.push_back(l.params());
    w.u32(static_cast<std::uint32_t>(blocks.back().size()));
    for (const ParamBlock& b : blocks.back()) {
      w.u32(static_cast<std::uint32_t>(b.value->rows()));
      w.u32(static_cast<std::uint32_t>(b.value->cols()));
    }
  }
  for (const auto& layer_blocks : blocks) {
    for (const ParamBlock& b : layer_blocks) {
      const Matrix& m = *b.value;
      for (Index k = 0; k < m.size(); ++k) w.f64(m.data()[k]);
    }
  }
  w.finish(path);
}

void load_checkpoint(NetworkModel& model, const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw std::runtime_error("not a tenproj checkpoint");
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
  }
  if (r.u32() != model.size()) throw std::runtime_error("checkpoint layer count does not match the model");

  std::vector<std::vector<ParamBlock>> blocks;
  for (std::size_t i = 0; i < model.size(); ++i) {
    Layer& l = model.layer(i);
    const std::string where = "checkpoint layer " + std::to_string(i) + ": ";
    if (r.u32() != static_cast<std::uint32_t>(l.kind())) throw std::runtime_error(where + "kind mismatch");
    for (Index d : l.input_shape()) {
      if (r.u32() != static_cast<std::uint32_t>(d)) throw std::runtime_error(where + "input shape mismatch");
    }
    for (Index d : l.output_shape()) {
      if (r.u32() != static_cast<std::uint32_t>(d)) throw std::runtime_error(where + "output shape mismatch");
    }
    blocks.push_back(l.params());
    if (r.u32() != blocks.back().size()) throw std::runtime_error(where + "parameter block count mismatch");
    for (const ParamBlock& b : blocks.back()) {
      const auto rows = r.u32();
      const auto cols = r.u32();
      if (rows != b.value->rows() || cols != b.value->cols()) throw std::runtime_error(where + "block shape mismatch");
    }
  }
  // Stage values so a truncated file leaves the model untouched.
  std::vector<Matrix> staged;
  for (const auto& layer_blocks : blocks) {
    for (const ParamBlock& b : layer_blocks) {
      Matrix m(b.value->rows(), b.value->cols());
      for (Index k = 0; k < m.size(); ++k) m.data()[k] = r.f64();
      staged.push_back(std::move(m));
    }
  }
  if (!r.at_end()) throw std::runtime_error("trailing bytes after checkpoint data");
  std::size_t k = 0;
  for (const auto& layer_blocks : blocks) {
    for (const ParamBlock& b : layer_blocks) *b.value = std::move(staged[k++]);
  }
}

}  // namespace tenproj
