#include "tenproj/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tenproj/rng.hpp"

namespace tenproj {

namespace {

bool is_gzip(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("no such file: " + path.string());
  std::vector<std::uint8_t> out;
  if (is_gzip(path)) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (f == nullptr) throw std::runtime_error("cannot open " + path.string());
    std::uint8_t buf[1 << 16];
    int got = 0;
    while ((got = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + got);
    const bool failed = got < 0;
    gzclose(f);
    if (failed) throw std::runtime_error("corrupt gzip stream in " + path.string());
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return out;
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (is_gzip(path)) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("cannot write " + path.string());
    const int wrote = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (wrote != static_cast<int>(bytes.size())) throw std::runtime_error("failed writing " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at, const std::filesystem::path& path) {
  if (b.size() < at + 4) throw std::runtime_error("truncated IDX header in " + path.string());
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) b.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

ImageSet load_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != kIdxImageMagic) {
    throw std::runtime_error(path.string() + ": bad IDX image magic " + hex(magic) + " (expected " +
                             hex(kIdxImageMagic) + ")");
  }
  const Index n = read_be32(bytes, 4, path);
  const Index h = read_be32(bytes, 8, path);
  const Index w = read_be32(bytes, 12, path);
  const std::size_t need = 16 + static_cast<std::size_t>(n * h * w);
  if (bytes.size() < need) throw std::runtime_error(path.string() + ": truncated image data");
  if (bytes.size() > need) throw std::runtime_error(path.string() + ": trailing bytes after image data");
  ImageSet set{h, w, Matrix(h * w, n)};
  for (Index s = 0; s < n; ++s) {
    const std::uint8_t* src = bytes.data() + 16 + s * h * w;
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) set.pixels(r + h * c, s) = static_cast<double>(src[r * w + c]) / 255.0;
  }
  return set;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  if (magic != kIdxLabelMagic) {
    throw std::runtime_error(path.string() + ": bad IDX label magic " + hex(magic) + " (expected " +
                             hex(kIdxLabelMagic) + ")");
  }
  const std::size_t n = read_be32(bytes, 4, path);
  if (bytes.size() < 8 + n) throw std::runtime_error(path.string() + ": truncated label data");
  if (bytes.size() > 8 + n) throw std::runtime_error(path.string() + ": trailing bytes after label data");
  return {bytes.begin() + 8, bytes.end()};
}

void write_idx_images(const std::filesystem::path& path, Index count, Index height, Index width,
                      std::span<const std::uint8_t> pixels) {
  if (static_cast<Index>(pixels.size()) != count * height * width) {
    throw std::invalid_argument("write_idx_images: pixel count mismatch");
  }
  std::vector<std::uint8_t> b;
  b.reserve(16 + pixels.size());
  put_be32(b, kIdxImageMagic);
  put_be32(b, static_cast<std::uint32_t>(count));
  put_be32(b, static_cast<std::uint32_t>(height));
  put_be32(b, static_cast<std::uint32_t>(width));
  b.insert(b.end(), pixels.begin(), pixels.end());
  write_all(path, b);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kIdxLabelMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  write_all(path, b);
}

Matrix Dataset::gather(std::span<const Index> indices) const {
  Matrix out(images.rows(), static_cast<Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) out.col(static_cast<Index>(j)) = images.col(indices[j]);
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const Index> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (Index i : indices) out.push_back(labels[static_cast<std::size_t>(i)]);
  return out;
}

Dataset load_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  ImageSet set = load_idx_images(images);
  std::vector<int> l = load_idx_labels(labels);
  if (static_cast<Index>(l.size()) != set.count()) {
    throw std::runtime_error("image/label count mismatch: " + std::to_string(set.count()) + " images, " +
                             std::to_string(l.size()) + " labels");
  }
  return {{set.height, set.width, 1}, std::move(set.pixels), std::move(l)};
}

BatchPlan::BatchPlan(std::vector<Index> train, std::vector<Index> validation, Index batch_size, std::uint64_t seed)
    : train_(std::move(train)), validation_(std::move(validation)), batch_size_(batch_size), seed_(seed) {
  if (batch_size_ < 1) throw std::invalid_argument("batch size must be at least 1");
}

Index BatchPlan::batches_per_epoch() const noexcept {
  return (static_cast<Index>(train_.size()) + batch_size_ - 1) / batch_size_;
}

void BatchPlan::limit(Index train_limit, Index val_limit) {
  if (train_limit > 0 && train_limit < static_cast<Index>(train_.size())) train_.resize(static_cast<std::size_t>(train_limit));
  if (val_limit > 0 && val_limit < static_cast<Index>(validation_.size())) {
    validation_.resize(static_cast<std::size_t>(val_limit));
  }
}

std::vector<std::vector<Index>> BatchPlan::epoch_batches(Index epoch) const {
  std::vector<Index> order = train_;
  Rng rng(derive_seed(seed_, 0x1000 + static_cast<std::uint64_t>(epoch)));
  rng.shuffle(std::span<Index>(order));
  std::vector<std::vector<Index>> out;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size_)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size_));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

BatchPlan split_and_batch(Index n, double val_fraction, Index batch_size, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("split_and_batch: empty dataset");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("split_and_batch: validation fraction must lie in (0, 1)");
  }
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  Rng rng(derive_seed(seed, 0));
  rng.shuffle(std::span<Index>(all));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  std::vector<Index> validation(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<Index> train(all.begin() + static_cast<std::ptrdiff_t>(n_val), all.end());
  return BatchPlan(std::move(train), std::move(validation), batch_size, seed);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "epoch,train_loss,val_loss,val_acc,seconds\n";
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.epoch) + "," + format_number(r.train_loss) + "," + format_number(r.val_loss) + "," +
           format_number(r.val_acc) + "," + format_number(r.seconds) + "\n";
  }
  return out;
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write metrics file " + path.string());
  out << format_metrics_csv(rows);
  out.flush();
  if (!out) throw std::runtime_error("failed writing metrics file " + path.string());
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read metrics file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_loss,val_acc,seconds") throw std::runtime_error(path.string() + ": bad header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    MetricsRow r;
    char comma = 0;
    if (!(fields >> r.epoch >> comma >> r.train_loss >> comma >> r.val_loss >> comma >> r.val_acc >> comma >>
          r.seconds)) {
      throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace tenproj
