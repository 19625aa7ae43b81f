#ifndef TENPROJ_DATASET_HPP
#define TENPROJ_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tenproj/types.hpp"

namespace tenproj {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Images as a (h*w) x n matrix in [0,1]: one column per image, column-major
/// within the image (row index fastest), i.e. vec() of an h x w x 1 tensor.
struct ImageSet {
  Index height = 0;
  Index width = 0;
  Matrix pixels;

  Index count() const noexcept { return pixels.cols(); }
};

/// Reads a big-endian IDX image file (gzip-compressed when the name ends in
/// ".gz"). Bytes map to value/255. Throws std::runtime_error on bad magic or
/// truncation.
ImageSet load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

/// Writers for the same format (uncompressed, or gzip for ".gz"). `pixels`
/// is row-major per image, as stored in IDX.
void write_idx_images(const std::filesystem::path& path, Index count, Index height, Index width,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

struct Dataset {
  Dims3 sample_shape{28, 28, 1};
  Matrix images;  // shape_size(sample_shape) x n
  std::vector<int> labels;

  Index size() const noexcept { return static_cast<Index>(labels.size()); }
  /// Gathers the given samples into a column batch.
  Matrix gather(std::span<const Index> indices) const;
  std::vector<int> gather_labels(std::span<const Index> indices) const;
};

/// Loads and pairs an image file with a label file; throws if counts differ.
Dataset load_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Fixed train/validation split plus per-epoch shuffled minibatches.
class BatchPlan {
 public:
  BatchPlan(std::vector<Index> train, std::vector<Index> validation, Index batch_size, std::uint64_t seed);

  const std::vector<Index>& train() const noexcept { return train_; }
  const std::vector<Index>& validation() const noexcept { return validation_; }
  Index batch_size() const noexcept { return batch_size_; }
  Index batches_per_epoch() const noexcept;

  /// Keeps only the first `train_limit` / `val_limit` indices (0 = no limit).
  void limit(Index train_limit, Index val_limit);

  /// The training indices for `epoch` in a seeded order, cut into batches;
  /// the last short batch is kept.
  std::vector<std::vector<Index>> epoch_batches(Index epoch) const;

 private:
  std::vector<Index> train_;
  std::vector<Index> validation_;
  Index batch_size_;
  std::uint64_t seed_;
};

/// Shuffles [0, n) with `seed` and holds out round(n * val_fraction) samples
/// for validation. Requires 0 < val_fraction < 1 and n > 0.
BatchPlan split_and_batch(Index n, double val_fraction, Index batch_size, std::uint64_t seed);

struct MetricsRow {
  Index epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
};

/// `%.6g` rendering used for every number in the CSV outputs.
std::string format_number(double v);

std::string format_metrics_csv(std::span<const MetricsRow> rows);
void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace tenproj

#endif  // TENPROJ_DATASET_HPP
