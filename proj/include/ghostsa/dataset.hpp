#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ghostsa/types.hpp"

namespace ghostsa {

enum class Split : std::uint8_t { train, validation };

/// Row-aligned inputs (scaled to [0, 1]), per-head real labels and split tags.
struct Dataset {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> inputs;
  Matrix labels;  // rows x heads
  std::vector<Split> split;

  int input_dim() const { return static_cast<int>(inputs.cols()); }
  std::size_t rows() const { return static_cast<std::size_t>(inputs.rows()); }
  std::vector<std::size_t> indices(Split s) const;

  /// Throws FormatError on mismatched row counts or non-finite values.
  void validate() const;
};

/// Raw contents of one IDX file.
struct IdxArray {
  std::uint8_t type_code = 0;  // 0x08: unsigned byte
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

/// Parses big-endian IDX (magic 0x0000 08 <ndims>). Only unsigned-byte payloads
/// are accepted.
IdxArray parse_idx(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
IdxArray read_idx(const std::filesystem::path& path);

struct IdxLoadOptions {
  int input_dim = 0;               // 0 keeps the full image; else a centered square crop
  std::vector<int> target_digits;  // one per head; label = 1 if digit matches, else 0
  double validation_fraction = 0.0;
  std::size_t max_rows = 0;        // 0: all
};

/// Images file (magic 0x00000803) plus an optional labels file (0x00000801).
/// Without labels every label is zero.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 const IdxLoadOptions& opts = {});

/// Indices of the centered side x side window in a rows x cols image.
std::vector<int> centered_crop_indices(int rows, int cols, int input_dim);

struct BlobSpec {
  std::size_t rows = 2000;
  int input_dim = 100;
  int classes = 3;
  std::vector<int> target_classes{0};  // one per head
  double spread = 0.15;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Gaussian clusters clipped to [0, 1]; stands in for image data.
Dataset make_blob_dataset(const BlobSpec& spec);

}  // namespace ghostsa
