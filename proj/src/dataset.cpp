#include "ghostsa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ghostsa/rng.hpp"

namespace ghostsa {

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(labels.rows()) != rows() || split.size() != rows()) {
    throw FormatError("dataset: inputs, labels and split tags have different row counts");
  }
  if (!inputs.allFinite() || !labels.allFinite()) throw FormatError("dataset: non-finite values");
}

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

IdxArray parse_idx(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 4) throw FormatError(origin + ": truncated IDX header");
  const std::uint32_t magic = read_be32(bytes, 0);
  const std::uint8_t type = static_cast<std::uint8_t>((magic >> 8) & 0xff);
  const std::uint8_t ndims = static_cast<std::uint8_t>(magic & 0xff);
  if ((magic >> 16) != 0 || type != 0x08 || ndims == 0) {
    throw FormatError(origin + ": bad IDX magic " + hex32(magic));
  }
  const std::size_t header = 4 + 4 * std::size_t{ndims};
  if (bytes.size() < header) throw FormatError(origin + ": truncated IDX header");

  IdxArray out;
  out.type_code = type;
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    out.dims.push_back(read_be32(bytes, 4 + 4 * d));
    total *= out.dims.back();
  }
  if (bytes.size() - header < total) {
    throw FormatError(origin + ": truncated IDX payload (expected " + std::to_string(total) + " bytes, found " +
                      std::to_string(bytes.size() - header) + ")");
  }
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                  bytes.begin() + static_cast<std::ptrdiff_t>(header + total));
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx(bytes, path.string());
}

std::vector<int> centered_crop_indices(int rows, int cols, int input_dim) {
  if (input_dim == 0 || input_dim == rows * cols) {
    std::vector<int> all(static_cast<std::size_t>(rows * cols));
    for (int i = 0; i < rows * cols; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(input_dim))));
  if (side * side != input_dim || side > rows || side > cols) {
    throw ConfigError("input_dim " + std::to_string(input_dim) + " is not a square crop of a " +
                      std::to_string(rows) + "x" + std::to_string(cols) + " image");
  }
  const int r0 = (rows - side) / 2, c0 = (cols - side) / 2;
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(input_dim));
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) idx.push_back((r0 + r) * cols + c0 + c);
  return idx;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 const IdxLoadOptions& opts) {
  const IdxArray img = read_idx(images);
  if (img.dims.size() != 3) throw FormatError(images.string() + ": expected a 3-dimensional image array");
  std::size_t count = img.dims[0];
  const int rows = static_cast<int>(img.dims[1]), cols = static_cast<int>(img.dims[2]);
  const std::vector<int> crop = centered_crop_indices(rows, cols, opts.input_dim);

  std::vector<std::uint8_t> digits;
  if (!labels.empty()) {
    const IdxArray lab = read_idx(labels);
    if (lab.dims.size() != 1) throw FormatError(labels.string() + ": expected a 1-dimensional label array");
    if (lab.dims[0] != img.dims[0]) throw FormatError("image and label files disagree on the item count");
    digits = lab.data;
  }
  if (opts.max_rows > 0) count = std::min(count, opts.max_rows);

  const std::size_t pixels = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  const int heads = std::max<int>(1, static_cast<int>(opts.target_digits.size()));
  Dataset ds;
  ds.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(crop.size()));
  ds.labels = Matrix::Zero(static_cast<Eigen::Index>(count), heads);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < crop.size(); ++k) {
      ds.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          img.data[i * pixels + static_cast<std::size_t>(crop[k])] / 255.0;
    }
    if (!digits.empty()) {
      for (std::size_t h = 0; h < opts.target_digits.size(); ++h) {
        ds.labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h)) =
            digits[i] == opts.target_digits[h] ? 1.0 : 0.0;
      }
    }
  }
  const auto n_val = static_cast<std::size_t>(std::floor(opts.validation_fraction * static_cast<double>(count)));
  ds.split.assign(count, Split::train);
  for (std::size_t i = count - n_val; i < count; ++i) ds.split[i] = Split::validation;
  ds.validate();
  return ds;
}

Dataset make_blob_dataset(const BlobSpec& spec) {
  if (spec.rows == 0 || spec.input_dim < 1 || spec.classes < 1 || spec.target_classes.empty()) {
    throw ConfigError("blob dataset: rows, input_dim, classes and target_classes must be non-empty");
  }
  Rng rng(derive_seed(spec.seed, 0xb10b));
  Matrix centers(spec.classes, spec.input_dim);
  for (int k = 0; k < spec.classes; ++k)
    for (int j = 0; j < spec.input_dim; ++j) centers(k, j) = 0.2 + 0.6 * rng.uniform();

  Dataset ds;
  const auto rows = static_cast<Eigen::Index>(spec.rows);
  ds.inputs.resize(rows, spec.input_dim);
  ds.labels = Matrix::Zero(rows, static_cast<Eigen::Index>(spec.target_classes.size()));
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int cls = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.classes));
    for (int j = 0; j < spec.input_dim; ++j) {
      ds.inputs(i, j) = std::clamp(centers(cls, j) + spec.spread * rng.normal(), 0.0, 1.0);
    }
    for (std::size_t h = 0; h < spec.target_classes.size(); ++h) {
      ds.labels(i, static_cast<Eigen::Index>(h)) = cls == spec.target_classes[h] ? 1.0 : 0.0;
    }
  }
  const auto n_val = static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(spec.rows)));
  ds.split.assign(spec.rows, Split::train);
  for (std::size_t i = spec.rows - n_val; i < spec.rows; ++i) ds.split[i] = Split::validation;
  return ds;
}

}  // namespace ghostsa
