#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tensorrank {

using Index = std::vector<std::size_t>;

// Dense row-major tensor of doubles (last mode varies fastest).
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> dims, double fill = 0.0);
  DenseTensor(std::vector<std::size_t> dims, std::vector<double> values);

  std::size_t order() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(std::size_t mode) const { return dims_[mode]; }
  const std::vector<std::size_t>& strides() const { return strides_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double& operator[](std::size_t flat) { return values_[flat]; }
  double operator[](std::size_t flat) const { return values_[flat]; }

  double& at(std::span<const std::size_t> index) { return values_[flat_index(index)]; }
  double at(std::span<const std::size_t> index) const { return values_[flat_index(index)]; }

  std::size_t flat_index(std::span<const std::size_t> index) const;
  Index unflatten(std::size_t flat) const;

  double mean() const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
};

std::size_t product(std::span<const std::size_t> dims);

// Advances a row-major multi-index; returns false after the last one.
bool next_index(Index& index, std::span<const std::size_t> dims);

// FROSTT-style text: one line per nonzero, 1-based indices then the value.
// The writer emits a "# dims:" comment so trailing zero slices survive a
// round trip; without it the reader infers extents from the largest index.
void write_tns(const DenseTensor& t, const std::filesystem::path& path);
DenseTensor read_tns(const std::filesystem::path& path);

// Binary: "TNSR", u32 order, u64 dims[order], f64 values, little-endian.
void write_binary(const DenseTensor& t, const std::filesystem::path& path);
DenseTensor read_binary(const std::filesystem::path& path);

// Dispatches on extension: ".tns" is text, anything else binary.
void write_tensor(const DenseTensor& t, const std::filesystem::path& path);
DenseTensor read_tensor(const std::filesystem::path& path);

}  // namespace tensorrank
