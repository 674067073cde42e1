#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segcal::npy {

enum class DType { int32, int64, float32, float64 };

/// NPY descr string, e.g. "<i4".
std::string_view descr(DType dtype);
std::size_t item_size(DType dtype);

/// A C-order little-endian array as read from or written to an NPY v1.0 file.
struct Array {
  DType dtype = DType::float64;
  std::vector<std::size_t> shape;
  std::vector<std::byte> data;

  std::size_t size() const noexcept;

  /// Element conversions. Integer reads reject float arrays; float reads
  /// accept any dtype.
  std::vector<std::int32_t> as_int32() const;
  std::vector<std::int64_t> as_int64() const;
  std::vector<double> as_double() const;

  static Array from(std::span<const std::int32_t> values, std::vector<std::size_t> shape);
  static Array from(std::span<const std::int64_t> values, std::vector<std::size_t> shape);
  static Array from(std::span<const float> values, std::vector<std::size_t> shape);
  static Array from(std::span<const double> values, std::vector<std::size_t> shape);

  bool operator==(const Array&) const = default;
};

/// Parses an in-memory NPY v1.0 image. `origin` names the source in errors.
Array parse(std::span<const std::byte> bytes, std::string_view origin = "<memory>");
std::vector<std::byte> serialize(const Array& array);

Array load(const std::filesystem::path& path);
void save(const std::filesystem::path& path, const Array& array);

}  // namespace segcal::npy
