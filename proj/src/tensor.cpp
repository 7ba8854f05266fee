#include "tensorrank/tensor.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "tensorrank/error.hpp"

namespace tensorrank {

namespace {

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t m = dims.size(); m-- > 1;) strides[m - 1] = strides[m] * dims[m];
  return strides;
}

template <class T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little_endian(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated binary tensor");
  return to_little_endian(v);
}

}  // namespace

std::size_t product(std::span<const std::size_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

bool next_index(Index& index, std::span<const std::size_t> dims) {
  for (std::size_t m = index.size(); m-- > 0;) {
    if (++index[m] < dims[m]) return true;
    index[m] = 0;
  }
  return false;
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), strides_(row_major_strides(dims_)), values_(product(dims_), fill) {}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), strides_(row_major_strides(dims_)), values_(std::move(values)) {
  if (values_.size() != product(dims_))
    throw ConfigError("tensor payload has " + std::to_string(values_.size()) + " values, dims imply " +
                      std::to_string(product(dims_)));
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t m = 0; m < dims_.size(); ++m) flat += index[m] * strides_[m];
  return flat;
}

Index DenseTensor::unflatten(std::size_t flat) const {
  Index index(dims_.size());
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    index[m] = flat / strides_[m];
    flat %= strides_[m];
  }
  return index;
}

double DenseTensor::mean() const {
  if (values_.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum / static_cast<double>(values_.size());
}

void write_tns(const DenseTensor& t, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "# dims:";
  for (auto d : t.dims()) os << ' ' << d;
  os << '\n';
  char buf[32];
  Index index(t.order(), 0);
  std::size_t flat = 0;
  do {
    const double v = t[flat++];
    if (v == 0.0) continue;
    for (auto i : index) os << (i + 1) << ' ';
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << '\n';
  } while (next_index(index, t.dims()));
  if (!os) throw IoError("write failed for " + path.string());
}

DenseTensor read_tns(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<std::size_t> header_dims;
  std::vector<std::pair<Index, double>> entries;
  std::size_t order = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      constexpr std::string_view tag = "# dims:";
      if (line.compare(first, tag.size(), tag) == 0) {
        std::istringstream ds(line.substr(first + tag.size()));
        header_dims.clear();
        for (std::size_t d; ds >> d;) header_dims.push_back(d);
      }
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> fields;
    for (double f; ls >> f;) fields.push_back(f);
    if (!ls.eof() || fields.size() < 2)
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed entry");
    const std::size_t n = fields.size() - 1;
    if (order == 0) order = n;
    if (n != order) throw IoError(path.string() + ":" + std::to_string(line_no) + ": inconsistent order");
    Index index(n);
    for (std::size_t m = 0; m < n; ++m) {
      if (fields[m] < 1 || fields[m] != std::floor(fields[m]))
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": indices are 1-based integers");
      index[m] = static_cast<std::size_t>(fields[m]) - 1;
    }
    entries.emplace_back(std::move(index), fields.back());
  }
  std::vector<std::size_t> dims = header_dims;
  if (dims.empty()) {
    if (entries.empty()) throw IoError(path.string() + ": no entries and no dims header");
    dims.assign(order, 0);
    for (const auto& [index, v] : entries)
      for (std::size_t m = 0; m < order; ++m) dims[m] = std::max(dims[m], index[m] + 1);
  }
  if (order != 0 && dims.size() != order) throw IoError(path.string() + ": dims header disagrees with entries");
  DenseTensor t(dims);
  for (const auto& [index, v] : entries) {
    for (std::size_t m = 0; m < index.size(); ++m)
      if (index[m] >= dims[m]) throw IoError(path.string() + ": index outside dims header");
    t.at(index) = v;
  }
  return t;
}

void write_binary(const DenseTensor& t, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write("TNSR", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.order()));
  for (auto d : t.dims()) put<std::uint64_t>(os, d);
  for (double v : t.values()) put<double>(os, v);
  if (!os) throw IoError("write failed for " + path.string());
}

DenseTensor read_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "TNSR", 4) != 0)
    throw IoError(path.string() + ": missing TNSR magic");
  const auto order = get<std::uint32_t>(is);
  std::vector<std::size_t> dims(order);
  for (auto& d : dims) d = static_cast<std::size_t>(get<std::uint64_t>(is));
  std::vector<double> values(product(dims));
  for (auto& v : values) v = get<double>(is);
  return DenseTensor(std::move(dims), std::move(values));
}

void write_tensor(const DenseTensor& t, const std::filesystem::path& path) {
  if (path.extension() == ".tns")
    write_tns(t, path);
  else
    write_binary(t, path);
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  return path.extension() == ".tns" ? read_tns(path) : read_binary(path);
}

}  // namespace tensorrank
