#include "segcal/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "segcal/error.hpp"

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace segcal::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicSize = 6;
constexpr std::size_t kPreamble = kMagicSize + 2 + 2;
constexpr std::size_t kMaxDims = 4;

[[noreturn]] void fail(std::string_view origin, const std::string& what) {
  throw InvalidInput(std::string(origin) + ": " + what);
}

// Minimal reader for the Python dict literal in the header.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::string_view origin) : text_(text), origin_(origin) {}

  void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
    bool seen_descr = false;
    bool seen_order = false;
    bool seen_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = quoted();
      expect(':');
      if (key == "descr") {
        descr = quoted();
        seen_descr = true;
      } else if (key == "fortran_order") {
        fortran = boolean();
        seen_order = true;
      } else if (key == "shape") {
        shape = tuple();
        seen_shape = true;
      } else {
        fail(origin_, "unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail(origin_, "malformed header");
      }
    }
    skip_ws();
    if (pos_ != text_.size()) fail(origin_, "trailing characters in header");
    if (!seen_descr || !seen_order || !seen_shape) fail(origin_, "header is missing a required key");
  }

 private:
  char peek() const {
    if (pos_ >= text_.size()) fail(origin_, "truncated header");
    return text_[pos_];
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char ch) {
    skip_ws();
    if (peek() != ch) fail(origin_, std::string("malformed header: expected '") + ch + "'");
    ++pos_;
  }
  std::string quoted() {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') fail(origin_, "malformed header: expected a string");
    const std::size_t end = text_.find(q, pos_ + 1);
    if (end == std::string_view::npos) fail(origin_, "malformed header: unterminated string");
    std::string out(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }
  bool boolean() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail(origin_, "malformed header: fortran_order is not a boolean");
  }
  std::vector<std::size_t> tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail(origin_, "malformed header: bad shape");
      std::size_t v = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        const std::size_t digit = static_cast<std::size_t>(text_[pos_] - '0');
        if (v > (std::numeric_limits<std::size_t>::max() - digit) / 10) fail(origin_, "shape overflow");
        v = v * 10 + digit;
        ++pos_;
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view text_;
  std::string_view origin_;
  std::size_t pos_ = 0;
};

DType parse_descr(const std::string& d, std::string_view origin) {
  if (d == "<i4") return DType::int32;
  if (d == "<i8") return DType::int64;
  if (d == "<f4") return DType::float32;
  if (d == "<f8") return DType::float64;
  fail(origin, "unsupported dtype '" + d + "' (expected <i4, <i8, <f4 or <f8)");
}

template <typename T>
Array make(std::span<const T> values, std::vector<std::size_t> shape, DType dtype) {
  Array a;
  a.dtype = dtype;
  a.shape = std::move(shape);
  if (a.size() != values.size()) {
    throw InvalidInput("array shape holds " + std::to_string(a.size()) + " elements but " +
                       std::to_string(values.size()) + " were given");
  }
  a.data.resize(values.size_bytes());
  if (!values.empty()) std::memcpy(a.data.data(), values.data(), values.size_bytes());
  return a;
}

template <typename T>
T element(const Array& a, std::size_t i) {
  T v;
  std::memcpy(&v, a.data.data() + i * sizeof(T), sizeof(T));
  return v;
}

template <typename Out>
std::vector<Out> convert(const Array& a) {
  std::vector<Out> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (a.dtype) {
      case DType::int32: out[i] = static_cast<Out>(element<std::int32_t>(a, i)); break;
      case DType::int64: out[i] = static_cast<Out>(element<std::int64_t>(a, i)); break;
      case DType::float32: out[i] = static_cast<Out>(element<float>(a, i)); break;
      case DType::float64: out[i] = static_cast<Out>(element<double>(a, i)); break;
    }
  }
  return out;
}

}  // namespace

std::string_view descr(DType dtype) {
  switch (dtype) {
    case DType::int32: return "<i4";
    case DType::int64: return "<i8";
    case DType::float32: return "<f4";
    case DType::float64: return "<f8";
  }
  return "?";
}

std::size_t item_size(DType dtype) {
  return dtype == DType::int32 || dtype == DType::float32 ? 4 : 8;
}

std::size_t Array::size() const noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::vector<std::int32_t> Array::as_int32() const {
  if (dtype == DType::float32 || dtype == DType::float64) {
    throw InvalidInput("expected an integer array, got dtype " + std::string(descr(dtype)));
  }
  if (dtype == DType::int64) {
    std::vector<std::int32_t> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto v = element<std::int64_t>(*this, i);
      if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max()) {
        throw InvalidInput("integer value " + std::to_string(v) + " at index " + std::to_string(i) +
                           " does not fit a class id");
      }
      out[i] = static_cast<std::int32_t>(v);
    }
    return out;
  }
  return convert<std::int32_t>(*this);
}

std::vector<std::int64_t> Array::as_int64() const {
  if (dtype == DType::float32 || dtype == DType::float64) {
    throw InvalidInput("expected an integer array, got dtype " + std::string(descr(dtype)));
  }
  return convert<std::int64_t>(*this);
}

std::vector<double> Array::as_double() const { return convert<double>(*this); }

Array Array::from(std::span<const std::int32_t> v, std::vector<std::size_t> s) {
  return make(v, std::move(s), DType::int32);
}
Array Array::from(std::span<const std::int64_t> v, std::vector<std::size_t> s) {
  return make(v, std::move(s), DType::int64);
}
Array Array::from(std::span<const float> v, std::vector<std::size_t> s) {
  return make(v, std::move(s), DType::float32);
}
Array Array::from(std::span<const double> v, std::vector<std::size_t> s) {
  return make(v, std::move(s), DType::float64);
}

Array parse(std::span<const std::byte> bytes, std::string_view origin) {
  if (bytes.size() < kPreamble || std::memcmp(bytes.data(), kMagic, kMagicSize) != 0) {
    fail(origin, "not an NPY file (bad magic)");
  }
  const auto major = static_cast<unsigned>(bytes[6]);
  const auto minor = static_cast<unsigned>(bytes[7]);
  if (major != 1 || minor != 0) {
    fail(origin, "unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
  }
  const std::size_t header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreamble + header_len) fail(origin, "truncated header");
  const std::string_view header(reinterpret_cast<const char*>(bytes.data() + kPreamble), header_len);

  std::string descr_text;
  bool fortran = false;
  Array a;
  HeaderParser(header, origin).parse(descr_text, fortran, a.shape);
  if (descr_text.size() == 3 && descr_text[0] == '>') {
    fail(origin, "unsupported byte order in dtype '" + descr_text + "'");
  }
  a.dtype = parse_descr(descr_text, origin);
  if (fortran) fail(origin, "unsupported order: Fortran-ordered arrays are not supported");
  if (a.shape.empty() || a.shape.size() > kMaxDims) {
    fail(origin, "unsupported rank " + std::to_string(a.shape.size()) + " (expected 1 to 4 dimensions)");
  }
  const std::size_t count = a.size();
  const std::size_t need = count * item_size(a.dtype);
  const std::size_t have = bytes.size() - kPreamble - header_len;
  if (have < need) {
    fail(origin, "truncated payload: expected " + std::to_string(need) + " bytes, found " + std::to_string(have));
  }
  if (have > need) fail(origin, "payload has " + std::to_string(have - need) + " unexpected trailing bytes");
  a.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(kPreamble + header_len), bytes.end());
  return a;
}

std::vector<std::byte> serialize(const Array& a) {
  if (a.shape.empty() || a.shape.size() > kMaxDims) throw InvalidInput("NPY arrays need 1 to 4 dimensions");
  if (a.data.size() != a.size() * item_size(a.dtype)) throw InvalidInput("NPY array data does not match its shape");
  std::string header = "{'descr': '" + std::string(descr(a.dtype)) + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < a.shape.size(); ++i) {
    if (i > 0) header += ", ";
    header += std::to_string(a.shape[i]);
  }
  if (a.shape.size() == 1) header += ',';
  header += ')';
  header += ", }";
  // Pad with spaces so the data starts on a 64-byte boundary.
  const std::size_t unpadded = kPreamble + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';
  if (header.size() > 0xffff) throw InvalidInput("NPY header too long");

  std::vector<std::byte> out;
  out.reserve(kPreamble + header.size() + a.data.size());
  for (std::size_t i = 0; i < kMagicSize; ++i) out.push_back(static_cast<std::byte>(kMagic[i]));
  out.push_back(std::byte{1});
  out.push_back(std::byte{0});
  out.push_back(static_cast<std::byte>(header.size() & 0xff));
  out.push_back(static_cast<std::byte>(header.size() >> 8));
  for (char ch : header) out.push_back(static_cast<std::byte>(ch));
  out.insert(out.end(), a.data.begin(), a.data.end());
  return out;
}

Array load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const std::byte*>(raw.data());
  return parse(std::span<const std::byte>(p, raw.size()), path.string());
}

void save(const std::filesystem::path& path, const Array& array) {
  const std::vector<std::byte> bytes = serialize(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace segcal::npy
