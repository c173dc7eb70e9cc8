#include "odp/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "odp/errors.hpp"

namespace odp {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw ValidationError("tensor must have at least one dimension");
  if (shape_.size() > 255) throw ValidationError("tensor rank exceeds 255");
  for (std::size_t d : shape_) {
    if (d == 0) throw ValidationError("tensor dimension must be positive, got shape " + shape_string(shape_));
  }
  if (data_.size() != shape_volume(shape_)) {
    throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string(shape_));
  }
}

template class Tensor<float>;
template class Tensor<std::int64_t>;

namespace {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
  }
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(p[b]) << (8 * b);
  return v;
}

template <typename T>
std::string encode(const Tensor<T>& t, odpt::DType dtype) {
  std::string out;
  out.reserve(odpt::header_size(t.ndim()) + t.size() * sizeof(T));
  out.append(odpt::kMagic, 4);
  put_le<std::uint32_t>(out, odpt::kVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.ndim()));
  for (std::size_t d : t.shape()) put_le<std::uint64_t>(out, d);
  for (T v : t.data()) {
    if constexpr (std::is_same_v<T, float>) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    } else {
      put_le<std::uint64_t>(out, static_cast<std::uint64_t>(v));
    }
  }
  return out;
}

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_tensor(const TensorF32& t, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NonFiniteError("refusing to write non-finite value at flat index " + std::to_string(i), i);
    }
  }
  write_bytes(encode(t, odpt::DType::F32), path);
}

void write_tensor(const TensorI64& t, const std::filesystem::path& path) {
  write_bytes(encode(t, odpt::DType::I64), path);
}

AnyTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open tensor file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string where = " in " + path.string();

  if (bytes.size() < odpt::header_size(0) || std::memcmp(p, odpt::kMagic, 4) != 0) {
    throw FormatError("bad magic, not an ODPT file" + where);
  }
  const auto version = get_le<std::uint32_t>(p + 4);
  if (version != odpt::kVersion) {
    throw FormatError("unsupported ODPT version " + std::to_string(version) + where);
  }
  const auto dtype = static_cast<odpt::DType>(p[8]);
  if (dtype != odpt::DType::F32 && dtype != odpt::DType::I64) {
    throw FormatError("unknown dtype code " + std::to_string(p[8]) + where);
  }
  const std::size_t ndim = p[9];
  if (ndim == 0) throw ValidationError("zero-dimensional tensor" + where);
  const std::size_t header = odpt::header_size(ndim);
  if (bytes.size() < header) throw LengthError("truncated header" + where);

  Shape shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    shape[i] = static_cast<std::size_t>(get_le<std::uint64_t>(p + 10 + 8 * i));
    if (shape[i] == 0) throw ValidationError("zero-length dimension" + where);
  }
  const std::size_t count = shape_volume(shape);
  const std::size_t width = dtype == odpt::DType::F32 ? 4 : 8;
  const std::size_t expected = header + count * width;
  if (bytes.size() != expected) {
    throw LengthError("payload length mismatch" + where + ": expected " + std::to_string(expected) +
                      " bytes, found " + std::to_string(bytes.size()));
  }

  const unsigned char* payload = p + header;
  if (dtype == odpt::DType::F32) {
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload + 4 * i));
      if (!std::isfinite(data[i])) {
        throw NonFiniteError("non-finite value at flat index " + std::to_string(i) + where, i);
      }
    }
    return TensorF32(std::move(shape), std::move(data));
  }
  std::vector<std::int64_t> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = static_cast<std::int64_t>(get_le<std::uint64_t>(payload + 8 * i));
  }
  return TensorI64(std::move(shape), std::move(data));
}

TensorF32 read_f32(const std::filesystem::path& path) {
  auto any = read_tensor(path);
  if (auto* t = std::get_if<TensorF32>(&any)) return std::move(*t);
  throw FormatError("expected f32 tensor in " + path.string());
}

TensorI64 read_i64(const std::filesystem::path& path) {
  auto any = read_tensor(path);
  if (auto* t = std::get_if<TensorI64>(&any)) return std::move(*t);
  throw FormatError("expected i64 tensor in " + path.string());
}

}  // namespace odp

namespace odp {

TensorHeader read_header(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open tensor file: " + path.string());
  unsigned char fixed[10];
  if (!f.read(reinterpret_cast<char*>(fixed), sizeof fixed) || std::memcmp(fixed, odpt::kMagic, 4) != 0) {
    throw FormatError("bad magic, not an ODPT file in " + path.string());
  }
  const auto dtype = static_cast<odpt::DType>(fixed[8]);
  if (dtype != odpt::DType::F32 && dtype != odpt::DType::I64) {
    throw FormatError("unknown dtype code in " + path.string());
  }
  Shape shape(fixed[9]);
  for (auto& d : shape) {
    unsigned char raw[8];
    if (!f.read(reinterpret_cast<char*>(raw), 8)) throw LengthError("truncated header in " + path.string());
    d = static_cast<std::size_t>(get_le<std::uint64_t>(raw));
  }
  return {dtype, std::move(shape)};
}

}  // namespace odp
