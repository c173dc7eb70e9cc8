#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>

#include "odp/tensor.hpp"

namespace odp {

// ODPT container: "ODPT" | u32 version=1 | u8 dtype | u8 ndim | u64 dims[ndim] | payload.
// Everything little-endian, payload row-major.
namespace odpt {
inline constexpr char kMagic[4] = {'O', 'D', 'P', 'T'};
inline constexpr std::uint32_t kVersion = 1;
enum class DType : std::uint8_t { F32 = 1, I64 = 2 };
inline constexpr std::size_t header_size(std::size_t ndim) { return 4 + 4 + 1 + 1 + 8 * ndim; }
}  // namespace odpt

using AnyTensor = std::variant<TensorF32, TensorI64>;

void write_tensor(const TensorF32& t, const std::filesystem::path& path);
void write_tensor(const TensorI64& t, const std::filesystem::path& path);

AnyTensor read_tensor(const std::filesystem::path& path);

// Typed convenience wrappers; a dtype mismatch is a FormatError.
TensorF32 read_f32(const std::filesystem::path& path);
TensorI64 read_i64(const std::filesystem::path& path);

}  // namespace odp

namespace odp {

// Header-only read: dtype and shape without touching the payload.
struct TensorHeader {
  odpt::DType dtype;
  Shape shape;
};
TensorHeader read_header(const std::filesystem::path& path);

}  // namespace odp
