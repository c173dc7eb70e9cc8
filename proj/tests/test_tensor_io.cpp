#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "odp/errors.hpp"
#include "odp/prediction_set.hpp"
#include "odp/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace odp;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "odp_test_tensor_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("2x2 tensor writes a 42-byte file with the documented layout") {
  const TensorF32 t(Shape{2, 2}, {1.f, 2.f, 3.f, 4.f});
  const auto path = scratch("two_by_two.odpt");
  write_tensor(t, path);
  const auto bytes = slurp(path);
  REQUIRE(bytes.size() == 42);
  CHECK(bytes.substr(0, 4) == "ODPT");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 1);   // f32
  CHECK(bytes[9] == 2);   // ndim
  CHECK(bytes[10] == 2);  // dims[0] low byte
  // 1.0f little-endian = 00 00 80 3f
  CHECK(static_cast<unsigned char>(bytes[26 + 2]) == 0x80);
  CHECK(static_cast<unsigned char>(bytes[26 + 3]) == 0x3f);
  CHECK(read_f32(path) == t);
}

TEST_CASE("labels round-trip as i64") {
  const TensorI64 labels(Shape{5}, {0, 4, 2, -1, 1LL << 40});
  const auto path = scratch("labels.odpt");
  write_tensor(labels, path);
  CHECK(slurp(path).size() == 4 + 4 + 1 + 1 + 8 + 5 * 8);
  CHECK(read_i64(path) == labels);
  CHECK_THROWS_AS(read_f32(path), FormatError);
}

TEST_CASE("degenerate shapes are rejected") {
  CHECK_THROWS_AS(TensorF32(Shape{}, {}), ValidationError);
  CHECK_THROWS_AS(TensorF32(Shape{3, 0}, {}), ValidationError);
  CHECK_THROWS_AS(TensorF32(Shape{2, 2}, {1.f, 2.f, 3.f}), ValidationError);
}

TEST_CASE("random tensors round-trip byte-identically") {
  std::mt19937_64 g(7);
  std::uniform_int_distribution<int> rank(1, 3), extent(1, 6);
  std::uniform_real_distribution<float> val(-1e6f, 1e6f);
  const auto a = scratch("rt_a.odpt");
  const auto b = scratch("rt_b.odpt");
  for (int trial = 0; trial < 1000; ++trial) {
    Shape s(rank(g));
    for (auto& d : s) d = extent(g);
    std::vector<float> data(shape_volume(s));
    for (auto& v : data) v = val(g);
    const TensorF32 t(s, data);
    write_tensor(t, a);
    const auto back = read_f32(a);
    REQUIRE(back == t);
    write_tensor(back, b);
    REQUIRE(slurp(a) == slurp(b));
  }
}

TEST_CASE("read errors") {
  const auto good = scratch("good.odpt");
  write_tensor(TensorF32(Shape{3, 3}, std::vector<float>(9, 0.5f)), good);
  const auto bytes = slurp(good);

  SUBCASE("wrong magic") {
    const auto p = scratch("magic.odpt");
    spit(p, "XXXX" + bytes.substr(4));
    CHECK_THROWS_AS(read_tensor(p), FormatError);
  }
  SUBCASE("payload one float short") {
    const auto p = scratch("short.odpt");
    spit(p, bytes.substr(0, bytes.size() - 4));
    CHECK_THROWS_AS(read_tensor(p), LengthError);
  }
  SUBCASE("NaN at flat index 7") {
    std::string patched = bytes;
    const float nan = std::nanf("");
    std::memcpy(patched.data() + odpt::header_size(2) + 7 * 4, &nan, 4);
    const auto p = scratch("nan.odpt");
    spit(p, patched);
    try {
      read_tensor(p);
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
      CHECK(e.index() == 7);
      CHECK(std::string(e.what()).find("index 7") != std::string::npos);
    }
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_tensor(scratch("absent.odpt")), IoError); }
}

TEST_CASE("writing non-finite values is refused") {
  TensorF32 t(Shape{4});
  t[2] = INFINITY;
  CHECK_THROWS_AS(write_tensor(t, scratch("inf.odpt")), NonFiniteError);
}

TEST_CASE("assemble_prediction_set") {
  const TensorF32 logits(Shape{5, 3});
  SUBCASE("valid with labels") {
    auto set = assemble_prediction_set(logits, std::nullopt, TensorI64(Shape{5}, {0, 1, 2, 1, 0}));
    CHECK(set.num_samples() == 5);
    CHECK(set.num_classes() == 3);
  }
  SUBCASE("feature sample mismatch names both shapes") {
    try {
      assemble_prediction_set(logits, TensorF32(Shape{4, 8}));
      FAIL("expected AssemblyError");
    } catch (const AssemblyError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[4x8]") != std::string::npos);
      CHECK(msg.find("[5x3]") != std::string::npos);
    }
  }
  SUBCASE("aug class mismatch") {
    try {
      assemble_prediction_set(logits, std::nullopt, std::nullopt, TensorF32(Shape{3, 5, 4}));
      FAIL("expected AssemblyError");
    } catch (const AssemblyError& e) {
      CHECK(std::string(e.what()).find("4 vs 3") != std::string::npos);
    }
  }
  SUBCASE("label out of range") {
    CHECK_THROWS_AS(assemble_prediction_set(logits, std::nullopt, TensorI64(Shape{5}, {0, 1, 3, 1, 0})),
                    LabelRangeError);
    CHECK_THROWS_AS(assemble_prediction_set(logits, std::nullopt, TensorI64(Shape{5}, {0, -1, 0, 1, 0})),
                    LabelRangeError);
  }
  SUBCASE("single class and single view are rejected") {
    CHECK_THROWS_AS(assemble_prediction_set(TensorF32(Shape{5, 1})), AssemblyError);
    CHECK_THROWS_AS(assemble_prediction_set(logits, std::nullopt, std::nullopt, TensorF32(Shape{1, 5, 3})),
                    AssemblyError);
  }
}

TEST_CASE("model records need validation labels and matching classes") {
  auto val = assemble_prediction_set(TensorF32(Shape{2, 3}), std::nullopt, TensorI64(Shape{2}, {0, 1}));
  auto test = assemble_prediction_set(TensorF32(Shape{4, 3}));
  CHECK_NOTHROW(make_model_record("m", val, test));
  CHECK_THROWS_AS(make_model_record("m", test, test), AssemblyError);
  CHECK_THROWS_AS(make_model_record("m", val, assemble_prediction_set(TensorF32(Shape{4, 2}))), AssemblyError);
}
