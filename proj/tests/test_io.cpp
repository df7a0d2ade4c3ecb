#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wsseg/io.hpp"

using wsseg::BinaryMask;
using wsseg::Grid3;
using wsseg::LabelMap;
using wsseg::RegionPartition;
using wsseg::TagSet;
using wsseg::Tensor;

namespace {

std::string tmp_path(const char* name) {
  return std::string("io_test_") + name;
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("tensor round-trips are bitwise exact across ranks") {
  oracle::Stream rng(701);
  const std::string path = tmp_path("roundtrip.tsr");
  for (int trial = 0; trial < 100; ++trial) {
    Tensor t;
    const int rank = 1 + rng.below(3);
    size_t n = 1;
    for (int d = 0; d < rank; ++d) {
      const uint32_t dim = 1 + rng.below(5);
      t.dims.push_back(dim);
      n *= dim;
    }
    t.v.resize(n);
    for (double& x : t.v) x = rng.range(-1e6, 1e6);
    wsseg::write_tensor(path, t);
    const Tensor back = wsseg::read_tensor(path);
    REQUIRE(back.dims == t.dims);
    for (size_t i = 0; i < n; ++i) CHECK(back.v[i] == t.v[i]);
  }
  std::remove(path.c_str());
}

TEST_CASE("truncated tensors are rejected with a byte-accounting message") {
  const std::string path = tmp_path("trunc.tsr");
  Tensor t;
  t.dims = {2, 3};
  t.v.assign(6, 1.5);
  wsseg::write_tensor(path, t);
  const std::string whole = slurp(path);
  for (size_t cut : {3ul, 5ul, 9ul, whole.size() - 1}) {
    write_bytes(path, whole.substr(0, cut));
    CHECK_THROWS_WITH_AS(static_cast<void>(wsseg::read_tensor(path)),
                         doctest::Contains("truncated"), wsseg::FormatError);
  }
  std::remove(path.c_str());
}

TEST_CASE("malformed tensor headers are rejected") {
  const std::string path = tmp_path("bad.tsr");
  auto le32 = [](uint32_t v) {
    std::string s(4, '\0');
    std::memcpy(s.data(), &v, 4);
    return s;
  };

  write_bytes(path, "NOPE" + std::string("\x02\x01", 2) + le32(1) + std::string(8, '\0'));
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);

  write_bytes(path, "TSR1" + std::string("\x03\x01", 2) + le32(1) + std::string(8, '\0'));
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);  // dtype 3

  write_bytes(path, "TSR1" + std::string("\x02\x00", 2));
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);  // rank 0

  write_bytes(path, "TSR1" + std::string("\x02\x04", 2) + le32(1) + le32(1) + le32(1) + le32(1));
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);  // rank 4

  write_bytes(path, "TSR1" + std::string("\x02\x02", 2) + le32(0) + le32(3));
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);  // zero dim

  // 65536 * 65536 * 2 elements: the element count runs past 2^32.
  write_bytes(path, "TSR1" + std::string("\x02\x03", 2) + le32(65536) + le32(65536) + le32(2));
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);

  // Valid header and payload plus one stray byte.
  Tensor t;
  t.dims = {2};
  t.v = {1.0, 2.0};
  wsseg::write_tensor(path, t);
  write_bytes(path, slurp(path) + "x");
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);

  std::remove(path.c_str());
}

TEST_CASE("32-bit payloads widen exactly on read") {
  const std::string path = tmp_path("f32.tsr");
  auto le32 = [](uint32_t v) {
    std::string s(4, '\0');
    std::memcpy(s.data(), &v, 4);
    return s;
  };
  const float vals[3] = {1.5f, -0.25f, 1024.125f};
  std::string payload(sizeof vals, '\0');
  std::memcpy(payload.data(), vals, sizeof vals);
  write_bytes(path, "TSR1" + std::string("\x01\x01", 2) + le32(3) + payload);
  const Tensor t = wsseg::read_tensor(path);
  REQUIRE(t.dims == std::vector<uint32_t>{3});
  CHECK(t.v[0] == 1.5);
  CHECK(t.v[1] == -0.25);
  CHECK(t.v[2] == 1024.125);
  std::remove(path.c_str());
}

TEST_CASE("non-finite values never cross the file boundary") {
  const std::string path = tmp_path("nan.tsr");
  Tensor t;
  t.dims = {1};
  t.v = {std::nan("")};
  CHECK_THROWS_AS(wsseg::write_tensor(path, t), wsseg::NumericError);

  auto le32 = [](uint32_t v) {
    std::string s(4, '\0');
    std::memcpy(s.data(), &v, 4);
    return s;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::string payload(8, '\0');
  std::memcpy(payload.data(), &inf, 8);
  write_bytes(path, "TSR1" + std::string("\x02\x01", 2) + le32(1) + payload);
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tensor(path)), wsseg::FormatError);
  std::remove(path.c_str());
}

TEST_CASE("grid adapters reject rank mismatches") {
  Tensor t;
  t.dims = {2, 2};
  t.v = {1, 2, 3, 4};
  CHECK_NOTHROW(static_cast<void>(wsseg::grid2_from(t)));
  CHECK_THROWS_AS(static_cast<void>(wsseg::grid3_from(t)), wsseg::FormatError);
  const wsseg::Grid2 g = wsseg::grid2_from(t);
  CHECK(g.at(1, 0) == 3.0);
}

TEST_CASE("color image round-trip and header comments") {
  oracle::Stream rng(702);
  const std::string path = tmp_path("img.ppm");
  Grid3 img(3, 5, 4);
  for (double& x : img.v) x = rng.below(256);
  wsseg::write_ppm(path, img);
  const Grid3 back = wsseg::read_ppm(path);
  REQUIRE(back.h == 5);
  REQUIRE(back.w == 4);
  for (size_t i = 0; i < img.v.size(); ++i) CHECK(back.v[i] == img.v[i]);

  // Same pixels, hand-built header with comment lines.
  const std::string body = slurp(path);
  const size_t pixel_start = body.size() - 3 * 5 * 4;
  write_bytes(path, "P6\n# a comment\n4 # trailing\n5\n# more\n255\n" + body.substr(pixel_start));
  const Grid3 commented = wsseg::read_ppm(path);
  for (size_t i = 0; i < img.v.size(); ++i) CHECK(commented.v[i] == img.v[i]);
  std::remove(path.c_str());
}

TEST_CASE("label map and mask round-trips") {
  oracle::Stream rng(703);
  const std::string path = tmp_path("lab.pgm");
  LabelMap lm(6, 3);
  for (int& l : lm.label) l = rng.below(5);
  wsseg::write_pgm_labels(path, lm);
  const LabelMap back = wsseg::read_pgm_labels(path);
  REQUIRE(back.h == 6);
  REQUIRE(back.w == 3);
  CHECK(back.label == lm.label);

  BinaryMask m(4, 4);
  for (auto& b : m.m) b = rng.unit() < 0.5 ? 1 : 0;
  wsseg::write_pgm_mask(path, m);
  const BinaryMask mb = wsseg::read_pgm_mask(path);
  CHECK(mb.m == m.m);
  // The file itself stores 255 for set pixels.
  const std::string bytes = slurp(path);
  bool saw255 = false;
  for (char c : bytes.substr(bytes.size() - 16))
    if (static_cast<unsigned char>(c) == 255) saw255 = true;
  CHECK(saw255 == (m.count() > 0));
  std::remove(path.c_str());
}

TEST_CASE("region partitions use 16-bit big-endian samples") {
  const std::string path = tmp_path("reg.pgm");
  const RegionPartition r = RegionPartition::from_ids(1, 3, {0, 258, 1});
  // Dense remap at construction: 0 -> 0, 258 -> 1, 1 -> 2.
  wsseg::write_regions_pgm(path, r);
  const std::string bytes = slurp(path);
  // Header then three 2-byte big-endian samples 0, 1, 2.
  const std::string tail = bytes.substr(bytes.size() - 6);
  CHECK(tail == std::string("\x00\x00\x00\x01\x00\x02", 6));
  CHECK(bytes.find("65535") != std::string::npos);

  const RegionPartition back = wsseg::read_regions_pgm(path);
  CHECK(back.region_count == 3);
  CHECK(back.id == r.id);
  std::remove(path.c_str());
}

TEST_CASE("region partitions round-trip ids above one byte") {
  oracle::Stream rng(704);
  const std::string path = tmp_path("regbig.pgm");
  std::vector<int> raw(24);
  for (int& v : raw) v = 250 + rng.below(600);
  const RegionPartition r = RegionPartition::from_ids(4, 6, raw);
  wsseg::write_regions_pgm(path, r);
  const RegionPartition back = wsseg::read_regions_pgm(path);
  CHECK(back.id == r.id);
  CHECK(back.region_count == r.region_count);
  std::remove(path.c_str());
}

TEST_CASE("tag files: round-trip, parsing, and validation") {
  const std::string path = tmp_path("tags.txt");
  const TagSet tags = TagSet::from_present(4, {1, 3});
  wsseg::write_tags(path, tags);
  const TagSet back = wsseg::read_tags(path, 4);
  CHECK(back.present == tags.present);
  CHECK(back.absent == tags.absent);

  write_bytes(path, "present=2\n");
  const TagSet single = wsseg::read_tags(path, 4);
  CHECK(single.present == std::vector<int>{0, 2});

  write_bytes(path, "present=\n");
  const TagSet none = wsseg::read_tags(path, 2);
  CHECK(none.present == std::vector<int>{0});
  CHECK(none.absent == std::vector<int>{1, 2});

  write_bytes(path, "presents are nice\n");
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tags(path, 2)), wsseg::FormatError);
  write_bytes(path, "present=1,banana\n");
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tags(path, 2)), wsseg::FormatError);
  write_bytes(path, "present=7\n");
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tags(path, 2)), wsseg::FormatError);
  write_bytes(path, "present=1,1\n");
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_tags(path, 2)), wsseg::FormatError);
  std::remove(path.c_str());
}

TEST_CASE("malformed image headers are rejected") {
  const std::string path = tmp_path("badimg");
  write_bytes(path, "P3\n2 2\n255\n");  // ASCII PPM, not the binary format
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_ppm(path)), wsseg::FormatError);
  write_bytes(path, "P6\n2 2\n70000\n" + std::string(12, '\0'));
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_ppm(path)), wsseg::FormatError);
  write_bytes(path, "P6\n2 2\n255\n" + std::string(11, '\0'));  // one byte short
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_ppm(path)), wsseg::FormatError);
  write_bytes(path, "P5\n2 2\n255\n" + std::string(5, '\0'));  // one byte long
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_pgm_labels(path)), wsseg::FormatError);
  write_bytes(path, "P5\n-1 2\n255\n");
  CHECK_THROWS_AS(static_cast<void>(wsseg::read_pgm_labels(path)), wsseg::FormatError);
  std::remove(path.c_str());
}
