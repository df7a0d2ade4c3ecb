#pragma once

#include <string>
#include <vector>

#include "wsseg/crf.hpp"
#include "wsseg/loss.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg {

// Binary tensor container: magic "TSR1", one dtype byte (1 = f32, 2 = f64),
// one rank byte (1..3), rank little-endian u32 dims, then the row-major
// little-endian payload. Writes always emit f64; f32 payloads widen on read.
struct Tensor {
  std::vector<uint32_t> dims;
  std::vector<double> v;
};

Tensor read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor& t);

Tensor tensor_from(const Grid2& g);
Tensor tensor_from(const Grid3& g);
Grid2 grid2_from(const Tensor& t);
Grid3 grid3_from(const Tensor& t);

// 8-bit binary PPM (P6); values land in [0, 255] as doubles. Comments in the
// header are accepted; writes round and clamp.
Grid3 read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Grid3& image);

// 8-bit binary PGM (P5) label maps.
LabelMap read_pgm_labels(const std::string& path);
void write_pgm_labels(const std::string& path, const LabelMap& labels);

// Region partitions as 16-bit big-endian PGM (maxval 65535). Arbitrary ids
// are remapped to a dense range on read.
RegionPartition read_regions_pgm(const std::string& path);
void write_regions_pgm(const std::string& path, const RegionPartition& r);

// Masks as 8-bit PGM: any nonzero sample is inside; writes use 255.
BinaryMask read_pgm_mask(const std::string& path);
void write_pgm_mask(const std::string& path, const BinaryMask& m);

// Image-level tag file: a text line "present=1,3" listing foreground labels
// (background is implied). An empty list after '=' is allowed.
TagSet read_tags(const std::string& path, int class_count);
void write_tags(const std::string& path, const TagSet& tags);

}  // namespace wsseg
