#include "wsseg/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace wsseg {

namespace {

std::vector<unsigned char> slurp(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw FormatError("cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  const long sz = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<unsigned char> buf(sz > 0 ? static_cast<size_t>(sz) : 0);
  if (!buf.empty() && std::fread(buf.data(), 1, buf.size(), f) != buf.size()) {
    std::fclose(f);
    throw FormatError("short read on " + path);
  }
  std::fclose(f);
  return buf;
}

void spew(const std::string& path, const void* data, size_t len) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw FormatError("cannot open " + path + " for writing");
  if (len && std::fwrite(data, 1, len, f) != len) {
    std::fclose(f);
    throw FormatError("short write on " + path);
  }
  std::fclose(f);
}

struct Cursor {
  const std::vector<unsigned char>& buf;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n, const char* what) const {
    if (pos + n > buf.size())
      throw FormatError(path + ": truncated, need " + std::to_string(n) + " byte(s) for " + what +
                        " but only " + std::to_string(buf.size() - pos) + " remain");
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return buf[pos++];
  }
  uint32_t u32le(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf[pos + i];
    pos += 4;
    return v;
  }
};

constexpr char kTensorMagic[4] = {'T', 'S', 'R', '1'};

}  // namespace

Tensor read_tensor(const std::string& path) {
  const std::vector<unsigned char> buf = slurp(path);
  Cursor cur{buf, 0, path};
  cur.need(4, "magic");
  if (std::memcmp(buf.data(), kTensorMagic, 4) != 0)
    throw FormatError(path + ": bad magic, not a tensor file");
  cur.pos = 4;
  const uint8_t dtype = cur.u8("dtype");
  if (dtype != 1 && dtype != 2)
    throw FormatError(path + ": unknown dtype code " + std::to_string(dtype));
  const uint8_t rank = cur.u8("rank");
  if (rank < 1 || rank > 3) throw FormatError(path + ": rank must be 1..3, got " + std::to_string(rank));

  Tensor t;
  uint64_t count = 1;
  for (int d = 0; d < rank; ++d) {
    const uint32_t dim = cur.u32le("dims");
    if (dim == 0) throw FormatError(path + ": zero-sized dimension");
    t.dims.push_back(dim);
    count *= dim;
    if (count > (uint64_t{1} << 32))
      throw FormatError(path + ": element count overflows the format limit");
  }
  const size_t esz = dtype == 1 ? 4 : 8;
  cur.need(count * esz, "payload");
  if (buf.size() != cur.pos + count * esz)
    throw FormatError(path + ": trailing bytes after payload");

  t.v.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t bits = 0;
    for (size_t b = 0; b < esz; ++b)
      bits |= static_cast<uint64_t>(buf[cur.pos + i * esz + b]) << (8 * b);
    double val;
    if (dtype == 1) {
      float fv;
      const uint32_t b32 = static_cast<uint32_t>(bits);
      std::memcpy(&fv, &b32, 4);
      val = static_cast<double>(fv);
    } else {
      std::memcpy(&val, &bits, 8);
    }
    if (!std::isfinite(val)) throw FormatError(path + ": non-finite value in payload");
    t.v[i] = val;
  }
  return t;
}

void write_tensor(const std::string& path, const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > 3)
    throw DimensionError("write_tensor: rank must be 1..3");
  uint64_t count = 1;
  for (uint32_t d : t.dims) {
    if (d == 0) throw DimensionError("write_tensor: zero-sized dimension");
    count *= d;
    if (count > (uint64_t{1} << 32))
      throw DimensionError("write_tensor: element count overflows the format limit");
  }
  if (count != t.v.size()) throw DimensionError("write_tensor: dims do not match value count");

  std::vector<unsigned char> buf;
  buf.reserve(6 + 4 * t.dims.size() + 8 * t.v.size());
  buf.insert(buf.end(), kTensorMagic, kTensorMagic + 4);
  buf.push_back(2);  // f64
  buf.push_back(static_cast<unsigned char>(t.dims.size()));
  for (uint32_t d : t.dims)
    for (int b = 0; b < 4; ++b) buf.push_back(static_cast<unsigned char>((d >> (8 * b)) & 0xff));
  for (double val : t.v) {
    if (!std::isfinite(val)) throw NumericError("write_tensor: non-finite value");
    uint64_t bits;
    std::memcpy(&bits, &val, 8);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xff));
  }
  spew(path, buf.data(), buf.size());
}

Tensor tensor_from(const Grid2& g) {
  Tensor t;
  t.dims = {static_cast<uint32_t>(g.h), static_cast<uint32_t>(g.w)};
  t.v = g.v;
  return t;
}

Tensor tensor_from(const Grid3& g) {
  Tensor t;
  t.dims = {static_cast<uint32_t>(g.c), static_cast<uint32_t>(g.h), static_cast<uint32_t>(g.w)};
  t.v = g.v;
  return t;
}

Grid2 grid2_from(const Tensor& t) {
  if (t.dims.size() != 2) throw FormatError("expected a rank-2 tensor");
  Grid2 g(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
  g.v = t.v;
  return g;
}

Grid3 grid3_from(const Tensor& t) {
  if (t.dims.size() != 3) throw FormatError("expected a rank-3 tensor");
  Grid3 g(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]));
  g.v = t.v;
  return g;
}

namespace {

// PNM header token: skips whitespace and '#' comment lines.
std::string pnm_token(Cursor& cur) {
  while (cur.pos < cur.buf.size()) {
    const unsigned char c = cur.buf[cur.pos];
    if (c == '#') {
      while (cur.pos < cur.buf.size() && cur.buf[cur.pos] != '\n') ++cur.pos;
    } else if (std::isspace(c)) {
      ++cur.pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (cur.pos < cur.buf.size() && !std::isspace(cur.buf[cur.pos]) && cur.buf[cur.pos] != '#')
    tok.push_back(static_cast<char>(cur.buf[cur.pos++]));
  if (tok.empty()) throw FormatError(cur.path + ": truncated header");
  return tok;
}

long pnm_int(Cursor& cur, const char* what) {
  const std::string tok = pnm_token(cur);
  try {
    size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError(cur.path + ": bad " + what + " field '" + tok + "'");
  }
}

struct PnmHeader {
  int w, h;
  long maxval;
  size_t data_pos;
};

PnmHeader parse_pnm(const std::string& path, const std::vector<unsigned char>& buf,
                    const char* magic) {
  Cursor cur{buf, 0, path};
  const std::string m = pnm_token(cur);
  if (m != magic) throw FormatError(path + ": expected " + magic + " header, got '" + m + "'");
  PnmHeader hd;
  hd.w = static_cast<int>(pnm_int(cur, "width"));
  hd.h = static_cast<int>(pnm_int(cur, "height"));
  hd.maxval = pnm_int(cur, "maxval");
  if (hd.w <= 0 || hd.h <= 0) throw FormatError(path + ": non-positive image dims");
  if (hd.maxval <= 0 || hd.maxval > 65535) throw FormatError(path + ": bad maxval");
  cur.need(1, "header terminator");
  if (!std::isspace(buf[cur.pos])) throw FormatError(path + ": missing header terminator");
  hd.data_pos = cur.pos + 1;
  return hd;
}

void check_payload(const std::string& path, const std::vector<unsigned char>& buf,
                   const PnmHeader& hd, size_t bytes_per_sample, size_t samples) {
  const size_t need = samples * bytes_per_sample;
  if (buf.size() < hd.data_pos + need)
    throw FormatError(path + ": truncated pixel data, need " + std::to_string(need) +
                      " byte(s), have " + std::to_string(buf.size() - hd.data_pos));
  if (buf.size() > hd.data_pos + need) throw FormatError(path + ": trailing bytes after pixels");
}

}  // namespace

Grid3 read_ppm(const std::string& path) {
  const std::vector<unsigned char> buf = slurp(path);
  const PnmHeader hd = parse_pnm(path, buf, "P6");
  if (hd.maxval > 255) throw FormatError(path + ": only 8-bit color images are supported");
  check_payload(path, buf, hd, 1, static_cast<size_t>(hd.w) * hd.h * 3);
  Grid3 img(3, hd.h, hd.w);
  const unsigned char* p = buf.data() + hd.data_pos;
  for (int y = 0; y < hd.h; ++y)
    for (int x = 0; x < hd.w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<double>(*p++);
  return img;
}

void write_ppm(const std::string& path, const Grid3& image) {
  if (image.c != 3) throw DimensionError("write_ppm: image must have 3 channels");
  std::string header = "P6\n" + std::to_string(image.w) + " " + std::to_string(image.h) + "\n255\n";
  std::vector<unsigned char> buf(header.begin(), header.end());
  for (int y = 0; y < image.h; ++y)
    for (int x = 0; x < image.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::round(image.at(c, y, x));
        buf.push_back(static_cast<unsigned char>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v)));
      }
  spew(path, buf.data(), buf.size());
}

LabelMap read_pgm_labels(const std::string& path) {
  const std::vector<unsigned char> buf = slurp(path);
  const PnmHeader hd = parse_pnm(path, buf, "P5");
  if (hd.maxval > 255) throw FormatError(path + ": label maps must be 8-bit");
  check_payload(path, buf, hd, 1, static_cast<size_t>(hd.w) * hd.h);
  LabelMap lm(hd.h, hd.w);
  for (int i = 0; i < lm.size(); ++i) lm.label[i] = buf[hd.data_pos + i];
  return lm;
}

void write_pgm_labels(const std::string& path, const LabelMap& labels) {
  for (int lab : labels.label)
    if (lab < 0 || lab > 255) throw DimensionError("write_pgm_labels: label does not fit 8 bits");
  std::string header = "P5\n" + std::to_string(labels.w) + " " + std::to_string(labels.h) + "\n255\n";
  std::vector<unsigned char> buf(header.begin(), header.end());
  for (int lab : labels.label) buf.push_back(static_cast<unsigned char>(lab));
  spew(path, buf.data(), buf.size());
}

RegionPartition read_regions_pgm(const std::string& path) {
  const std::vector<unsigned char> buf = slurp(path);
  const PnmHeader hd = parse_pnm(path, buf, "P5");
  const size_t n = static_cast<size_t>(hd.w) * hd.h;
  std::vector<int> ids(n);
  if (hd.maxval > 255) {
    check_payload(path, buf, hd, 2, n);
    for (size_t i = 0; i < n; ++i)
      ids[i] = (static_cast<int>(buf[hd.data_pos + 2 * i]) << 8) | buf[hd.data_pos + 2 * i + 1];
  } else {
    check_payload(path, buf, hd, 1, n);
    for (size_t i = 0; i < n; ++i) ids[i] = buf[hd.data_pos + i];
  }
  return RegionPartition::from_ids(hd.h, hd.w, ids);
}

void write_regions_pgm(const std::string& path, const RegionPartition& r) {
  if (r.region_count > 65536)
    throw DimensionError("write_regions_pgm: too many regions for 16 bits");
  std::string header = "P5\n" + std::to_string(r.w) + " " + std::to_string(r.h) + "\n65535\n";
  std::vector<unsigned char> buf(header.begin(), header.end());
  for (int id : r.id) {
    buf.push_back(static_cast<unsigned char>((id >> 8) & 0xff));  // big-endian
    buf.push_back(static_cast<unsigned char>(id & 0xff));
  }
  spew(path, buf.data(), buf.size());
}

BinaryMask read_pgm_mask(const std::string& path) {
  const LabelMap lm = read_pgm_labels(path);
  BinaryMask m(lm.h, lm.w);
  for (int i = 0; i < lm.size(); ++i) m.m[i] = lm.label[i] != 0 ? 1 : 0;
  return m;
}

void write_pgm_mask(const std::string& path, const BinaryMask& m) {
  LabelMap lm(m.h, m.w);
  for (int i = 0; i < m.size(); ++i) lm.label[i] = m.m[i] ? 255 : 0;
  write_pgm_labels(path, lm);
}

TagSet read_tags(const std::string& path, int class_count) {
  const std::vector<unsigned char> buf = slurp(path);
  const std::string text(buf.begin(), buf.end());
  const std::string key = "present=";
  const size_t at = text.find(key);
  if (at == std::string::npos) throw FormatError(path + ": missing 'present=' line");
  size_t pos = at + key.size();
  std::vector<int> labels;
  std::string tok;
  auto flush = [&]() {
    if (tok.empty()) return;
    try {
      size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      labels.push_back(v);
    } catch (const std::exception&) {
      throw FormatError(path + ": bad label '" + tok + "' in tag list");
    }
    tok.clear();
  };
  for (; pos < text.size() && text[pos] != '\n' && text[pos] != '\r'; ++pos) {
    const char c = text[pos];
    if (c == ',')
      flush();
    else if (!std::isspace(static_cast<unsigned char>(c)))
      tok.push_back(c);
  }
  flush();
  try {
    return TagSet::from_present(class_count, labels);
  } catch (const DimensionError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_tags(const std::string& path, const TagSet& tags) {
  std::string out = "present=";
  bool first = true;
  for (int k : tags.present) {
    if (k == 0) continue;
    if (!first) out += ",";
    out += std::to_string(k);
    first = false;
  }
  out += "\n";
  spew(path, out.data(), out.size());
}

}  // namespace wsseg
