#include "d2im/io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace d2im {

namespace {

class Writer {
 public:
  explicit Writer(const char (&magic)[5]) { bytes_.insert(bytes_.end(), magic, magic + 4); }

  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const char (&magic)[5]) : bytes_(bytes) {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) {
      throw ParseError(std::string("bad magic, expected ") + magic, 0);
    }
    pos_ = 4;
    magic_ = magic;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  /// Reads a dimension and checks it against a sane upper bound.
  int dim(std::uint32_t min_value) {
    const std::uint32_t v = u32();
    if (v < min_value || v > (1u << 16)) {
      throw ParseError(magic_ + ": dimension " + std::to_string(v) + " out of range", 0);
    }
    return static_cast<int>(v);
  }
  void finish() const {
    if (pos_ != bytes_.size()) {
      throw ParseError(magic_ + ": trailing bytes after payload", 0);
    }
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(magic_ + ": truncated data", 0);
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
  std::string magic_;
};

void check_size(std::size_t actual, int w, int h, const char* what) {
  require(actual == static_cast<std::size_t>(w) * h, std::string(what) + ": data size does not match dimensions");
}

void write_mask(Writer& out, const std::vector<std::uint8_t>& mask) {
  for (auto m : mask) out.f32(m ? 1.0 : 0.0);
}

std::vector<std::uint8_t> read_mask(Reader& in, std::size_t n) {
  std::vector<std::uint8_t> mask(n);
  for (auto& m : mask) m = in.f32() != 0.0 ? 1 : 0;
  return mask;
}

} // namespace

std::vector<std::uint8_t> encode(const NormalMap& map) {
  check_size(map.normals.size(), map.width, map.height, "NMAP");
  check_size(map.mask.size(), map.width, map.height, "NMAP");
  Writer out("NMAP");
  out.u32(static_cast<std::uint32_t>(map.width));
  out.u32(static_cast<std::uint32_t>(map.height));
  for (int c = 0; c < 3; ++c) {
    for (const auto& n : map.normals) out.f32(n[c]);
  }
  write_mask(out, map.mask);
  return out.take();
}

NormalMap decode_normal_map(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes, "NMAP");
  const int w = in.dim(1);
  const int h = in.dim(1);
  NormalMap map(w, h);
  for (int c = 0; c < 3; ++c) {
    for (auto& n : map.normals) n[c] = in.f32();
  }
  map.mask = read_mask(in, map.normals.size());
  in.finish();
  return map;
}

std::vector<std::uint8_t> encode(const ProjectedGradientMap& map) {
  check_size(map.data.size(), map.width, map.height, "PGRD");
  check_size(map.mask.size(), map.width, map.height, "PGRD");
  Writer out("PGRD");
  out.u32(static_cast<std::uint32_t>(map.width));
  out.u32(static_cast<std::uint32_t>(map.height));
  for (int c = 0; c < 2; ++c) {
    for (const auto& v : map.data) out.f32(v[c]);
  }
  write_mask(out, map.mask);
  return out.take();
}

ProjectedGradientMap decode_projected_gradient(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes, "PGRD");
  ProjectedGradientMap map;
  map.width = in.dim(1);
  map.height = in.dim(1);
  map.data.assign(static_cast<std::size_t>(map.width) * map.height, Vec2::Zero());
  for (int c = 0; c < 2; ++c) {
    for (auto& v : map.data) v[c] = in.f32();
  }
  map.mask = read_mask(in, map.data.size());
  in.finish();
  return map;
}

std::vector<std::uint8_t> encode(const GtLaplacianMap& map) {
  check_size(map.data.size(), map.width, map.height, "GLAP");
  check_size(map.mask.size(), map.width, map.height, "GLAP");
  Writer out("GLAP");
  out.u32(static_cast<std::uint32_t>(map.width));
  out.u32(static_cast<std::uint32_t>(map.height));
  for (double v : map.data) out.f32(v);
  write_mask(out, map.mask);
  return out.take();
}

GtLaplacianMap decode_gt_laplacian(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes, "GLAP");
  GtLaplacianMap map;
  map.width = in.dim(1);
  map.height = in.dim(1);
  map.data.resize(static_cast<std::size_t>(map.width) * map.height);
  for (auto& v : map.data) v = in.f32();
  map.mask = read_mask(in, map.data.size());
  in.finish();
  return map;
}

std::vector<std::uint8_t> encode(const SampledSdf& samples) {
  samples.validate();
  Writer out("SSDF");
  out.u32(static_cast<std::uint32_t>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (int a = 0; a < 3; ++a) out.f32(samples.points[i][a]);
    out.f32(samples.values[i]);
    out.f32(samples.weights[i]);
    out.u8(static_cast<std::uint8_t>(samples.sides[i]));
  }
  return out.take();
}

SampledSdf decode_samples(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes, "SSDF");
  const std::uint32_t count = in.u32();
  if (static_cast<std::uint64_t>(count) * 21 != bytes.size() - 8) {
    throw ParseError("SSDF: payload size does not match count " + std::to_string(count), 0);
  }
  SampledSdf s;
  s.points.resize(count);
  s.values.resize(count);
  s.weights.resize(count);
  s.sides.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (int a = 0; a < 3; ++a) s.points[i][a] = in.f32();
    s.values[i] = in.f32();
    s.weights[i] = in.f32();
    const std::uint8_t side = in.u8();
    if (side > 1) {
      throw ParseError("SSDF: invalid side label at row " + std::to_string(i), 0);
    }
    s.sides[i] = static_cast<Side>(side);
  }
  in.finish();
  return s;
}

std::vector<std::uint8_t> encode(const DisentangledField& field) {
  field.validate();
  Writer out("D2IM");
  const auto r = static_cast<std::uint32_t>(field.base.resolution());
  out.u32(r);
  out.u32(r);
  out.u32(r);
  for (double v : field.base.values()) out.f32(v);
  for (const DisplacementMap* map : {&field.front, &field.back}) {
    out.u32(static_cast<std::uint32_t>(map->width()));
    out.u32(static_cast<std::uint32_t>(map->height()));
    for (double v : map->values()) out.f32(v);
  }
  const Camera& cam = field.camera;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out.f32(cam.rotation(i, j));
  }
  for (int i = 0; i < 3; ++i) out.f32(cam.translation[i]);
  out.f32(cam.pixel_scale);
  out.u32(static_cast<std::uint32_t>(cam.width));
  out.u32(static_cast<std::uint32_t>(cam.height));
  out.f32(field.delta);
  return out.take();
}

DisentangledField decode_field(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes, "D2IM");
  const int rx = in.dim(2);
  const int ry = in.dim(2);
  const int rz = in.dim(2);
  if (rx != ry || ry != rz || rx > 512) {
    throw ParseError("D2IM: base grid must be cubic", 0);
  }
  DisentangledField field;
  field.base = BaseField(rx, 0.0);
  for (auto& v : field.base.values()) v = in.f32();
  std::vector<double> maps[2];
  int dims[2][2];
  for (int m = 0; m < 2; ++m) {
    dims[m][0] = in.dim(2);
    dims[m][1] = in.dim(2);
    maps[m].resize(static_cast<std::size_t>(dims[m][0]) * dims[m][1]);
    for (auto& v : maps[m]) v = in.f32();
  }
  Camera& cam = field.camera;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) cam.rotation(i, j) = in.f32();
  }
  for (int i = 0; i < 3; ++i) cam.translation[i] = in.f32();
  cam.pixel_scale = in.f32();
  cam.width = in.dim(1);
  cam.height = in.dim(1);
  field.delta = in.f32();
  in.finish();
  try {
    cam.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("D2IM: invalid camera: ") + e.what(), 0);
  }
  if (!(field.delta > 0.0)) {
    throw ParseError("D2IM: delta must be positive", 0);
  }
  field.front = DisplacementMap(dims[0][0], dims[0][1], cam.width, cam.height);
  field.front.values() = std::move(maps[0]);
  field.back = DisplacementMap(dims[1][0], dims[1][1], cam.width, cam.height);
  field.back.values() = std::move(maps[1]);
  return field;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open '" + path.string() + "' for reading");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error("failed writing '" + path.string() + "'");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void save_field(const DisentangledField& field, const std::filesystem::path& path) {
  write_file(path, encode(field));
}

DisentangledField load_field(const std::filesystem::path& path) { return decode_field(read_file(path)); }

std::string metric_report_json(const MetricReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["cd"] = report.cd;
  j["iou"] = report.iou;
  j["ecd3d"] = report.ecd3d.has_edges() ? ordered_json(*report.ecd3d.value) : ordered_json(nullptr);
  j["ecd2d"] = report.ecd2d.has_edges() ? ordered_json(*report.ecd2d.value) : ordered_json(nullptr);
  j["ecd3d_no_edges"] = !report.ecd3d.has_edges();
  j["ecd2d_no_edges"] = !report.ecd2d.has_edges();
  const MetricParams& p = report.params;
  j["params"] = {{"point_count", p.point_count},
                 {"iou_resolution", p.iou_resolution},
                 {"edge_neighbors", p.edge_neighbors},
                 {"edge_threshold", p.edge_threshold},
                 {"canny_sigma", p.canny.sigma},
                 {"canny_low", p.canny.low},
                 {"canny_high", p.canny.high},
                 {"seed", p.seed}};
  return j.dump(2) + "\n";
}

} // namespace d2im
