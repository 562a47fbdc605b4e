#pragma once

#include "d2im/fields.hpp"
#include "d2im/geometry.hpp"
#include "d2im/laplacian_loss.hpp"
#include "d2im/metrics.hpp"
#include "d2im/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace d2im {

// Little-endian binary containers. Every format starts with a four byte magic.
// Float maps (NMAP, PGRD, GLAP): u32 width, u32 height, then each channel as a
// full plane of f32 values, the coverage mask last (0.0 or 1.0).
// SSDF: u32 count, then per point 3 x f32 position, f32 value, f32 weight, u8 side.
// D2IM: u32 r x3 + base f32 values, front u32 w, u32 h + f32 values, back the
// same, camera R (row-major 9 x f32), t (3 x f32), pixel_scale f32,
// resolution 2 x u32, delta f32.
// Readers throw ParseError for a wrong magic, truncated data or trailing bytes.

std::vector<std::uint8_t> encode(const NormalMap& map);
std::vector<std::uint8_t> encode(const ProjectedGradientMap& map);
std::vector<std::uint8_t> encode(const GtLaplacianMap& map);
std::vector<std::uint8_t> encode(const SampledSdf& samples);
std::vector<std::uint8_t> encode(const DisentangledField& field);

NormalMap decode_normal_map(const std::vector<std::uint8_t>& bytes);
ProjectedGradientMap decode_projected_gradient(const std::vector<std::uint8_t>& bytes);
GtLaplacianMap decode_gt_laplacian(const std::vector<std::uint8_t>& bytes);
SampledSdf decode_samples(const std::vector<std::uint8_t>& bytes);
DisentangledField decode_field(const std::vector<std::uint8_t>& bytes);

/// Whole-file helpers. Throw Error on I/O failure.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

void save_field(const DisentangledField& field, const std::filesystem::path& path);
DisentangledField load_field(const std::filesystem::path& path);

/// {"cd":..., "iou":..., "ecd3d":..., "ecd2d":..., "params":{...}}; an empty
/// edge set is written as null together with "<name>_no_edges": true.
std::string metric_report_json(const MetricReport& report);

} // namespace d2im
