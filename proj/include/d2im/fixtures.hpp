#pragma once

#include "d2im/geometry.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace d2im::fixtures {

/// Subdivided icosahedron projected onto a sphere (level 4: 5120 triangles).
TriMesh icosphere(double radius = 0.4, int level = 4);

/// Axis-aligned box with 8 vertices and 12 outward-facing triangles.
TriMesh box(const Vec3& min, const Vec3& max);

/// Cube with every edge chamfered by `bevel` (24 vertices, 44 triangles).
TriMesh beveled_cube(double half = 0.25, double bevel = 0.02);

/// Thin slab (x thickness 0.02) next to a 0.3-thick block; two closed components.
TriMesh thin_slab_beside_block();

/// Rectangular plate [-half_xy, half_xy]^2 x [-half_z, half_z] whose front
/// (+z) face is displaced by height(x, y). `height` must vanish on the rim.
TriMesh plate(double half_xy, double half_z, int subdivisions,
              const std::function<double(double, double)>& height);

inline constexpr double kPlateHalfXY = 0.375;
inline constexpr double kPlateHalfZ = 0.1;
inline constexpr double kBumpAmplitude = 0.02;
inline constexpr double kBumpFrequency = 8.0; // sin(8 pi x) sin(8 pi y)

double bump_height(double x, double y);
TriMesh flat_plate(int subdivisions = 96);
TriMesh bumpy_plate(int subdivisions = 96);

/// The canonical fixture set, in a stable order: (file stem, mesh).
std::vector<std::pair<std::string, TriMesh>> canonical_set();

/// Looks up a fixture by stem; throws UsageError for unknown names.
TriMesh by_name(const std::string& name);

} // namespace d2im::fixtures
