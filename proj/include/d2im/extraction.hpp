#pragma once

#include "d2im/fields.hpp"
#include "d2im/geometry.hpp"

#include <array>
#include <vector>

namespace d2im {

/// Field samples on an n^3 lattice of cell corners spanning [-0.5, 0.5]^3
/// (spacing 1 / (n - 1)), x fastest.
struct FieldGrid {
  int n = 0;
  std::vector<double> values;

  double spacing() const { return 1.0 / (n - 1); }
  Vec3 node(int i, int j, int k) const {
    const double h = spacing();
    return {kBoxMin + i * h, kBoxMin + j * h, kBoxMin + k * h};
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * n + j) * n + i;
  }
};

/// Evaluates `field` at every lattice node. Throws Error naming the first
/// node with a non-finite value.
FieldGrid sample_field(const ScalarField& field, int n);

/// Samples the fused field with per-node front/back selection driven by the
/// fitted base field (see evaluate_fused).
FieldGrid sample_fused(const DisentangledField& field, int n);

/// Marching cubes over the zero level set. Vertices are welded per lattice
/// edge and triangles face the positive side. Corner values equal to zero are
/// treated as +1e-9. Returns an empty mesh when the field never changes sign.
TriMesh marching_cubes(const FieldGrid& grid);

/// The 256-case triangulation table: for each corner mask (bit c set when
/// corner c is negative) a list of triangles given as cube edge ids.
/// Corner c sits at (c & 1, (c >> 1) & 1, (c >> 2) & 1); see cube_edge().
const std::array<std::vector<std::array<int, 3>>, 256>& marching_cubes_table();
/// Endpoints (corner ids) of cube edge e in [0, 12).
std::array<int, 2> cube_edge(int e);

} // namespace d2im
