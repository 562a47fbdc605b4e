#include "d2im/extraction.hpp"

#include "d2im/parallel.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <sstream>

namespace d2im {

namespace {

// Edge e = axis * 4 + (the two other corner bits): runs from corner c0 (bit
// `axis` clear) to c0 | (1 << axis).
std::array<std::array<int, 2>, 12> make_edges() {
  std::array<std::array<int, 2>, 12> edges{};
  int e = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    for (int k = 0; k < 4; ++k) {
      const int c0 = ((k & 1) << b) | (((k >> 1) & 1) << c);
      edges[e++] = {c0, c0 | (1 << axis)};
    }
  }
  return edges;
}

const std::array<std::array<int, 2>, 12> kEdges = make_edges();

Vec3 corner_position(int c) { return {double(c & 1), double((c >> 1) & 1), double((c >> 2) & 1)}; }

Vec3 edge_midpoint(int e) {
  return 0.5 * (corner_position(kEdges[e][0]) + corner_position(kEdges[e][1]));
}

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e) {
    if ((kEdges[e][0] == a && kEdges[e][1] == b) || (kEdges[e][0] == b && kEdges[e][1] == a)) {
      return e;
    }
  }
  return -1;
}

bool share_face(int e1, int e2) {
  for (int axis = 0; axis < 3; ++axis) {
    const int bit = 1 << axis;
    const bool fixed1 = (kEdges[e1][0] ^ kEdges[e1][1]) != bit;
    const bool fixed2 = (kEdges[e2][0] ^ kEdges[e2][1]) != bit;
    if (fixed1 && fixed2 && (kEdges[e1][0] & bit) == (kEdges[e2][0] & bit)) {
      return true;
    }
  }
  return false;
}

// Builds each case by tracing the iso-contour around the six cube faces. On a
// face whose negative corners sit on a diagonal, the negative corners are
// always cut off individually. That rule depends only on the face's own four
// values, so neighbouring cells agree and the output is closed.
std::array<std::vector<std::array<int, 3>>, 256> build_table() {
  std::array<std::vector<std::array<int, 3>>, 256> table;
  for (int mask = 0; mask < 256; ++mask) {
    auto inside = [mask](int c) { return ((mask >> c) & 1) != 0; };
    std::map<int, int> next; // directed contour segments, edge -> edge
    for (int axis = 0; axis < 3; ++axis) {
      const int b = (axis + 1) % 3;
      const int c = (axis + 2) % 3;
      for (int side = 0; side < 2; ++side) {
        const Vec3 outward = (side ? 1.0 : -1.0) * Vec3::Unit(axis);
        // Face corners in cyclic order.
        const int base = side << axis;
        const std::array<int, 4> corners = {base, base | (1 << b), base | (1 << b) | (1 << c),
                                            base | (1 << c)};
        auto add_segment = [&](int e1, int e2, int in_corner) {
          const Vec3 a = edge_midpoint(e1);
          const Vec3 bpt = edge_midpoint(e2);
          const Vec3 cpt = corner_position(in_corner);
          // Negative corner on the right when the face is seen from outside.
          if ((bpt - a).cross(cpt - a).dot(outward) < 0.0) {
            next[e1] = e2;
          } else {
            next[e2] = e1;
          }
        };
        int n_inside = 0;
        for (int corner : corners) n_inside += inside(corner);
        if (n_inside == 0 || n_inside == 4) {
          continue;
        }
        const bool diagonal = n_inside == 2 && inside(corners[0]) == inside(corners[2]);
        if (diagonal) {
          for (int k = 0; k < 4; ++k) {
            if (inside(corners[k])) {
              add_segment(edge_between(corners[k], corners[(k + 3) % 4]),
                          edge_between(corners[k], corners[(k + 1) % 4]), corners[k]);
            }
          }
          continue;
        }
        std::vector<int> crossing;
        int in_corner = -1;
        for (int k = 0; k < 4; ++k) {
          const int c0 = corners[k];
          const int c1 = corners[(k + 1) % 4];
          if (inside(c0) != inside(c1)) {
            crossing.push_back(edge_between(c0, c1));
            if (in_corner < 0) {
              in_corner = inside(c0) ? c0 : c1;
            }
          }
        }
        add_segment(crossing[0], crossing[1], in_corner);
      }
    }
    while (!next.empty()) {
      std::vector<int> loop;
      int e = next.begin()->first;
      while (next.count(e)) {
        loop.push_back(e);
        const int n = next[e];
        next.erase(e);
        e = n;
      }
      // Fan from a vertex whose chords all cross the cube interior. A chord
      // lying in a face could be repeated by the neighbouring cell.
      const std::size_t len = loop.size();
      std::size_t start = 0;
      for (std::size_t s = 0; s < len; ++s) {
        bool interior = true;
        for (std::size_t k = 2; k + 1 < len; ++k) {
          interior = interior && !share_face(loop[s], loop[(s + k) % len]);
        }
        if (interior) {
          start = s;
          break;
        }
      }
      for (std::size_t k = 1; k + 1 < len; ++k) {
        table[mask].push_back({loop[start], loop[(start + k) % len], loop[(start + k + 1) % len]});
      }
    }
  }
  return table;
}

} // namespace

const std::array<std::vector<std::array<int, 3>>, 256>& marching_cubes_table() {
  static const auto table = build_table();
  return table;
}

std::array<int, 2> cube_edge(int e) {
  return kEdges.at(static_cast<std::size_t>(e));
}

FieldGrid sample_field(const ScalarField& field, int n) {
  require(n >= 2, "sample_field: resolution must be >= 2");
  FieldGrid grid;
  grid.n = n;
  grid.values.resize(static_cast<std::size_t>(n) * n * n);
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        grid.values[k * plane + static_cast<std::size_t>(j) * n + i] =
            field(grid.node(i, j, static_cast<int>(k)));
      }
    }
  });
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (!std::isfinite(grid.values[grid.index(i, j, k)])) {
          const Vec3 p = grid.node(i, j, k);
          std::ostringstream msg;
          msg << "non-finite field value at lattice point (" << i << ", " << j << ", " << k
              << ") = (" << p.x() << ", " << p.y() << ", " << p.z() << ")";
          throw Error(msg.str());
        }
      }
    }
  }
  return grid;
}

FieldGrid sample_fused(const DisentangledField& field, int n) {
  return sample_field([&field](const Vec3& p) { return evaluate_fused(field, p); }, n);
}

TriMesh marching_cubes(const FieldGrid& grid) {
  require(grid.n >= 2, "marching_cubes: resolution must be >= 2");
  require(grid.values.size() == static_cast<std::size_t>(grid.n) * grid.n * grid.n,
          "marching_cubes: value count does not match resolution");
  const int n = grid.n;
  const auto& table = marching_cubes_table();

  std::vector<double> values(grid.values);
  for (auto& v : values) {
    if (!std::isfinite(v)) {
      throw Error("marching_cubes: grid contains non-finite values");
    }
    if (v == 0.0) {
      v = 1e-9;
    }
  }

  TriMesh mesh;
  // Vertex id per lattice edge, keyed by (origin node, axis).
  std::vector<std::int32_t> edge_vertex(values.size() * 3, -1);
  const std::size_t stride[3] = {1, static_cast<std::size_t>(n), static_cast<std::size_t>(n) * n};

  auto vertex_on = [&](std::size_t node, int axis) {
    std::int32_t& id = edge_vertex[node * 3 + axis];
    if (id < 0) {
      const std::size_t other = node + stride[axis];
      const double v0 = values[node];
      const double v1 = values[other];
      const double t = v0 / (v0 - v1);
      const int i = static_cast<int>(node % n);
      const int j = static_cast<int>((node / n) % n);
      const int k = static_cast<int>(node / stride[2]);
      Vec3 p = grid.node(i, j, k);
      p[axis] += t * grid.spacing();
      id = static_cast<std::int32_t>(mesh.vertices.size());
      mesh.vertices.push_back(p);
    }
    return id;
  };

  for (int k = 0; k + 1 < n; ++k) {
    for (int j = 0; j + 1 < n; ++j) {
      for (int i = 0; i + 1 < n; ++i) {
        const std::size_t origin = grid.index(i, j, k);
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          const std::size_t node =
              origin + (c & 1) * stride[0] + ((c >> 1) & 1) * stride[1] + ((c >> 2) & 1) * stride[2];
          if (values[node] < 0.0) {
            mask |= 1 << c;
          }
        }
        const auto& tris = table[mask];
        if (tris.empty()) {
          continue;
        }
        std::array<std::int32_t, 12> ids;
        ids.fill(-1);
        for (const auto& tri : tris) {
          Triangle out;
          for (int v = 0; v < 3; ++v) {
            const int e = tri[v];
            if (ids[e] < 0) {
              const int c0 = kEdges[e][0];
              const int axis = std::countr_zero(static_cast<unsigned>(c0 ^ kEdges[e][1]));
              const std::size_t node = origin + (c0 & 1) * stride[0] + ((c0 >> 1) & 1) * stride[1] +
                                       ((c0 >> 2) & 1) * stride[2];
              ids[e] = vertex_on(node, axis);
            }
            out[v] = ids[e];
          }
          mesh.triangles.push_back(out);
        }
      }
    }
  }
  if (!mesh.triangles.empty()) {
    mesh.compute_normals();
  }
  return mesh;
}

} // namespace d2im
