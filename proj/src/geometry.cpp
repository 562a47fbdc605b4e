#include "d2im/geometry.hpp"

#include "d2im/parallel.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace d2im {

// ---------------------------------------------------------------- TriMesh

Vec3 TriMesh::face_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriMesh::face_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

void TriMesh::compute_normals() {
  normals.assign(vertices.size(), Vec3::Zero());
  for (const auto& tri : triangles) {
    // Unnormalized cross product = 2 * area * unit normal.
    const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
    for (auto v : tri) {
      normals[v] += n;
    }
  }
  for (auto& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
  }
}

void TriMesh::validate() const {
  const auto n = static_cast<std::int64_t>(vertices.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto v : triangles[t]) {
      if (v < 0 || v >= n) {
        throw Error("triangle " + std::to_string(t) + " references vertex " + std::to_string(v) +
                    " but the mesh has " + std::to_string(n) + " vertices");
      }
    }
  }
}

Aabb TriMesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) {
    box.extend(v);
  }
  return box;
}

double TriMesh::area() const {
  double total = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    total += face_area(t);
  }
  return total;
}

// ---------------------------------------------------------------- OBJ

namespace {

double parse_double(std::string_view token, std::size_t line) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("malformed number '" + std::string(token) + "'", line);
  }
  return value;
}

std::int64_t parse_index(std::string_view token, std::size_t line) {
  const auto slash = token.find('/');
  const auto head = token.substr(0, slash);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
  if (ec != std::errc() || ptr != head.data() + head.size() || value == 0) {
    throw ParseError("malformed face index '" + std::string(token) + "'", line);
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    if (i > start) {
      tokens.push_back(line.substr(start, i - start));
    }
  }
  return tokens;
}

} // namespace

TriMesh parse_obj(const std::string& text) {
  TriMesh mesh;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  struct PendingFace {
    std::vector<std::int64_t> indices;
    std::size_t line;
  };
  std::vector<PendingFace> faces;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const auto tokens = split(std::string_view(line).substr(0, hash));
    if (tokens.empty()) {
      continue;
    }
    if (tokens[0] == "v") {
      if (tokens.size() < 4) {
        throw ParseError("vertex record needs 3 coordinates", line_no);
      }
      mesh.vertices.emplace_back(parse_double(tokens[1], line_no), parse_double(tokens[2], line_no),
                                 parse_double(tokens[3], line_no));
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) {
        throw ParseError("face record needs at least 3 vertices", line_no);
      }
      PendingFace face{{}, line_no};
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        std::int64_t idx = parse_index(tokens[k], line_no);
        // Negative indices are relative to the vertices read so far.
        idx = idx < 0 ? static_cast<std::int64_t>(mesh.vertices.size()) + idx : idx - 1;
        face.indices.push_back(idx);
      }
      faces.push_back(std::move(face));
    }
  }

  const auto vcount = static_cast<std::int64_t>(mesh.vertices.size());
  for (const auto& face : faces) {
    for (auto idx : face.indices) {
      if (idx < 0 || idx >= vcount) {
        throw ParseError("face index " + std::to_string(idx + 1) + " out of range (" +
                             std::to_string(vcount) + " vertices)",
                         face.line);
      }
    }
    for (std::size_t k = 1; k + 1 < face.indices.size(); ++k) {
      mesh.triangles.push_back({static_cast<std::int32_t>(face.indices[0]),
                                static_cast<std::int32_t>(face.indices[k]),
                                static_cast<std::int32_t>(face.indices[k + 1])});
    }
  }
  if (mesh.triangles.empty()) {
    throw ParseError("mesh has no faces", 0);
  }
  mesh.compute_normals();
  return mesh;
}

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_obj(buffer.str());
}

std::string format_obj(const TriMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 40 + mesh.triangles.size() * 24);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    const int n = std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out.append(buf, static_cast<std::size_t>(n));
  }
  for (const auto& t : mesh.triangles) {
    const int n = std::snprintf(buf, sizeof(buf), "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << format_obj(mesh);
  if (!out) {
    throw Error("write failed for " + path.string());
  }
}

TriMesh normalize(TriMesh mesh, double extent) {
  require(extent > 0.0, "normalize: extent must be positive");
  const Aabb box = mesh.bounds();
  if (box.empty()) {
    throw Error("normalize: mesh has no vertices");
  }
  const double largest = box.extent().maxCoeff();
  if (largest <= 0.0) {
    throw Error("normalize: mesh bounding box is degenerate");
  }
  const Vec3 center = box.center();
  const double scale = extent / largest;
  for (auto& v : mesh.vertices) {
    v = (v - center) * scale;
  }
  mesh.compute_normals();
  return mesh;
}

bool is_edge_manifold_closed(const TriMesh& mesh) {
  std::map<std::pair<std::int32_t, std::int32_t>, int> directed;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      ++directed[{t[k], t[(k + 1) % 3]}];
    }
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) {
      return false;
    }
    const auto it = directed.find({edge.second, edge.first});
    if (it == directed.end() || it->second != 1) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- Camera

Camera Camera::front(int resolution) {
  Camera cam;
  cam.width = resolution;
  cam.height = resolution;
  cam.pixel_scale = resolution;
  return cam;
}

Camera Camera::rotated_y(double radians, int resolution) {
  Camera cam = front(resolution);
  cam.rotation = Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix();
  return cam;
}

void Camera::validate() const {
  const Mat3 gram = rotation.transpose() * rotation;
  if (!((gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-6)) {
    throw UsageError("camera rotation is not orthonormal");
  }
  if (!(pixel_scale > 0.0)) {
    throw UsageError("camera pixel_scale must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw UsageError("camera resolution must be positive");
  }
}

Vec2 Camera::project(const Vec3& p) const {
  const Vec3 q = camera_point(p);
  return Vec2(q.x(), q.y()) * pixel_scale + center();
}

Vec3 Camera::unproject(const Vec2& u, double depth) const {
  const Vec2 xy = (u - center()) / pixel_scale;
  const Vec3 q(xy.x(), xy.y(), depth);
  return rotation.transpose() * (q - translation);
}

// ---------------------------------------------------------------- closest point

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               Feature& feature) {
  // Voronoi-region walk from Ericson, "Real-Time Collision Detection" 5.1.5.
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    feature = Feature::vertex0;
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    feature = Feature::vertex1;
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    feature = Feature::edge01;
    return a + ab * (d1 / (d1 - d3));
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    feature = Feature::vertex2;
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    feature = Feature::edge20;
    return a + ac * (d2 / (d2 - d6));
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    feature = Feature::edge12;
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = 1.0 / (va + vb + vc);
  feature = Feature::face;
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// ---------------------------------------------------------------- MeshSdf

namespace {

constexpr int kLeafSize = 4;

double box_distance_squared(const Aabb& box, const Vec3& p) {
  const Vec3 d = (box.min - p).cwiseMax(p - box.max).cwiseMax(Vec3::Zero());
  return d.squaredNorm();
}

constexpr double kBaryTolerance = 1e-9;

bool ray_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    if (std::isinf(inv_dir[k])) {
      // Ray parallel to this slab: inside it for all t, or never.
      if (origin[k] < box.min[k] || origin[k] > box.max[k]) {
        return false;
      }
      continue;
    }
    double near = (box.min[k] - origin[k]) * inv_dir[k];
    double far = (box.max[k] - origin[k]) * inv_dir[k];
    if (near > far) {
      std::swap(near, far);
    }
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) {
      return false;
    }
  }
  return true;
}

} // namespace

MeshSdf::MeshSdf(TriMesh mesh, double crease_angle_degrees) : mesh_(std::move(mesh)) {
  mesh_.validate();
  if (mesh_.normals.size() != mesh_.vertices.size()) {
    mesh_.compute_normals();
  }
  face_normals_.resize(mesh_.triangles.size());
  std::vector<Vec3> centroids(mesh_.triangles.size());
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    face_normals_[t] = mesh_.face_normal(t);
    const auto& tri = mesh_.triangles[t];
    centroids[t] = (mesh_.vertices[tri[0]] + mesh_.vertices[tri[1]] + mesh_.vertices[tri[2]]) / 3.0;
    if (mesh_.face_area(t) > 0.0) {
      order_.push_back(static_cast<std::int32_t>(t)); // degenerate faces never enter the tree
    }
  }
  if (order_.empty()) {
    throw Error("mesh has no non-degenerate triangles");
  }
  nodes_.reserve(2 * order_.size() / kLeafSize + 1);
  build(0, static_cast<std::int32_t>(order_.size()), centroids);
  build_pseudo_normals();
  build_corner_normals(crease_angle_degrees);
}

std::int32_t MeshSdf::build(std::int32_t first, std::int32_t count, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centroid_box;
  for (std::int32_t i = first; i < first + count; ++i) {
    const auto& tri = mesh_.triangles[order_[i]];
    for (auto v : tri) {
      box.extend(mesh_.vertices[v]);
    }
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= kLeafSize) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  centroid_box.extent().maxCoeff(&axis);
  const std::int32_t mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](std::int32_t a, std::int32_t b) {
                     return centroids[a][axis] < centroids[b][axis] ||
                            (centroids[a][axis] == centroids[b][axis] && a < b);
                   });
  const std::int32_t left = build(first, mid - first, centroids);
  const std::int32_t right = build(mid, first + count - mid, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void MeshSdf::build_pseudo_normals() {
  const auto& V = mesh_.vertices;
  std::unordered_map<std::uint64_t, Vec3> edge_sum;
  auto key = [](std::int32_t a, std::int32_t b) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (lo << 32) | hi;
  };
  vertex_normals_.assign(V.size(), Vec3::Zero());
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const auto& tri = mesh_.triangles[t];
    const Vec3& n = face_normals_[t];
    for (int k = 0; k < 3; ++k) {
      edge_sum.try_emplace(key(tri[k], tri[(k + 1) % 3]), Vec3::Zero()).first->second += n;
      const Vec3 e1 = V[tri[(k + 1) % 3]] - V[tri[k]];
      const Vec3 e2 = V[tri[(k + 2) % 3]] - V[tri[k]];
      const double l1 = e1.norm();
      const double l2 = e2.norm();
      if (l1 > 0.0 && l2 > 0.0) {
        const double angle = std::acos(std::clamp(e1.dot(e2) / (l1 * l2), -1.0, 1.0));
        vertex_normals_[tri[k]] += angle * n;
      }
    }
  }
  edge_normals_.resize(mesh_.triangles.size());
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const auto& tri = mesh_.triangles[t];
    for (int k = 0; k < 3; ++k) {
      edge_normals_[t][k] = edge_sum.at(key(tri[k], tri[(k + 1) % 3]));
    }
  }
}

void MeshSdf::build_corner_normals(double crease_angle_degrees) {
  const double cos_crease = std::cos(crease_angle_degrees * std::numbers::pi / 180.0);
  std::vector<std::vector<std::int32_t>> incident(mesh_.vertices.size());
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    for (auto v : mesh_.triangles[t]) {
      incident[v].push_back(static_cast<std::int32_t>(t));
    }
  }
  corner_normals_.resize(mesh_.triangles.size());
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const Vec3& own = face_normals_[t];
    for (int k = 0; k < 3; ++k) {
      Vec3 sum = Vec3::Zero();
      for (auto f : incident[mesh_.triangles[t][k]]) {
        if (face_normals_[f].dot(own) >= cos_crease) {
          sum += face_normals_[f] * mesh_.face_area(f);
        }
      }
      const double len = sum.norm();
      corner_normals_[t][k] = len > 0.0 ? Vec3(sum / len) : own;
    }
  }
}

ClosestPoint MeshSdf::closest_point(const Vec3& p) const {
  ClosestPoint best;
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance_squared(node.box, p) >= best.distance_squared) {
      continue;
    }
    if (node.left < 0) {
      for (std::int32_t i = node.first; i < node.first + node.count; ++i) {
        const std::int32_t t = order_[i];
        const auto& tri = mesh_.triangles[t];
        Feature feature = Feature::face;
        const Vec3 q = closest_point_on_triangle(p, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                                 mesh_.vertices[tri[2]], feature);
        const double d2 = (q - p).squaredNorm();
        if (d2 < best.distance_squared) {
          best = {q, d2, t, feature};
        }
      }
      continue;
    }
    const double dl = box_distance_squared(nodes_[node.left].box, p);
    const double dr = box_distance_squared(nodes_[node.right].box, p);
    // Push the farther child first so the nearer one is visited next.
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

double MeshSdf::signed_distance(const Vec3& p) const {
  const ClosestPoint c = closest_point(p);
  const auto& tri = mesh_.triangles[c.triangle];
  Vec3 pseudo;
  switch (c.feature) {
    case Feature::face: pseudo = face_normals_[c.triangle]; break;
    case Feature::edge01: pseudo = edge_normals_[c.triangle][0]; break;
    case Feature::edge12: pseudo = edge_normals_[c.triangle][1]; break;
    case Feature::edge20: pseudo = edge_normals_[c.triangle][2]; break;
    case Feature::vertex0: pseudo = vertex_normals_[tri[0]]; break;
    case Feature::vertex1: pseudo = vertex_normals_[tri[1]]; break;
    case Feature::vertex2: pseudo = vertex_normals_[tri[2]]; break;
  }
  const double distance = std::sqrt(c.distance_squared);
  return (p - c.point).dot(pseudo) < 0.0 ? -distance : distance;
}

std::optional<RayHit> MeshSdf::intersect(const Vec3& origin, const Vec3& direction) const {
  const Vec3 inv_dir = direction.cwiseInverse();
  std::optional<RayHit> best;
  double t_best = std::numeric_limits<double>::infinity();
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!ray_box(node.box, origin, inv_dir, t_best)) {
      continue;
    }
    if (node.left >= 0) {
      stack[top++] = node.left;
      stack[top++] = node.right;
      continue;
    }
    for (std::int32_t i = node.first; i < node.first + node.count; ++i) {
      const std::int32_t t = order_[i];
      const auto& tri = mesh_.triangles[t];
      // Moller-Trumbore, two-sided. The small barycentric tolerance keeps rays
      // that pass exactly through a shared edge from slipping between faces.
      const Vec3& a = mesh_.vertices[tri[0]];
      const Vec3 e1 = mesh_.vertices[tri[1]] - a;
      const Vec3 e2 = mesh_.vertices[tri[2]] - a;
      const Vec3 pvec = direction.cross(e2);
      const double det = e1.dot(pvec);
      if (std::abs(det) < 1e-300) {
        continue;
      }
      const double inv_det = 1.0 / det;
      const Vec3 tvec = origin - a;
      const double u = tvec.dot(pvec) * inv_det;
      if (u < -kBaryTolerance || u > 1.0 + kBaryTolerance) {
        continue;
      }
      const Vec3 qvec = tvec.cross(e1);
      const double v = direction.dot(qvec) * inv_det;
      if (v < -kBaryTolerance || u + v > 1.0 + kBaryTolerance) {
        continue;
      }
      const double dist = e2.dot(qvec) * inv_det;
      if (dist > 0.0 && dist < t_best) {
        t_best = dist;
        best = RayHit{dist, t, u, v};
      }
    }
  }
  return best;
}

Vec3 MeshSdf::shading_normal(const RayHit& hit) const {
  const auto& corners = corner_normals_[hit.triangle];
  const Vec3 n = (1.0 - hit.b1 - hit.b2) * corners[0] + hit.b1 * corners[1] + hit.b2 * corners[2];
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : face_normals_[hit.triangle];
}

// ---------------------------------------------------------------- rendering

NormalMap render_normal_map(const MeshSdf& mesh, const Camera& camera) {
  camera.validate();
  NormalMap map(camera.width, camera.height);
  const Aabb box = mesh.mesh().bounds();
  // Start every ray in front of the whole mesh.
  const double start_depth = (camera.rotation * box.center() + camera.translation).z() +
                             box.extent().norm() + 1.0;
  const Vec3 direction = camera.ray_direction();
  parallel_for(static_cast<std::size_t>(camera.height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 origin = camera.unproject(Vec2(x + 0.5, y + 0.5), start_depth);
      const auto hit = mesh.intersect(origin, direction);
      if (!hit) {
        continue;
      }
      const std::size_t idx = map.index(x, y);
      map.normals[idx] = camera.rotation * mesh.shading_normal(*hit);
      map.mask[idx] = 1;
    }
  });
  return map;
}

NormalMap render_normal_map(const TriMesh& mesh, const Camera& camera) {
  return render_normal_map(MeshSdf(mesh), camera);
}

} // namespace d2im
