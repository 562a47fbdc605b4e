#include "d2im/fields.hpp"

#include "d2im/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace d2im {

namespace {

// Cell origin and fractional offset along one axis of a lattice with n nodes.
inline void locate(double coord, int n, int& i0, double& t) {
  coord = std::clamp(coord, 0.0, static_cast<double>(n - 1));
  i0 = std::min(static_cast<int>(coord), n - 2);
  t = coord - i0;
}

} // namespace

// ---------------------------------------------------------------- BaseField

BaseField::BaseField(int resolution, double fill) : resolution_(resolution) {
  require(resolution >= 2, "BaseField: resolution must be >= 2");
  values_.assign(static_cast<std::size_t>(resolution) * resolution * resolution, fill);
}

BaseField BaseField::from_function(int resolution, const ScalarField& f) {
  BaseField field(resolution, 0.0);
  const int r = resolution;
  parallel_for(static_cast<std::size_t>(r) * r * r, [&](std::size_t idx) {
    const int i = static_cast<int>(idx % r);
    const int j = static_cast<int>((idx / r) % r);
    const int k = static_cast<int>(idx / (static_cast<std::size_t>(r) * r));
    field.values_[idx] = f(field.node(i, j, k));
  });
  return field;
}

Vec3 BaseField::node(int i, int j, int k) const {
  const double h = spacing();
  return {kBoxMin + i * h, kBoxMin + j * h, kBoxMin + k * h};
}

std::array<Tap, 8> BaseField::taps(const Vec3& p) const {
  const double inv_h = resolution_ - 1;
  int i0, j0, k0;
  double tx, ty, tz;
  locate((p.x() - kBoxMin) * inv_h, resolution_, i0, tx);
  locate((p.y() - kBoxMin) * inv_h, resolution_, j0, ty);
  locate((p.z() - kBoxMin) * inv_h, resolution_, k0, tz);
  const std::size_t base = index(i0, j0, k0);
  const std::size_t sy = resolution_;
  const std::size_t sz = static_cast<std::size_t>(resolution_) * resolution_;
  return {{{base, (1 - tx) * (1 - ty) * (1 - tz)},
           {base + 1, tx * (1 - ty) * (1 - tz)},
           {base + sy, (1 - tx) * ty * (1 - tz)},
           {base + sy + 1, tx * ty * (1 - tz)},
           {base + sz, (1 - tx) * (1 - ty) * tz},
           {base + sz + 1, tx * (1 - ty) * tz},
           {base + sz + sy, (1 - tx) * ty * tz},
           {base + sz + sy + 1, tx * ty * tz}}};
}

double BaseField::query(const Vec3& p) const {
  double sum = 0.0;
  for (const auto& tap : taps(p)) {
    sum += tap.weight * values_[tap.index];
  }
  return sum;
}

Vec3 BaseField::gradient(const Vec3& p, double h) const {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 step = Vec3::Zero();
    step[a] = h;
    g[a] = (query(p + step) - query(p - step)) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------- DisplacementMap

DisplacementMap::DisplacementMap(int width, int height, double image_width, double image_height,
                                 double fill)
    : width_(width), height_(height), image_width_(image_width), image_height_(image_height) {
  require(width >= 2 && height >= 2, "DisplacementMap: resolution must be >= 2 in both axes");
  require(image_width > 0.0 && image_height > 0.0, "DisplacementMap: image extent must be positive");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

DisplacementMap DisplacementMap::for_camera(const Camera& camera, int width, int height, double fill) {
  return DisplacementMap(width, height, camera.width, camera.height, fill);
}

std::array<Tap, 4> DisplacementMap::taps(const Vec2& u) const {
  int i0, j0;
  double tx, ty;
  locate(u.x() / spacing_x() - 0.5, width_, i0, tx);
  locate(u.y() / spacing_y() - 0.5, height_, j0, ty);
  const std::size_t base = index(i0, j0);
  return {{{base, (1 - tx) * (1 - ty)},
           {base + 1, tx * (1 - ty)},
           {base + width_, (1 - tx) * ty},
           {base + width_ + 1, tx * ty}}};
}

double DisplacementMap::query(const Vec2& u) const {
  double sum = 0.0;
  for (const auto& tap : taps(u)) {
    sum += tap.weight * values_[tap.index];
  }
  return sum;
}

bool DisplacementMap::stencil_valid(const Vec2& u) const {
  const double mx = u.x() / spacing_x() - 0.5;
  const double my = u.y() / spacing_y() - 0.5;
  return mx >= 1.0 && mx <= width_ - 2.0 && my >= 1.0 && my <= height_ - 2.0;
}

std::optional<double> DisplacementMap::laplacian(const Vec2& u) const {
  if (!stencil_valid(u)) {
    return std::nullopt;
  }
  const double sx = spacing_x();
  const double sy = spacing_y();
  const double c = query(u);
  const double dxx = (query(u + Vec2(sx, 0)) + query(u - Vec2(sx, 0)) - 2.0 * c) / (sx * sx);
  const double dyy = (query(u + Vec2(0, sy)) + query(u - Vec2(0, sy)) - 2.0 * c) / (sy * sy);
  return dxx + dyy;
}

std::vector<Tap> DisplacementMap::laplacian_taps(const Vec2& u) const {
  std::vector<Tap> out;
  if (!stencil_valid(u)) {
    return out;
  }
  const double sx = spacing_x();
  const double sy = spacing_y();
  const double wx = 1.0 / (sx * sx);
  const double wy = 1.0 / (sy * sy);
  out.reserve(20);
  auto add = [&](const Vec2& at, double scale) {
    for (const auto& tap : taps(at)) {
      out.push_back({tap.index, tap.weight * scale});
    }
  };
  add(u, -2.0 * (wx + wy));
  add(u + Vec2(sx, 0), wx);
  add(u - Vec2(sx, 0), wx);
  add(u + Vec2(0, sy), wy);
  add(u - Vec2(0, sy), wy);
  return out;
}

// ---------------------------------------------------------------- fusion

DisentangledField DisentangledField::create(const Camera& camera, int base_resolution,
                                            int map_resolution, double delta, double base_fill) {
  camera.validate();
  require(delta > 0.0, "DisentangledField: delta must be positive");
  DisentangledField field;
  field.base = BaseField(base_resolution, base_fill);
  field.front = DisplacementMap::for_camera(camera, map_resolution, map_resolution);
  field.back = DisplacementMap::for_camera(camera, map_resolution, map_resolution);
  field.camera = camera;
  field.delta = delta;
  return field;
}

void DisentangledField::validate() const {
  camera.validate();
  if (!(delta > 0.0)) {
    throw UsageError("DisentangledField: delta must be positive");
  }
  if (base.resolution() < 2) {
    throw UsageError("DisentangledField: base field is empty");
  }
  if (front.width() < 2 || back.width() < 2) {
    throw UsageError("DisentangledField: displacement maps are empty");
  }
  if (front.width() != back.width() || front.height() != back.height()) {
    throw UsageError("DisentangledField: front and back maps differ in shape");
  }
  for (const DisplacementMap* m : {&front, &back}) {
    if (m->image_width() != camera.width || m->image_height() != camera.height) {
      throw UsageError("DisentangledField: map extent does not match the camera image");
    }
  }
}

double fuse(const DisentangledField& field, const Vec3& p, bool is_front) {
  const Vec2 u = field.camera.project(p);
  return field.base.query(p) + (is_front ? field.front.query(u) : field.back.query(u));
}

bool classify_front(const Vec3& p, const ScalarField& sdf, const Camera& camera, double delta,
                    double h, double cos_threshold) {
  if (!(std::abs(sdf(p)) < delta)) {
    return false;
  }
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 step = Vec3::Zero();
    step[a] = h;
    g[a] = sdf(p + step) - sdf(p - step);
  }
  const double len = g.norm();
  if (len == 0.0) {
    return false;
  }
  return g.dot(camera.toward_viewer()) / len > cos_threshold;
}

bool classify_front_by_base(const DisentangledField& field, const Vec3& p, double h) {
  return classify_front(
      p, [&](const Vec3& q) { return field.base.query(q); }, field.camera, field.delta, h);
}

double evaluate_fused(const DisentangledField& field, const Vec3& p, double h) {
  return fuse(field, p, classify_front_by_base(field, p, h));
}

DisplacementMap rasterize_residual(const MeshSdf& mesh, const BaseField& base, const Camera& camera,
                                   int width, int height) {
  camera.validate();
  DisplacementMap map = DisplacementMap::for_camera(camera, width, height);
  const Aabb box = mesh.mesh().bounds();
  const double start_depth = (camera.rotation * box.center() + camera.translation).z() +
                             box.extent().norm() + 1.0;
  const Vec3 direction = camera.ray_direction();
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
    const int j = static_cast<int>(row);
    for (int i = 0; i < width; ++i) {
      const Vec3 origin = camera.unproject(map.pixel_center(i, j), start_depth);
      if (const auto hit = mesh.intersect(origin, direction)) {
        map.at(i, j) = -base.query(origin + hit->t * direction);
      }
    }
  });
  return map;
}

} // namespace d2im
