#pragma once

#include "d2im/geometry.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace d2im {

using ScalarField = std::function<double(const Vec3&)>;

/// A parameter index and its interpolation weight.
struct Tap {
  std::size_t index;
  double weight;
};

/// Dense r^3 lattice over [-0.5, 0.5]^3 queried by trilinear interpolation.
/// Node (i, j, k) sits at -0.5 + (i, j, k) / (r - 1); storage is x fastest.
/// Queries outside the box are clamped onto it.
class BaseField {
 public:
  BaseField() = default;
  BaseField(int resolution, double fill);

  static BaseField from_function(int resolution, const ScalarField& f);

  int resolution() const { return resolution_; }
  double spacing() const { return 1.0 / (resolution_ - 1); }
  Vec3 node(int i, int j, int k) const;
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * resolution_ + j) * resolution_ + i;
  }

  double query(const Vec3& p) const;
  std::array<Tap, 8> taps(const Vec3& p) const;
  /// Central-difference gradient with step h.
  Vec3 gradient(const Vec3& p, double h) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const BaseField&) const = default;

 private:
  int resolution_ = 0;
  std::vector<double> values_;
};

/// w x h image of signed-distance offsets spread over the camera's pixel
/// rectangle. Map pixel (i, j) has its center at image position
/// ((i + 0.5) * sx, (j + 0.5) * sy) with sx = image_width / w. Bilinear
/// between centers, clamped to the border value outside.
class DisplacementMap {
 public:
  DisplacementMap() = default;
  DisplacementMap(int width, int height, double image_width, double image_height, double fill = 0.0);
  /// Map covering the full image of `camera`.
  static DisplacementMap for_camera(const Camera& camera, int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double image_width() const { return image_width_; }
  double image_height() const { return image_height_; }
  double spacing_x() const { return image_width_ / width_; }
  double spacing_y() const { return image_height_ / height_; }
  Vec2 pixel_center(int i, int j) const { return {(i + 0.5) * spacing_x(), (j + 0.5) * spacing_y()}; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * width_ + i; }

  double at(int i, int j) const { return values_[index(i, j)]; }
  double& at(int i, int j) { return values_[index(i, j)]; }

  double query(const Vec2& u) const;
  std::array<Tap, 4> taps(const Vec2& u) const;

  /// True when all five stencil queries of laplacian() stay inside the grid
  /// of pixel centers (one full map pixel away from the border centers).
  bool stencil_valid(const Vec2& u) const;
  /// Five-point Laplacian with respect to image pixel coordinates, built from
  /// bilinear queries one map pixel apart. nullopt near the border.
  std::optional<double> laplacian(const Vec2& u) const;
  /// Taps of laplacian(u); empty when !stencil_valid(u).
  std::vector<Tap> laplacian_taps(const Vec2& u) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const DisplacementMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double image_width_ = 0.0;
  double image_height_ = 0.0;
  std::vector<double> values_;
};

/// Base field plus front/back displacement maps sharing one camera.
struct DisentangledField {
  BaseField base;
  DisplacementMap front;
  DisplacementMap back;
  Camera camera;
  double delta = 0.05;

  static DisentangledField create(const Camera& camera, int base_resolution = 16,
                                  int map_resolution = 64, double delta = 0.05,
                                  double base_fill = 0.5);
  void validate() const;

  bool operator==(const DisentangledField&) const = default;
};

/// base(p) + front(u(p)) when is_front, else base(p) + back(u(p)).
double fuse(const DisentangledField& field, const Vec3& p, bool is_front);

/// Near-front test: |sdf(p)| < delta and the normalized central-difference
/// gradient of sdf points towards the viewer (dot > cos_threshold).
bool classify_front(const Vec3& p, const ScalarField& sdf, const Camera& camera, double delta,
                    double h, double cos_threshold = 0.0);

/// Test-time classification: the same rule driven by the field's own base.
bool classify_front_by_base(const DisentangledField& field, const Vec3& p, double h = 1e-3);

/// Fused value with per-point front/back selection from classify_front_by_base.
double evaluate_fused(const DisentangledField& field, const Vec3& p, double h = 1e-3);

/// Oracle residual map: at each map pixel, -base(hit) for the first surface hit
/// of the camera ray through the pixel center (F_SDF vanishes there), 0 on misses.
DisplacementMap rasterize_residual(const MeshSdf& mesh, const BaseField& base, const Camera& camera,
                                   int width = 64, int height = 64);

} // namespace d2im
