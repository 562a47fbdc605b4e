#pragma once

#include "d2im/fields.hpp"

#include <optional>
#include <string>
#include <vector>

namespace d2im {

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 half_extent() const { return 0.5 * (max - min); }
  /// Closed box test.
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool operator==(const Box&) const = default;
};

/// One named part: where it sits on the target and where its details come
/// from on the source.
struct PartPair {
  std::string name;
  Box target;
  Box source;

  bool operator==(const PartPair&) const = default;
};

/// Part boxes kept sorted by name, so "first match" means first by name.
class PartBoxes {
 public:
  PartBoxes() = default;
  /// Sorts by name; throws UsageError for duplicate names or boxes with a
  /// non-positive extent on any axis.
  explicit PartBoxes(std::vector<PartPair> parts);

  /// {"parts":[{"name":..., "target":{"min":[x,y,z],"max":[x,y,z]}, "source":{...}}]}
  static PartBoxes from_json(const std::string& text);
  static PartBoxes load(const std::string& path);
  std::string to_json() const;

  /// Same parts with target and source swapped.
  PartBoxes inverted() const;

  const std::vector<PartPair>& parts() const { return parts_; }
  bool operator==(const PartBoxes&) const = default;

 private:
  std::vector<PartPair> parts_;
};

/// Maps p through the frame of the first target box containing it onto the
/// matching source box. Identical target and source boxes map p to itself.
std::optional<Vec3> correspond(const Vec3& p, const PartBoxes& boxes);

/// target.base(p) + the source's front or back displacement at the source
/// projection of correspond(p); plain fuse() on the target outside every box.
double transfer_fuse(const DisentangledField& target, const DisentangledField& source,
                     const PartBoxes& boxes, const Vec3& p, bool is_front);

/// transfer_fuse with front/back chosen from the target's base field, the way
/// evaluate_fused() chooses for a single shape.
double evaluate_transferred(const DisentangledField& target, const DisentangledField& source,
                            const PartBoxes& boxes, const Vec3& p, double h = 1e-3);

} // namespace d2im
