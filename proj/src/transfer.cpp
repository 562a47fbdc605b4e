#include "d2im/transfer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace d2im {

PartBoxes::PartBoxes(std::vector<PartPair> parts) : parts_(std::move(parts)) {
  std::sort(parts_.begin(), parts_.end(),
            [](const PartPair& a, const PartPair& b) { return a.name < b.name; });
  std::set<std::string> names;
  for (const auto& part : parts_) {
    require(!part.name.empty(), "part boxes: empty part name");
    require(names.insert(part.name).second, "part boxes: duplicate part name '" + part.name + "'");
    for (const Box* box : {&part.target, &part.source}) {
      require(box->min.allFinite() && box->max.allFinite(),
              "part boxes: non-finite corner in part '" + part.name + "'");
      require((box->max.array() > box->min.array()).all(),
              "part boxes: degenerate box in part '" + part.name + "'");
    }
  }
}

namespace {

using nlohmann::json;

Vec3 read_vec3(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == 3, where + " must be an array of 3 numbers");
  Vec3 v;
  for (int a = 0; a < 3; ++a) {
    require(j[a].is_number(), where + " must be an array of 3 numbers");
    v[a] = j[a].get<double>();
  }
  return v;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    require(known, where + ": unknown key '" + it.key() + "'");
  }
}

Box read_box(const json& j, const std::string& where) {
  check_keys(j, {"min", "max"}, where);
  require(j.contains("min") && j.contains("max"), where + " needs min and max");
  return {read_vec3(j["min"], where + ".min"), read_vec3(j["max"], where + ".max")};
}

json write_box(const Box& b) {
  return {{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}

} // namespace

PartBoxes PartBoxes::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("part boxes: invalid JSON: ") + e.what());
  }
  check_keys(root, {"parts"}, "part boxes");
  require(root.contains("parts") && root["parts"].is_array(), "part boxes: 'parts' must be an array");
  std::vector<PartPair> parts;
  for (const auto& p : root["parts"]) {
    check_keys(p, {"name", "target", "source"}, "part boxes: part");
    require(p.contains("name") && p["name"].is_string(), "part boxes: part needs a string name");
    const std::string name = p["name"].get<std::string>();
    require(p.contains("target") && p.contains("source"), "part boxes: part '" + name + "' needs target and source");
    parts.push_back({name, read_box(p["target"], name + ".target"), read_box(p["source"], name + ".source")});
  }
  return PartBoxes(std::move(parts));
}

PartBoxes PartBoxes::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw UsageError("cannot open part boxes file '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string PartBoxes::to_json() const {
  json parts = json::array();
  for (const auto& p : parts_) {
    parts.push_back({{"name", p.name}, {"target", write_box(p.target)}, {"source", write_box(p.source)}});
  }
  return json{{"parts", parts}}.dump(2) + "\n";
}

PartBoxes PartBoxes::inverted() const {
  std::vector<PartPair> parts = parts_;
  for (auto& p : parts) std::swap(p.target, p.source);
  return PartBoxes(std::move(parts));
}

std::optional<Vec3> correspond(const Vec3& p, const PartBoxes& boxes) {
  for (const auto& part : boxes.parts()) {
    if (!part.target.contains(p)) {
      continue;
    }
    if (part.target == part.source) {
      return p;
    }
    const Vec3 local = (p - part.target.center()).cwiseQuotient(part.target.half_extent());
    return part.source.center() + local.cwiseProduct(part.source.half_extent());
  }
  return std::nullopt;
}

double transfer_fuse(const DisentangledField& target, const DisentangledField& source,
                     const PartBoxes& boxes, const Vec3& p, bool is_front) {
  const auto q = correspond(p, boxes);
  if (!q) {
    return fuse(target, p, is_front);
  }
  const Vec2 u = source.camera.project(*q);
  return target.base.query(p) + (is_front ? source.front.query(u) : source.back.query(u));
}

double evaluate_transferred(const DisentangledField& target, const DisentangledField& source,
                            const PartBoxes& boxes, const Vec3& p, double h) {
  return transfer_fuse(target, source, boxes, p, classify_front_by_base(target, p, h));
}

} // namespace d2im
