#include "d2im/transfer.hpp"
#include "support.hpp"

using namespace d2im;

namespace {

PartBoxes single(const Box& target, const Box& source) { return PartBoxes({{"part", target, source}}); }

DisentangledField random_field(std::uint64_t seed) {
  Rng rng(seed);
  DisentangledField f = DisentangledField::create(Camera::front(), 6, 16, 0.05, 0.0);
  f.base = BaseField::from_function(6, [](const Vec3& p) { return p.norm() - 0.3; });
  for (auto& v : f.front.values()) v = rng.uniform(-0.02, 0.02);
  for (auto& v : f.back.values()) v = rng.uniform(-0.02, 0.02);
  return f;
}

} // namespace

TEST_CASE("correspondence examples") {
  const Box unit{Vec3::Zero(), Vec3::Ones()};
  const Box twice{Vec3::Zero(), Vec3::Constant(2.0)};
  CHECK(correspond(Vec3(0.3, 0.6, 0.9), single(unit, unit)).value() == Vec3(0.3, 0.6, 0.9));
  CHECK(correspond(Vec3(0.5, 0.5, 0.5), single(unit, twice)).value().isApprox(Vec3(1, 1, 1)));
  CHECK(correspond(Vec3(0.25, 0.5, 1.0), single(unit, twice)).value().isApprox(Vec3(0.5, 1.0, 2.0)));
  CHECK_FALSE(correspond(Vec3(1.5, 0.5, 0.5), single(unit, twice)).has_value());
}

TEST_CASE("overlapping target boxes resolve to the first by name") {
  const Box a{Vec3::Zero(), Vec3::Ones()};
  const Box shifted{Vec3::Constant(10.0), Vec3::Constant(11.0)};
  const PartBoxes boxes({{"zeta", a, a}, {"alpha", a, shifted}});
  CHECK(boxes.parts().front().name == "alpha");
  CHECK(correspond(Vec3(0.5, 0.5, 0.5), boxes).value().isApprox(Vec3::Constant(10.5)));
}

TEST_CASE("correspondence is invertible on box interiors") {
  const PartBoxes boxes({{"body", {Vec3(-0.4, -0.3, -0.1), Vec3(0.4, 0.3, 0.2)}, {Vec3(-0.2, -0.1, -0.3), Vec3(0.3, 0.35, 0.1)}},
                         {"leg", {Vec3(0.4, -0.5, -0.5), Vec3(0.5, -0.3, 0.5)}, {Vec3(-0.5, -0.5, -0.1), Vec3(-0.45, 0.5, 0.1)}}});
  const PartBoxes inverse = boxes.inverted();
  Rng rng(13);
  int mapped = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p = test::random_point(rng);
    const auto q = correspond(p, boxes);
    if (!q) continue;
    ++mapped;
    const auto back = correspond(*q, inverse);
    REQUIRE(back.has_value());
    REQUIRE((*back - p).norm() < 1e-9);
  }
  CHECK(mapped > 300);
}

TEST_CASE("part boxes validation and JSON") {
  const Box ok{Vec3::Zero(), Vec3::Ones()};
  const Box flat{Vec3::Zero(), Vec3(1, 0, 1)};
  CHECK_THROWS_AS(PartBoxes({{"a", ok, flat}}), UsageError);
  CHECK_THROWS_AS(PartBoxes({{"a", ok, ok}, {"a", ok, ok}}), UsageError);
  CHECK_THROWS_AS(PartBoxes({{"", ok, ok}}), UsageError);

  const std::string text =
      R"({"parts":[{"name":"top","target":{"min":[0,0,0],"max":[1,1,1]},"source":{"min":[-1,-1,-1],"max":[0,0.5,0]}}]})";
  const PartBoxes boxes = PartBoxes::from_json(text);
  REQUIRE(boxes.parts().size() == 1);
  CHECK(boxes.parts()[0].source.max == Vec3(0, 0.5, 0));
  CHECK(PartBoxes::from_json(boxes.to_json()) == boxes);

  CHECK_THROWS_AS(PartBoxes::from_json("{"), UsageError);
  CHECK_THROWS_AS(PartBoxes::from_json(R"({"parts":[],"extra":1})"), UsageError);
  CHECK_THROWS_AS(PartBoxes::from_json(R"({"parts":[{"name":"x","target":{"min":[0,0],"max":[1,1,1]},"source":{"min":[0,0,0],"max":[1,1,1]}}]})"),
                  UsageError);
  CHECK_THROWS_AS(PartBoxes::load("/nonexistent/boxes.json"), UsageError);
}

TEST_CASE("self-transfer with identity boxes equals plain fusion bitwise") {
  const DisentangledField f = random_field(1);
  const Box all{Vec3::Constant(-0.5), Vec3::Constant(0.5)};
  const PartBoxes identity = single(all, all);
  for (const Vec3& p : test::random_points(3000, 5)) {
    REQUIRE(transfer_fuse(f, f, identity, p, true) == fuse(f, p, true));
    REQUIRE(transfer_fuse(f, f, identity, p, false) == fuse(f, p, false));
    REQUIRE(evaluate_transferred(f, f, identity, p) == evaluate_fused(f, p));
  }
}

TEST_CASE("points outside every box ignore the source field") {
  const DisentangledField target = random_field(2);
  const DisentangledField source = random_field(3);
  const PartBoxes boxes = single({Vec3(-0.2, -0.2, 0.0), Vec3(0.2, 0.2, 0.4)}, {Vec3(-0.3, -0.3, -0.1), Vec3(0.3, 0.3, 0.4)});
  int outside = 0;
  for (const Vec3& p : test::random_points(3000, 6)) {
    if (correspond(p, boxes)) continue;
    ++outside;
    REQUIRE(evaluate_transferred(target, source, boxes, p) == evaluate_fused(target, p));
  }
  CHECK(outside > 2000);
}

TEST_CASE("a source with zero maps leaves the target base inside the boxes") {
  const DisentangledField target = random_field(4);
  DisentangledField source = random_field(5);
  for (auto& v : source.front.values()) v = 0.0;
  for (auto& v : source.back.values()) v = 0.0;
  const Box all{Vec3::Constant(-0.5), Vec3::Constant(0.5)};
  for (const Vec3& p : test::random_points(500, 7)) {
    REQUIRE(transfer_fuse(target, source, single(all, all), p, true) == target.base.query(p));
  }
}
