#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "bprp/errors.hpp"
#include "bprp/geometry.hpp"
#include "bprp/presets.hpp"
#include "bprp/rng.hpp"

using namespace bprp;

namespace {

Beacon beacon(std::string id, Point p) { return Beacon{std::move(id), p, 10.0, -15.0, true}; }

// 10 x 6 room, one stack in the middle, beacons on both long faces.
Layout one_stack_room() {
  return Layout(10.0, 6.0, {{2.0, 2.5, 6.0, 1.0}}, {},
                {beacon("a1", {4.0, 2.5}), beacon("a2", {5.0, 2.5}), beacon("b1", {4.0, 3.5}),
                 beacon("b2", {5.0, 3.5})});
}

}  // namespace

TEST(Distance, Examples) {
  EXPECT_DOUBLE_EQ(distance({0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(distance({2, 2}, {2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(distance({0.91, 0}, {0, 0}), 0.91);
}

TEST(Distance, NonFiniteRejected) {
  EXPECT_THROW(distance({std::nan(""), 0}, {0, 0}), InvalidInput);
  EXPECT_THROW(distance({0, 0}, {std::numeric_limits<double>::infinity(), 0}), InvalidInput);
}

TEST(Distance, TriangleInequalityProperty) {
  SplitMix64 r(11);
  for (int i = 0; i < 2000; ++i) {
    const Point a{r.uniform(-50, 50), r.uniform(-50, 50)}, b{r.uniform(-50, 50), r.uniform(-50, 50)},
        c{r.uniform(-50, 50), r.uniform(-50, 50)};
    EXPECT_LE(distance(a, c), distance(a, b) + distance(b, c) + 1e-12);
    EXPECT_DOUBLE_EQ(distance(a, b), distance(b, a));
  }
}

TEST(SegmentCrossing, GrazingIsNotACrossing) {
  const Rect r{1, 1, 2, 2};
  EXPECT_TRUE(segment_crosses_rect({0, 2}, {4, 2}, r));
  EXPECT_FALSE(segment_crosses_rect({0, 1}, {4, 1}, r));  // along the bottom edge
  EXPECT_FALSE(segment_crosses_rect({0, 0}, {1, 1}, r));  // touches a corner
  EXPECT_FALSE(segment_crosses_rect({0, 0}, {0.5, 3}, r));
  EXPECT_TRUE(segment_crosses_rect({2, 0}, {2, 1.5}, r));  // ends inside
}

TEST(Layout, InvariantsEnforced) {
  EXPECT_THROW(Layout(0, 5, {}, {}, {}), InvalidInput);
  EXPECT_THROW(Layout(5, 5, {{4, 4, 2, 2}}, {}, {}), InvalidInput);
  EXPECT_THROW(Layout(5, 5, {{1, 1, 2, 2}, {2, 2, 2, 2}}, {}, {}), InvalidInput);
  EXPECT_THROW(Layout(5, 5, {}, {}, {beacon("x", {6, 1})}), InvalidInput);
  EXPECT_THROW(Layout(5, 5, {}, {}, {beacon("x", {1, 1}), beacon("x", {2, 2})}), InvalidInput);
  Beacon bad = beacon("y", {1, 1});
  bad.rate_hz = 0;
  EXPECT_THROW(Layout(5, 5, {}, {}, {bad}), InvalidInput);
  // Touching stacks are allowed.
  EXPECT_NO_THROW(Layout(5, 5, {{1, 1, 1, 1}, {2, 1, 1, 1}}, {}, {}));
}

TEST(Classify, ElementsFromCrossings) {
  const Layout room(12, 6, {{2, 1, 1, 4}, {5, 1, 1, 4}, {8, 1, 1, 4}}, {{0, 0, 12, 0.5}}, {});
  EXPECT_EQ(classify_element(room, {1, 3}, {1.5, 4}), GeometricElement::FreeSpace);
  EXPECT_EQ(classify_element(room, {1, 3}, {4, 3}), GeometricElement::OneStack);
  EXPECT_EQ(classify_element(room, {1, 3}, {7, 3}), GeometricElement::TwoStack);
  EXPECT_EQ(classify_element(room, {1, 3}, {10, 3}), GeometricElement::TwoStack);
  EXPECT_EQ(classify_element(room, {1, 3}, {10, 0.25}), GeometricElement::Corridor);
  EXPECT_THROW(classify_element(room, {1, 3}, {13, 3}), OutOfBounds);
  EXPECT_THROW(classify_element(room, {-1, 3}, {2, 3}), OutOfBounds);
}

TEST(Classify, SymmetricOutsideCorridors) {
  const auto pre = library_preset();
  SplitMix64 r(5);
  int checked = 0;
  while (checked < 500) {
    const Point a{r.uniform(0, 14), r.uniform(0, 8)}, b{r.uniform(0, 14), r.uniform(0, 8)};
    if (pre.layout.in_corridor(a) || pre.layout.in_corridor(b)) continue;
    EXPECT_EQ(classify_element(pre.layout, a, b), classify_element(pre.layout, b, a));
    ++checked;
  }
}

TEST(Classify, StableUnderTinyPerturbation) {
  const auto pre = library_preset();
  const Point b = pre.layout.beacons()[3].position;
  for (const Point p : {Point{4.0, 3.4}, Point{7.3, 1.1}, Point{9.9, 6.2}, Point{0.7, 4.0}}) {
    const auto e = classify_element(pre.layout, b, p);
    EXPECT_EQ(classify_element(pre.layout, b, {p.x + 1e-9, p.y}), e);
    EXPECT_EQ(classify_element(pre.layout, b, {p.x, p.y - 1e-9}), e);
  }
}

TEST(ElementMap, FacesOfOneStack) {
  const Layout room = one_stack_room();
  const auto m = element_map(room, {4.5, 1.5});  // aisle below face "a"
  EXPECT_EQ(m.at("a1"), GeometricElement::FreeSpace);
  EXPECT_EQ(m.at("a2"), GeometricElement::FreeSpace);
  EXPECT_EQ(m.at("b1"), GeometricElement::OneStack);
  EXPECT_EQ(m.at("b2"), GeometricElement::OneStack);
}

TEST(ElementMap, AdjacentBeaconsShareElement) {
  const auto pre = library_preset();
  SplitMix64 r(8);
  for (int i = 0; i < 200; ++i) {
    const Point p{r.uniform(0, 14), r.uniform(0, 8)};
    bool inside_stack = false;
    for (const auto& s : pre.layout.stacks()) inside_stack |= p.x > s.x && p.x < s.x_max() && p.y > s.y && p.y < s.y_max();
    if (inside_stack) continue;
    const auto m = element_map(pre.layout, p);
    // L0..L9 sit on one face; neighbours 4 and 5 straddle the face centre.
    EXPECT_EQ(m.at("L4"), m.at("L5"));
  }
}

TEST(ElementMap, CorridorOverridesAll) {
  const auto pre = library_preset();
  for (const auto& [id, e] : element_map(pre.layout, {0.5, 4.0})) EXPECT_EQ(e, GeometricElement::Corridor) << id;
}

TEST(ElementMap, VectorMatchesMap) {
  const auto pre = library_preset();
  std::vector<GeometricElement> v(pre.layout.beacons().size());
  const Point p{6.2, 4.6};
  element_vector(pre.layout, p, v);
  const auto m = element_map(pre.layout, p);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], m.at(pre.layout.beacons()[i].id));
}

TEST(Layout, LookupAndSubsets) {
  const Layout room = one_stack_room();
  EXPECT_EQ(room.beacon_index("b1"), 2u);
  EXPECT_FALSE(room.beacon_index("zz"));
  EXPECT_THROW(room.beacon("zz"), InvalidInput);
  EXPECT_EQ(room.stacks_crossed({4, 1}, {4, 5}), 1);
  const Layout sub = room.with_beacons({beacon("b2", {5, 3.5})});
  EXPECT_EQ(sub.beacons().size(), 1u);
  EXPECT_EQ(sub.stacks().size(), 1u);
  EXPECT_NEAR(room.diagonal(), std::hypot(10.0, 6.0), 1e-12);
}

TEST(ElementKeys, RoundTrip) {
  for (const auto e : kAllElements) EXPECT_EQ(element_from_key(element_key(e)), e);
  EXPECT_EQ(element_label(GeometricElement::OneStack), "1-S");
  EXPECT_THROW(element_from_key("D"), InvalidInput);
}
