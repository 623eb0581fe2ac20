#include "bprp/presets.hpp"

#include <string>

#include "bprp/errors.hpp"

namespace bprp {

namespace {

Beacon make_beacon(std::string id, Point p) { return Beacon{std::move(id), p, 10.0, -15.0, true}; }

}  // namespace

Preset library_preset() {
  const double width = 14.0, length = 8.0;
  std::vector<Rect> stacks = {{1.5, 2.55, 11.0, 0.5}, {1.5, 3.75, 11.0, 0.5}, {1.5, 4.95, 11.0, 0.5}};
  std::vector<Rect> corridors = {{0.0, 0.0, 1.5, length}, {12.5, 0.0, 1.5, length}};
  std::vector<Beacon> beacons;
  int k = 0;
  for (const auto& s : stacks) {
    for (const double face : {s.y, s.y + s.h}) {
      for (int i = 0; i < 10; ++i) {
        const double x = 7.0 + 0.91 * (i - 4.5);
        beacons.push_back(make_beacon("L" + std::to_string(k++), {x, face}));
      }
    }
  }
  Preset p{"library", Layout(width, length, stacks, corridors, beacons), {}, {}};
  p.training_spots = {{0.75, 2.0}, {0.75, 6.0}, {13.25, 2.0}, {13.25, 6.0}, {4.0, 1.2},  {10.0, 1.5},
                      {4.5, 6.8},  {9.5, 6.5},  {4.5, 3.4},   {9.0, 3.4},   {5.5, 4.6}, {10.5, 4.6}};
  p.traces = {{{0.75, 1.0}, {3.0, 1.2}, {7.0, 1.5}, {11.0, 1.3}, {13.25, 3.0}, {13.25, 7.0}, {8.0, 6.8}},
              {{2.5, 3.4}, {7.0, 3.4}, {11.5, 3.4}, {13.0, 3.4}, {13.0, 4.6}, {6.0, 4.6}, {2.0, 4.6}}};
  return p;
}

Preset retail_preset() {
  const double width = 10.0, length = 10.0;
  std::vector<Rect> stacks = {{0.6, 1.25, 0.9, 7.5}, {3.3, 1.25, 0.9, 7.5}, {6.0, 1.25, 0.9, 7.5}, {8.7, 1.25, 0.9, 6.0}};
  std::vector<Rect> corridors = {{0.0, 0.0, width, 1.25}, {0.0, 8.75, width, 1.25}};
  std::vector<Beacon> beacons;
  int k = 0;
  for (const auto& s : stacks) {
    const int per_face = s.h > 7.0 ? 5 : 4;
    const double centre = s.y + 0.5 * s.h;
    for (const double face : {s.x, s.x + s.w}) {
      for (int i = 0; i < per_face; ++i) {
        const double y = centre + (i - 0.5 * (per_face - 1));
        beacons.push_back(make_beacon("R" + std::to_string(k++), {face, y}));
      }
    }
  }
  Preset p{"retail", Layout(width, length, stacks, corridors, beacons), {}, {}};
  p.training_spots = {{2.0, 0.6}, {7.5, 9.4}, {2.4, 3.0}, {5.1, 6.0}, {7.8, 4.0},
                      {2.4, 7.5}, {5.1, 2.5}, {0.3, 5.0}, {7.8, 8.0}};
  p.traces = {{{2.4, 0.6}, {2.4, 4.0}, {2.4, 9.4}, {5.1, 9.4}, {5.1, 5.0}, {5.1, 0.6}, {7.8, 0.6}, {7.8, 6.0}}};
  return p;
}

Preset make_preset(std::string_view name) {
  if (name == "library") return library_preset();
  if (name == "retail") return retail_preset();
  throw InvalidInput("unknown preset '" + std::string(name) + "' (expected library or retail)");
}

PrpModel truth_model() {
  PrpModel m;
  m.standardization.mean = {5.0, 10.0, -15.0};
  m.standardization.sd = {3.0, 1.0, 1.0};
  const auto set = [&m](GeometricElement e, double w0, double w1, double w11) {
    LinkParams& p = m.link(e);
    p.w0 = w0;
    p.w = {w1, 0.0, 0.3};
    p.w_pair = {w11, 0.0, 0.0, 0.0, 0.0, 0.0};
  };
  set(GeometricElement::FreeSpace, -1.4, -2.7, -0.15);
  set(GeometricElement::OneStack, -2.9, -2.7, -0.15);
  set(GeometricElement::TwoStack, -3.7, -2.4, -0.10);
  set(GeometricElement::Corridor, -0.6, -2.4, -0.10);
  return m;
}

}  // namespace bprp
