#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bprp/geometry.hpp"
#include "bprp/prp_model.hpp"

namespace bprp {

struct Preset {
  std::string name;
  Layout layout;
  std::vector<Point> training_spots;
  std::vector<std::vector<Point>> traces;
};

/// 14 x 8 m library: three 11 m stacks with 0.7 m aisles, side corridors, 60 beacons.
Preset library_preset();
/// 10 x 10 m store: four 0.9 m stacks with 1.8 m aisles, end corridors, 38 beacons.
Preset retail_preset();
Preset make_preset(std::string_view name);

/// Link model used to generate synthetic packet logs.
PrpModel truth_model();

}  // namespace bprp
