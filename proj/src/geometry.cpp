#include "bprp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <spdlog/spdlog.h>

#include "bprp/errors.hpp"

namespace bprp {

namespace {

bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void check_rect(const Rect& r, double width, double length, const char* what) {
  if (!(std::isfinite(r.x) && std::isfinite(r.y) && std::isfinite(r.w) && std::isfinite(r.h)) || r.w <= 0 ||
      r.h <= 0) {
    throw InvalidInput(std::string(what) + " rectangle must have finite coordinates and positive size");
  }
  if (r.x < 0 || r.y < 0 || r.x_max() > width || r.y_max() > length) {
    throw InvalidInput(std::string(what) + " rectangle lies outside the floorplan");
  }
}

// Minimum crossing length (meters) counted as a proper crossing.
constexpr double kCrossingTolerance = 1e-9;

}  // namespace

std::string_view element_key(GeometricElement e) {
  switch (e) {
    case GeometricElement::FreeSpace: return "F_S";
    case GeometricElement::OneStack: return "ONE_S";
    case GeometricElement::TwoStack: return "TWO_S";
    case GeometricElement::Corridor: return "C";
  }
  return "?";
}

std::string_view element_label(GeometricElement e) {
  switch (e) {
    case GeometricElement::FreeSpace: return "F-S";
    case GeometricElement::OneStack: return "1-S";
    case GeometricElement::TwoStack: return "2-S";
    case GeometricElement::Corridor: return "C";
  }
  return "?";
}

GeometricElement element_from_key(std::string_view key) {
  for (const auto e : kAllElements) {
    if (element_key(e) == key) return e;
  }
  throw InvalidInput("unknown geometric element key '" + std::string(key) + "'");
}

double distance(Point p, Point q) {
  if (!finite(p) || !finite(q)) throw InvalidInput("distance: non-finite coordinates");
  return std::hypot(p.x - q.x, p.y - q.y);
}

bool segment_crosses_rect(Point a, Point b, const Rect& r) {
  // Slab clipping of the parameter interval t in (0, 1) against the open rectangle.
  double t0 = 0.0;
  double t1 = 1.0;
  const std::array<double, 2> origin = {a.x, a.y};
  const std::array<double, 2> delta = {b.x - a.x, b.y - a.y};
  const std::array<double, 2> lo = {r.x, r.y};
  const std::array<double, 2> hi = {r.x_max(), r.y_max()};
  for (int axis = 0; axis < 2; ++axis) {
    if (delta[axis] == 0.0) {
      if (!(origin[axis] > lo[axis] && origin[axis] < hi[axis])) return false;
      continue;
    }
    double ta = (lo[axis] - origin[axis]) / delta[axis];
    double tb = (hi[axis] - origin[axis]) / delta[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  const double length = std::hypot(delta[0], delta[1]);
  return (t1 - t0) * length > kCrossingTolerance;
}

Layout::Layout(double width, double length, std::vector<Rect> stacks, std::vector<Rect> corridors,
               std::vector<Beacon> beacons, std::vector<Rect> desks)
    : width_(width),
      length_(length),
      stacks_(std::move(stacks)),
      corridors_(std::move(corridors)),
      desks_(std::move(desks)),
      beacons_(std::move(beacons)) {
  if (!(std::isfinite(width_) && std::isfinite(length_)) || width_ <= 0 || length_ <= 0) {
    throw InvalidInput("layout width and length must be positive");
  }
  for (const auto& r : stacks_) check_rect(r, width_, length_, "stack");
  for (const auto& r : corridors_) check_rect(r, width_, length_, "corridor");
  for (const auto& r : desks_) check_rect(r, width_, length_, "desk");
  for (std::size_t i = 0; i < stacks_.size(); ++i) {
    for (std::size_t j = i + 1; j < stacks_.size(); ++j) {
      if (stacks_[i].overlaps(stacks_[j])) throw InvalidInput("stack rectangles overlap");
    }
  }
  for (std::size_t i = 0; i < beacons_.size(); ++i) {
    const auto& b = beacons_[i];
    if (b.id.empty()) throw InvalidInput("beacon id must be non-empty");
    if (!(b.rate_hz > 0) || !std::isfinite(b.rate_hz)) throw InvalidInput("beacon " + b.id + ": rate must be > 0");
    if (!std::isfinite(b.power_dbm)) throw InvalidInput("beacon " + b.id + ": power must be finite");
    if (!finite(b.position) || !contains(b.position)) {
      throw InvalidInput("beacon " + b.id + " lies outside the floorplan");
    }
    if (!index_.emplace(b.id, i).second) throw InvalidInput("duplicate beacon id " + b.id);
  }
  if (!desks_.empty()) {
    spdlog::warn("layout has {} desk region(s); desk receivers are classified as Corridor", desks_.size());
  }
}

double Layout::diagonal() const { return std::hypot(width_, length_); }

bool Layout::contains(Point p) const { return p.x >= 0 && p.x <= width_ && p.y >= 0 && p.y <= length_; }

bool Layout::in_corridor(Point p) const {
  for (const auto& r : corridors_) {
    if (r.contains(p)) return true;
  }
  for (const auto& r : desks_) {
    if (r.contains(p)) return true;
  }
  return false;
}

std::optional<std::size_t> Layout::beacon_index(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Beacon& Layout::beacon(std::string_view id) const {
  const auto idx = beacon_index(id);
  if (!idx) throw InvalidInput("unknown beacon id " + std::string(id));
  return beacons_[*idx];
}

int Layout::stacks_crossed(Point a, Point b) const {
  int n = 0;
  for (const auto& r : stacks_) {
    if (segment_crosses_rect(a, b, r)) ++n;
  }
  return n;
}

Layout Layout::with_beacons(std::vector<Beacon> beacons) const {
  return Layout(width_, length_, stacks_, corridors_, std::move(beacons), desks_);
}

GeometricElement classify_element(const Layout& layout, Point beacon_pos, Point receiver_pos) {
  if (!finite(beacon_pos) || !finite(receiver_pos)) throw InvalidInput("classify_element: non-finite point");
  if (!layout.contains(beacon_pos)) throw OutOfBounds("beacon position outside the floorplan");
  if (!layout.contains(receiver_pos)) throw OutOfBounds("receiver position outside the floorplan");
  if (layout.in_corridor(receiver_pos)) return GeometricElement::Corridor;
  const int n = layout.stacks_crossed(beacon_pos, receiver_pos);
  if (n == 0) return GeometricElement::FreeSpace;
  if (n == 1) return GeometricElement::OneStack;
  return GeometricElement::TwoStack;
}

std::map<std::string, GeometricElement> element_map(const Layout& layout, Point receiver_pos) {
  std::map<std::string, GeometricElement> out;
  for (const auto& b : layout.beacons()) {
    out.emplace(b.id, classify_element(layout, b.position, receiver_pos));
  }
  return out;
}

void element_vector(const Layout& layout, Point receiver_pos, std::span<GeometricElement> out) {
  const auto& beacons = layout.beacons();
  if (layout.in_corridor(receiver_pos)) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(beacons.size()), GeometricElement::Corridor);
    return;
  }
  for (std::size_t i = 0; i < beacons.size(); ++i) {
    const int n = layout.stacks_crossed(beacons[i].position, receiver_pos);
    out[i] = n == 0 ? GeometricElement::FreeSpace : (n == 1 ? GeometricElement::OneStack : GeometricElement::TwoStack);
  }
}

}  // namespace bprp
