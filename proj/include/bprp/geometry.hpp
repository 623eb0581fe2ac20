#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bprp {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned rectangle with lower-left corner (x, y), width w along x and height h along y.
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x_max() const { return x + w; }
  double y_max() const { return y + h; }
  // Closed containment.
  bool contains(Point p) const { return p.x >= x && p.x <= x_max() && p.y >= y && p.y <= y_max(); }
  // True when the open interiors overlap with positive area.
  bool overlaps(const Rect& o) const {
    return x < o.x_max() && o.x < x_max() && y < o.y_max() && o.y < y_max();
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class GeometricElement : std::uint8_t { FreeSpace = 0, OneStack = 1, TwoStack = 2, Corridor = 3 };

inline constexpr std::size_t kElementCount = 4;
inline constexpr std::array<GeometricElement, kElementCount> kAllElements = {
    GeometricElement::FreeSpace, GeometricElement::OneStack, GeometricElement::TwoStack,
    GeometricElement::Corridor};

constexpr std::size_t index_of(GeometricElement e) { return static_cast<std::size_t>(e); }

/// File/serialization key: F_S, ONE_S, TWO_S, C.
std::string_view element_key(GeometricElement e);
GeometricElement element_from_key(std::string_view key);
/// Human-readable short label: F-S, 1-S, 2-S, C.
std::string_view element_label(GeometricElement e);

struct Beacon {
  std::string id;
  Point position;
  double rate_hz = 10.0;
  double power_dbm = -15.0;
  bool position_known = true;
};

double distance(Point p, Point q);

/// True when the open segment (a, b) passes through the interior of r over a
/// positive length. Touching or running along the boundary is not a crossing.
bool segment_crosses_rect(Point a, Point b, const Rect& r);

/// Floorplan: W x L meters with stacks (obstacles), corridor regions and beacons.
/// Immutable after construction.
class Layout {
 public:
  Layout(double width, double length, std::vector<Rect> stacks, std::vector<Rect> corridors,
         std::vector<Beacon> beacons, std::vector<Rect> desks = {});

  double width() const { return width_; }
  double length() const { return length_; }
  double diagonal() const;
  Point centroid() const { return {0.5 * width_, 0.5 * length_}; }
  const std::vector<Rect>& stacks() const { return stacks_; }
  const std::vector<Rect>& corridors() const { return corridors_; }
  const std::vector<Rect>& desks() const { return desks_; }
  const std::vector<Beacon>& beacons() const { return beacons_; }

  bool contains(Point p) const;
  bool in_corridor(Point p) const;
  std::optional<std::size_t> beacon_index(std::string_view id) const;
  const Beacon& beacon(std::string_view id) const;

  /// Number of distinct stacks crossed by the open segment (a, b).
  int stacks_crossed(Point a, Point b) const;

  /// Same geometry, different beacon set (subsets, recovered positions).
  Layout with_beacons(std::vector<Beacon> beacons) const;

 private:
  double width_;
  double length_;
  std::vector<Rect> stacks_;
  std::vector<Rect> corridors_;
  std::vector<Rect> desks_;
  std::vector<Beacon> beacons_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

GeometricElement classify_element(const Layout& layout, Point beacon_pos, Point receiver_pos);

/// Element per beacon id for a receiver position.
std::map<std::string, GeometricElement> element_map(const Layout& layout, Point receiver_pos);

/// Element per beacon, aligned with layout.beacons(). Unchecked fast path for inference.
void element_vector(const Layout& layout, Point receiver_pos, std::span<GeometricElement> out);

}  // namespace bprp
