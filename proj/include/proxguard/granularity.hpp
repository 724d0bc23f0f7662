#pragma once

#include <compare>
#include <cstdint>
#include <string_view>
#include <vector>

namespace proxguard {

// Planar position in meters (x east, y north).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

// Index of a grid cell. Values in [0, cols*rows) are valid; larger values are
// the padding ("non-valid") indexes used to hide candidate-set cardinality.
struct GranuleIndex {
  std::uint64_t value = 0;

  friend auto operator<=>(const GranuleIndex&, const GranuleIndex&) = default;
};

enum class Semantics { kMinDist, kMaxDist, kMostly };

std::string_view to_string(Semantics s);
Semantics parse_semantics(std::string_view name);

// Axis-aligned closed rectangle, used for cell geometry.
struct Rect {
  double x_lo, y_lo, x_hi, y_hi;
};

// A uniform grid that exactly tiles the rectangular domain
// [origin.x, origin.x + cols*l) x [origin.y, origin.y + rows*l).
// Cells are half-open; the top and right domain edges fold into the last
// row/column.
class GridGranularity {
 public:
  GridGranularity(Point origin, double cell_edge, std::uint32_t cols, std::uint32_t rows);

  const Point& origin() const { return origin_; }
  double cell_edge() const { return cell_edge_; }
  std::uint32_t cols() const { return cols_; }
  std::uint32_t rows() const { return rows_; }
  std::uint64_t size() const { return std::uint64_t{cols_} * rows_; }
  double width() const { return cell_edge_ * cols_; }
  double height() const { return cell_edge_ * rows_; }

  bool contains(const Point& p) const;
  bool is_valid(GranuleIndex i) const { return i.value < size(); }

  // Throws IndexError for a non-valid index.
  Rect cell(GranuleIndex i) const;
  GranuleIndex index_of(std::uint32_t col, std::uint32_t row) const;

  friend bool operator==(const GridGranularity&, const GridGranularity&) = default;

 private:
  Point origin_;
  double cell_edge_;
  std::uint32_t cols_;
  std::uint32_t rows_;
};

// Throws DomainError when p lies outside the domain.
GranuleIndex granule_of(const GridGranularity& g, const Point& p);

double min_dist(const Point& p, const GridGranularity& g, GranuleIndex i);
double max_dist(const Point& p, const GridGranularity& g, GranuleIndex i);

inline constexpr int kDefaultCoverageLattice = 64;

// Fraction of the cell within the closed disc (p, delta), estimated on an
// n x n lattice of cell-centred sample points.
double covered_fraction(const Point& p, const GridGranularity& g, GranuleIndex i, double delta,
                        int lattice = kDefaultCoverageLattice);

// The valid cells that the semantics puts in proximity of p (the set S').
// Returned in ascending index order.
std::vector<GranuleIndex> proximity_candidates(const Point& p, const GridGranularity& g,
                                               double delta, Semantics semantics);

// True iff cell i qualifies for p under the semantics (one cell of the S'
// predicate).
bool in_proximity_of_cell(const Point& p, const GridGranularity& g, GranuleIndex i, double delta,
                          Semantics semantics);

// Conservative bound on the number of cells any radius-delta disc can meet:
// (ceil(2*delta/l) + 2)^2.
std::uint64_t s_max(const GridGranularity& g, double delta);

// Worst-case travel time between any point of cell i1 and any point of i2.
double t_max(const GridGranularity& g, GranuleIndex i1, GranuleIndex i2, double velocity);

}  // namespace proxguard
