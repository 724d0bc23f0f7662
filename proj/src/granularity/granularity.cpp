#include "proxguard/granularity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "proxguard/error.hpp"

namespace proxguard {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(Semantics s) {
  switch (s) {
    case Semantics::kMinDist: return "min-dist";
    case Semantics::kMaxDist: return "max-dist";
    case Semantics::kMostly: return "mostly";
  }
  return "?";
}

Semantics parse_semantics(std::string_view name) {
  if (name == "min-dist") return Semantics::kMinDist;
  if (name == "max-dist") return Semantics::kMaxDist;
  if (name == "mostly") return Semantics::kMostly;
  throw ParameterError("unknown semantics '" + std::string(name) + "'");
}

GridGranularity::GridGranularity(Point origin, double cell_edge, std::uint32_t cols,
                                 std::uint32_t rows)
    : origin_(origin), cell_edge_(cell_edge), cols_(cols), rows_(rows) {
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw ParameterError("grid origin must be finite");
  }
  if (!(cell_edge > 0.0) || !std::isfinite(cell_edge)) {
    throw ParameterError("grid cell edge must be positive");
  }
  if (cols == 0 || rows == 0) throw ParameterError("grid needs at least one row and column");
}

bool GridGranularity::contains(const Point& p) const {
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= origin_.x && p.y >= origin_.y &&
         p.x <= origin_.x + width() && p.y <= origin_.y + height();
}

Rect GridGranularity::cell(GranuleIndex i) const {
  if (!is_valid(i)) {
    throw IndexError("granule index " + std::to_string(i.value) + " outside [0, " +
                     std::to_string(size()) + ")");
  }
  const auto col = static_cast<double>(i.value % cols_);
  const auto row = static_cast<double>(i.value / cols_);
  const double x_lo = origin_.x + col * cell_edge_;
  const double y_lo = origin_.y + row * cell_edge_;
  return {x_lo, y_lo, x_lo + cell_edge_, y_lo + cell_edge_};
}

GranuleIndex GridGranularity::index_of(std::uint32_t col, std::uint32_t row) const {
  if (col >= cols_ || row >= rows_) throw IndexError("cell coordinates outside the grid");
  return {std::uint64_t{row} * cols_ + col};
}

GranuleIndex granule_of(const GridGranularity& g, const Point& p) {
  if (!g.contains(p)) {
    throw DomainError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") outside the domain");
  }
  const auto clamp_axis = [](double offset, double edge, std::uint32_t n) {
    const double cell = std::floor(offset / edge);
    return static_cast<std::uint32_t>(std::clamp(cell, 0.0, static_cast<double>(n - 1)));
  };
  const auto col = clamp_axis(p.x - g.origin().x, g.cell_edge(), g.cols());
  const auto row = clamp_axis(p.y - g.origin().y, g.cell_edge(), g.rows());
  return g.index_of(col, row);
}

namespace {

double axis_gap(double v, double lo, double hi) { return std::max({lo - v, 0.0, v - hi}); }

double axis_far(double v, double lo, double hi) { return std::max(std::abs(v - lo), std::abs(v - hi)); }

double min_dist_rect(const Point& p, const Rect& r) {
  return std::hypot(axis_gap(p.x, r.x_lo, r.x_hi), axis_gap(p.y, r.y_lo, r.y_hi));
}

double max_dist_rect(const Point& p, const Rect& r) {
  return std::hypot(axis_far(p.x, r.x_lo, r.x_hi), axis_far(p.y, r.y_lo, r.y_hi));
}

double covered_fraction_rect(const Point& p, const Rect& r, double delta, int lattice) {
  const double step_x = (r.x_hi - r.x_lo) / lattice;
  const double step_y = (r.y_hi - r.y_lo) / lattice;
  const double delta_sq = delta * delta;
  long inside = 0;
  for (int a = 0; a < lattice; ++a) {
    const double dx = r.x_lo + (a + 0.5) * step_x - p.x;
    for (int b = 0; b < lattice; ++b) {
      const double dy = r.y_lo + (b + 0.5) * step_y - p.y;
      if (dx * dx + dy * dy <= delta_sq) ++inside;
    }
  }
  return static_cast<double>(inside) / (static_cast<double>(lattice) * lattice);
}

bool qualifies(const Point& p, const Rect& r, double delta, Semantics semantics) {
  const double near = min_dist_rect(p, r);
  if (near > delta) return false;
  switch (semantics) {
    case Semantics::kMinDist: return true;
    case Semantics::kMaxDist: return max_dist_rect(p, r) <= delta;
    case Semantics::kMostly:
      if (max_dist_rect(p, r) <= delta) return true;
      return covered_fraction_rect(p, r, delta, kDefaultCoverageLattice) >= 0.5;
  }
  return false;
}

}  // namespace

double min_dist(const Point& p, const GridGranularity& g, GranuleIndex i) {
  return min_dist_rect(p, g.cell(i));
}

double max_dist(const Point& p, const GridGranularity& g, GranuleIndex i) {
  return max_dist_rect(p, g.cell(i));
}

double covered_fraction(const Point& p, const GridGranularity& g, GranuleIndex i, double delta,
                        int lattice) {
  const Rect r = g.cell(i);
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  if (lattice <= 0) throw ParameterError("coverage lattice must be positive");
  if (min_dist_rect(p, r) > delta) return 0.0;
  if (max_dist_rect(p, r) <= delta) return 1.0;
  return covered_fraction_rect(p, r, delta, lattice);
}

bool in_proximity_of_cell(const Point& p, const GridGranularity& g, GranuleIndex i, double delta,
                          Semantics semantics) {
  return qualifies(p, g.cell(i), delta, semantics);
}

std::vector<GranuleIndex> proximity_candidates(const Point& p, const GridGranularity& g,
                                               double delta, Semantics semantics) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ParameterError("delta must be positive");
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ParameterError("point must be finite");

  // Only cells overlapping the disc's bounding box can qualify.
  const double l = g.cell_edge();
  const auto span = [l](double lo_offset, double hi_offset, std::uint32_t n)
      -> std::pair<std::int64_t, std::int64_t> {
    const auto lo = static_cast<std::int64_t>(std::floor(lo_offset / l)) - 1;
    const auto hi = static_cast<std::int64_t>(std::floor(hi_offset / l)) + 1;
    return {std::max<std::int64_t>(lo, 0), std::min<std::int64_t>(hi, std::int64_t{n} - 1)};
  };
  const auto [c_lo, c_hi] = span(p.x - delta - g.origin().x, p.x + delta - g.origin().x, g.cols());
  const auto [r_lo, r_hi] = span(p.y - delta - g.origin().y, p.y + delta - g.origin().y, g.rows());

  std::vector<GranuleIndex> out;
  for (std::int64_t row = r_lo; row <= r_hi; ++row) {
    for (std::int64_t col = c_lo; col <= c_hi; ++col) {
      const GranuleIndex i =
          g.index_of(static_cast<std::uint32_t>(col), static_cast<std::uint32_t>(row));
      if (qualifies(p, g.cell(i), delta, semantics)) out.push_back(i);
    }
  }
  return out;
}

std::uint64_t s_max(const GridGranularity& g, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ParameterError("delta must be positive");
  const auto span = static_cast<std::uint64_t>(std::ceil(2.0 * delta / g.cell_edge())) + 2;
  return span * span;
}

double t_max(const GridGranularity& g, GranuleIndex i1, GranuleIndex i2, double velocity) {
  if (!(velocity > 0.0) || !std::isfinite(velocity)) {
    throw ParameterError("velocity must be positive");
  }
  const Rect a = g.cell(i1);
  const Rect b = g.cell(i2);
  const double dx = std::max(std::abs(a.x_hi - b.x_lo), std::abs(b.x_hi - a.x_lo));
  const double dy = std::max(std::abs(a.y_hi - b.y_lo), std::abs(b.y_hi - a.y_lo));
  return std::hypot(dx, dy) / velocity;
}

}  // namespace proxguard
