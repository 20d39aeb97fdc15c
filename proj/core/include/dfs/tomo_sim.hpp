#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dfs/sparse_system.hpp"

namespace dfs {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Square pixels of side pixel_size on a W x H array centered at the origin.
/// Pixel row 0 is the top row (largest y); index j = row * width + col.
struct PixelGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  double pixel_size = 1.0;

  std::size_t size() const { return width * height; }
  double x_min() const { return -0.5 * static_cast<double>(width) * pixel_size; }
  double y_max() const { return 0.5 * static_cast<double>(height) * pixel_size; }
  Point2 pixel_center(std::size_t j) const;
  /// Radius of the circle circumscribing the grid.
  double half_diagonal() const;
  void validate() const;
};

struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double ax = 1.0;
  double ay = 1.0;
  double rotation = 0.0;  // radians, counter-clockwise
  double density = 0.0;

  bool contains(Point2 p) const;
};

/// Additive overlay of ellipses; coordinates are in the grid's length units.
struct EllipsePhantom {
  std::vector<Ellipse> ellipses;

  double density_at(Point2 p) const;
  void validate() const;
};

/// Head-like phantom scaled to the grid: a skull ring (outer ellipse plus a
/// negative inner ellipse) and two interior features. Four ellipses in total.
EllipsePhantom default_head_phantom(const PixelGrid& grid);

/// One ellipse per line: `cx cy ax ay rot density`. Blank lines and `#` comments ignored.
EllipsePhantom read_phantom(std::istream& in);
void write_phantom(std::ostream& out, const EllipsePhantom& phantom);

/// Divergent (fan-beam) geometry. Projection p has its source at angle
/// 2*pi*p/P on a circle of radius source_radius; ray m leaves the source at an
/// angular offset (m - (M-1)/2) * fan_increment from the line to the origin.
struct FanGeometry {
  std::size_t projections = 0;
  std::size_t rays_per_projection = 0;
  double source_radius = 0.0;
  double fan_increment = 0.0;

  /// Source at twice the grid's half diagonal, fan spanning the circumscribed circle.
  static FanGeometry covering(const PixelGrid& grid, std::size_t projections,
                              std::size_t rays_per_projection);

  std::size_t ray_count() const { return projections * rays_per_projection; }
  struct Ray {
    Point2 source;
    Point2 direction;  // unit length
  };
  Ray ray(std::size_t projection, std::size_t index) const;
  void validate() const;
};

/// Pixel-center sampling of the phantom.
ImageVector rasterize(const PixelGrid& grid, const EllipsePhantom& phantom);

/// Intersection lengths of the line source + t*direction (t real) with every
/// pixel. Rays that miss the grid produce an empty row.
SparseRow trace_ray(const PixelGrid& grid, Point2 source, Point2 direction);

struct NoiseModel {
  std::uint64_t seed = 0;
  double relative_sigma = 0.0;
};

struct GeneratedProblem {
  ConstraintSystem system;
  ImageVector phantom;
};

/// Rows in projection-major, ray-minor order with rays missing the grid dropped.
/// h_i = <d^i, x_hat>, scaled by (1 + sigma * g_i) per candidate ray when noise is set.
GeneratedProblem generate(const PixelGrid& grid, const FanGeometry& geometry,
                          const EllipsePhantom& phantom,
                          std::optional<NoiseModel> noise = std::nullopt);

/// Binary 8-bit PGM with gray = round(255 * (v - lo) / (hi - lo)), lo/hi the
/// image min/max. The mapping bounds go to a sidecar `<path>.txt` as `min=.. max=..`.
void write_pgm(const std::filesystem::path& path, const ImageVector& image);

}  // namespace dfs
