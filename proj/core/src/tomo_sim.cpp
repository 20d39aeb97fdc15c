#include "dfs/tomo_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace dfs {

Point2 PixelGrid::pixel_center(std::size_t j) const {
  const auto row = static_cast<double>(j / width);
  const auto col = static_cast<double>(j % width);
  return {x_min() + (col + 0.5) * pixel_size, y_max() - (row + 0.5) * pixel_size};
}

double PixelGrid::half_diagonal() const {
  return 0.5 * pixel_size * std::hypot(static_cast<double>(width), static_cast<double>(height));
}

void PixelGrid::validate() const {
  if (width == 0 || height == 0) throw std::invalid_argument("PixelGrid: width and height must be positive");
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw std::invalid_argument("PixelGrid: pixel_size must be positive");
}

bool Ellipse::contains(Point2 p) const {
  const double dx = p.x - cx;
  const double dy = p.y - cy;
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  const double u = (dx * c + dy * s) / ax;
  const double v = (-dx * s + dy * c) / ay;
  return u * u + v * v <= 1.0;
}

double EllipsePhantom::density_at(Point2 p) const {
  double d = 0.0;
  for (const auto& e : ellipses)
    if (e.contains(p)) d += e.density;
  return d;
}

void EllipsePhantom::validate() const {
  for (std::size_t k = 0; k < ellipses.size(); ++k) {
    const auto& e = ellipses[k];
    if (!(e.ax > 0.0) || !(e.ay > 0.0))
      throw std::invalid_argument(fmt::format("phantom ellipse {}: semi-axes must be positive", k));
    if (!std::isfinite(e.cx) || !std::isfinite(e.cy) || !std::isfinite(e.rotation) ||
        !std::isfinite(e.density))
      throw std::invalid_argument(fmt::format("phantom ellipse {}: non-finite parameter", k));
  }
}

EllipsePhantom default_head_phantom(const PixelGrid& grid) {
  const double lx = 0.5 * static_cast<double>(grid.width) * grid.pixel_size;
  const double ly = 0.5 * static_cast<double>(grid.height) * grid.pixel_size;
  // Contrast is large next to the default step sizes (b = 0.02): brain 4.2,
  // skull 8.0, so a single perturbation moves a pixel by well under 1%.
  return EllipsePhantom{{
      {0.0, 0.0, 0.70 * lx, 0.90 * ly, 0.0, 8.0},                 // skull
      {0.0, -0.02 * ly, 0.64 * lx, 0.84 * ly, 0.0, -3.8},         // brain
      {-0.22 * lx, 0.15 * ly, 0.14 * lx, 0.26 * ly, 0.35, 1.2},   // feature
      {0.25 * lx, -0.35 * ly, 0.12 * lx, 0.12 * ly, 0.0, -1.0},   // feature
  }};
}

EllipsePhantom read_phantom(std::istream& in) {
  EllipsePhantom phantom;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Ellipse e;
    if (!(ls >> e.cx >> e.cy >> e.ax >> e.ay >> e.rotation >> e.density))
      throw std::runtime_error(fmt::format("phantom line {}: expected `cx cy ax ay rot density`", lineno));
    std::string extra;
    if (ls >> extra) throw std::runtime_error(fmt::format("phantom line {}: trailing text", lineno));
    phantom.ellipses.push_back(e);
  }
  phantom.validate();
  return phantom;
}

void write_phantom(std::ostream& out, const EllipsePhantom& phantom) {
  out << "# cx cy ax ay rot density\n";
  for (const auto& e : phantom.ellipses)
    fmt::print(out, "{} {} {} {} {} {}\n", e.cx, e.cy, e.ax, e.ay, e.rotation, e.density);
}

FanGeometry FanGeometry::covering(const PixelGrid& grid, std::size_t projections,
                                  std::size_t rays_per_projection) {
  FanGeometry g;
  g.projections = projections;
  g.rays_per_projection = rays_per_projection;
  const double r = grid.half_diagonal();
  g.source_radius = 2.0 * r;
  const double half_fan = std::asin(r / g.source_radius);
  g.fan_increment =
      rays_per_projection > 1 ? 2.0 * half_fan / static_cast<double>(rays_per_projection - 1) : 0.0;
  return g;
}

FanGeometry::Ray FanGeometry::ray(std::size_t projection, std::size_t index) const {
  const double theta = 2.0 * std::numbers::pi * static_cast<double>(projection) /
                       static_cast<double>(projections);
  const double offset =
      (static_cast<double>(index) - 0.5 * static_cast<double>(rays_per_projection - 1)) * fan_increment;
  const double heading = theta + std::numbers::pi + offset;
  return {{source_radius * std::cos(theta), source_radius * std::sin(theta)},
          {std::cos(heading), std::sin(heading)}};
}

void FanGeometry::validate() const {
  if (projections == 0 || rays_per_projection == 0)
    throw std::invalid_argument("FanGeometry: projection and ray counts must be positive");
  if (!(source_radius > 0.0)) throw std::invalid_argument("FanGeometry: source_radius must be positive");
  if (!std::isfinite(fan_increment) || fan_increment < 0.0)
    throw std::invalid_argument("FanGeometry: fan_increment must be finite and nonnegative");
}

ImageVector rasterize(const PixelGrid& grid, const EllipsePhantom& phantom) {
  grid.validate();
  ImageVector image(grid.width, grid.height);
  for (std::size_t j = 0; j < grid.size(); ++j) image[j] = phantom.density_at(grid.pixel_center(j));
  return image;
}

namespace {

// Parameters t in (lo, hi) at which the line crosses the planes origin + k*step,
// k = 0..count, listed in increasing t.
void plane_crossings(double start, double dir, double origin, double step, std::size_t count,
                     double lo, double hi, std::vector<double>& out) {
  out.clear();
  if (dir == 0.0) return;
  for (std::size_t k = 0; k <= count; ++k) {
    const double t = (origin + static_cast<double>(k) * step - start) / dir;
    if (t > lo && t < hi) out.push_back(t);
  }
  if (dir < 0.0) std::reverse(out.begin(), out.end());
}

}  // namespace

SparseRow trace_ray(const PixelGrid& grid, Point2 source, Point2 direction) {
  const double norm = std::hypot(direction.x, direction.y);
  if (!(norm > 0.0)) throw std::invalid_argument("trace_ray: direction must be nonzero");
  const Point2 u{direction.x / norm, direction.y / norm};

  const double x0 = grid.x_min();
  const double x1 = -x0;
  const double y1 = grid.y_max();
  const double y0 = -y1;

  // Slab clipping against the grid's bounding box.
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  auto clip = [&](double s, double d, double lo, double hi) {
    if (d == 0.0) {
      if (s < lo || s > hi) t_lo = std::numeric_limits<double>::infinity();
      return;
    }
    double a = (lo - s) / d;
    double b = (hi - s) / d;
    if (a > b) std::swap(a, b);
    t_lo = std::max(t_lo, a);
    t_hi = std::min(t_hi, b);
  };
  clip(source.x, u.x, x0, x1);
  clip(source.y, u.y, y0, y1);
  if (!(t_hi > t_lo)) return {};

  thread_local std::vector<double> tx, ty, ts;
  plane_crossings(source.x, u.x, x0, grid.pixel_size, grid.width, t_lo, t_hi, tx);
  plane_crossings(source.y, u.y, y0, grid.pixel_size, grid.height, t_lo, t_hi, ty);
  ts.clear();
  ts.reserve(tx.size() + ty.size() + 2);
  ts.push_back(t_lo);
  std::merge(tx.begin(), tx.end(), ty.begin(), ty.end(), std::back_inserter(ts));
  ts.push_back(t_hi);

  const double min_length = 1e-12 * grid.pixel_size;
  const auto max_col = static_cast<long>(grid.width) - 1;
  const auto max_row = static_cast<long>(grid.height) - 1;
  std::vector<SparseEntry> entries;
  entries.reserve(ts.size());
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double length = ts[k + 1] - ts[k];
    if (length <= min_length) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const double mx = source.x + tm * u.x;
    const double my = source.y + tm * u.y;
    const long col = std::clamp(static_cast<long>(std::floor((mx - x0) / grid.pixel_size)), 0L, max_col);
    const long row = std::clamp(static_cast<long>(std::floor((y1 - my) / grid.pixel_size)), 0L, max_row);
    entries.push_back({static_cast<std::uint32_t>(row * static_cast<long>(grid.width) + col), length});
  }
  return SparseRow::from_unsorted(std::move(entries));
}

GeneratedProblem generate(const PixelGrid& grid, const FanGeometry& geometry,
                          const EllipsePhantom& phantom, std::optional<NoiseModel> noise) {
  grid.validate();
  geometry.validate();
  phantom.validate();

  ImageVector x_hat = rasterize(grid, phantom);

  std::vector<SparseRow> rows;
  std::vector<double> rhs;
  rows.reserve(geometry.ray_count());
  rhs.reserve(geometry.ray_count());

  std::mt19937_64 rng(noise ? noise->seed : 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = noise && noise->relative_sigma != 0.0;

  for (std::size_t p = 0; p < geometry.projections; ++p) {
    for (std::size_t m = 0; m < geometry.rays_per_projection; ++m) {
      const auto ray = geometry.ray(p, m);
      SparseRow row = trace_ray(grid, ray.source, ray.direction);
      double h = row.dot(x_hat.values());
      // One draw per candidate ray keeps the noise stream aligned with ray order.
      if (noisy) h *= 1.0 + noise->relative_sigma * gauss(rng);
      rows.push_back(std::move(row));
      rhs.push_back(h);
    }
  }
  return {build_system(std::move(rows), std::move(rhs), grid.size(), ZeroRowPolicy::drop),
          std::move(x_hat)};
}

void write_pgm(const std::filesystem::path& path, const ImageVector& image) {
  const auto [lo_it, hi_it] = std::minmax_element(image.values().begin(), image.values().end());
  const double lo = image.size() ? *lo_it : 0.0;
  const double hi = image.size() ? *hi_it : 0.0;
  const double span = hi - lo;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  fmt::print(out, "P5\n{} {}\n255\n", image.width(), image.height());
  std::vector<unsigned char> pixels(image.size());
  for (std::size_t j = 0; j < image.size(); ++j) {
    const double g = span > 0.0 ? 255.0 * (image[j] - lo) / span : 0.0;
    pixels[j] = static_cast<unsigned char>(std::lround(std::clamp(g, 0.0, 255.0)));
  }
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));

  std::ofstream side(path.string() + ".txt");
  if (!side) throw std::runtime_error(fmt::format("cannot write {}.txt", path.string()));
  fmt::print(side, "min={}\nmax={}\n", lo, hi);
}

}  // namespace dfs
