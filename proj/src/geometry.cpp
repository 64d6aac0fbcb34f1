#include "perlat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "perlat/error.hpp"

namespace perlat {

double unit_ball_volume(int dim) {
  const double h = 0.5 * dim;
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

double unit_sphere_area(int dim) { return dim * unit_ball_volume(dim); }

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw ConfigError("dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
  }
}

Lattice::Lattice(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
  if (basis_.rows() != basis_.cols()) throw ConfigError("lattice basis must be square");
  check_dim(static_cast<int>(basis_.rows()));
}

Lattice Lattice::integer(int dim) {
  check_dim(dim);
  return Lattice(Eigen::MatrixXd::Identity(dim, dim));
}

bool Lattice::is_integer() const {
  return (basis_ - Eigen::MatrixXd::Identity(dim(), dim())).cwiseAbs().maxCoeff() == 0.0;
}

Lattice dual_lattice(const Lattice& lat) {
  if (lat.covolume() <= 1e-12) throw NumericalError("degenerate lattice");
  return Lattice(lat.basis().transpose().inverse());
}

std::vector<Point> lattice_points_in_ball(const Lattice& lat, double radius, std::size_t cap) {
  if (!(radius >= 0.0)) throw ConfigError("radius must be nonnegative");
  if (lat.covolume() <= 1e-12) throw NumericalError("degenerate lattice");
  const int d = lat.dim();
  const double expected = unit_ball_volume(d) * std::pow(radius, d) / lat.covolume();
  if (expected > static_cast<double>(cap)) throw NumericalError("enumeration too large");

  // |B i| <= R implies |i_k| <= R * |row_k(B^{-1})|.
  const Eigen::MatrixXd inv = lat.basis().inverse();
  std::array<long, kMaxDim> bound{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    bound[k] = static_cast<long>(std::floor(radius * inv.row(k).norm() + 1e-9));
  }
  const double r2 = radius * radius;
  std::vector<Point> out;
  Eigen::VectorXd coeff(d);
  for (long a = -bound[0]; a <= bound[0]; ++a) {
    for (long b = (d > 1 ? -bound[1] : 0); b <= (d > 1 ? bound[1] : 0); ++b) {
      for (long c = (d > 2 ? -bound[2] : 0); c <= (d > 2 ? bound[2] : 0); ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        coeff(0) = static_cast<double>(a);
        if (d > 1) coeff(1) = static_cast<double>(b);
        if (d > 2) coeff(2) = static_cast<double>(c);
        const Eigen::VectorXd x = lat.basis() * coeff;
        if (x.squaredNorm() <= r2 * (1.0 + 1e-14)) {
          Point p{};
          for (int k = 0; k < d; ++k) p[k] = x(k);
          out.push_back(p);
          if (out.size() > cap) throw NumericalError("enumeration too large");
        }
      }
    }
  }
  return out;
}

namespace {

// r_d(n) for 0 <= n <= max_norm2, built by convolving one-dimensional counts.
std::vector<std::int64_t> representation_counts(int dim, std::int64_t max_norm2) {
  std::vector<std::int64_t> cur(static_cast<std::size_t>(max_norm2) + 1, 0);
  cur[0] = 1;
  for (int k = 0; k < dim; ++k) {
    std::vector<std::int64_t> next(cur.size(), 0);
    for (std::int64_t n = 0; n <= max_norm2; ++n) {
      if (cur[n] == 0) continue;
      for (std::int64_t m = 0; n + m * m <= max_norm2; ++m) {
        next[n + m * m] += cur[n] * (m == 0 ? 1 : 2);
      }
    }
    cur.swap(next);
  }
  return cur;
}

struct ShellCache {
  std::mutex mutex;
  std::array<std::vector<std::int64_t>, kMaxDim + 1> counts;
};

ShellCache& shell_cache() {
  static ShellCache cache;
  return cache;
}

}  // namespace

std::vector<Shell> integer_shells(int dim, double radius) {
  check_dim(dim);
  if (!(radius >= 0.0)) throw ConfigError("radius must be nonnegative");
  const auto max_norm2 = static_cast<std::int64_t>(std::floor(radius * radius + 1e-9));
  if (unit_ball_volume(dim) * std::pow(radius, dim) > static_cast<double>(kDefaultEnumerationCap)) {
    throw NumericalError("enumeration too large");
  }
  auto& cache = shell_cache();
  std::vector<Shell> out;
  std::lock_guard lock(cache.mutex);
  auto& counts = cache.counts[dim];
  if (static_cast<std::int64_t>(counts.size()) <= max_norm2) {
    const std::int64_t grow = std::max<std::int64_t>(max_norm2, 2 * static_cast<std::int64_t>(counts.size()));
    counts = representation_counts(dim, grow);
  }
  for (std::int64_t n = 1; n <= max_norm2; ++n) {
    if (counts[n] > 0) out.push_back({n, counts[n]});
  }
  return out;
}

BoxWindow BoxWindow::cube(int dim, double lo, double hi) {
  check_dim(dim);
  BoxWindow w;
  w.dim = dim;
  for (int k = 0; k < dim; ++k) {
    w.min[k] = lo;
    w.max[k] = hi;
  }
  return w;
}

double BoxWindow::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= side(k);
  return v;
}

double BoxWindow::shortest_side() const {
  double s = side(0);
  for (int k = 1; k < dim; ++k) s = std::min(s, side(k));
  return s;
}

Point BoxWindow::center() const {
  Point c{};
  for (int k = 0; k < dim; ++k) c[k] = 0.5 * (min[k] + max[k]);
  return c;
}

bool BoxWindow::contains(const Point& x) const {
  for (int k = 0; k < dim; ++k) {
    if (x[k] < min[k] || x[k] > max[k]) return false;
  }
  return true;
}

bool BoxWindow::contains(const BoxWindow& inner) const {
  if (inner.dim != dim) return false;
  for (int k = 0; k < dim; ++k) {
    if (inner.min[k] < min[k] || inner.max[k] > max[k]) return false;
  }
  return true;
}

double BoxWindow::boundary_distance(const Point& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim; ++k) d = std::min({d, x[k] - min[k], max[k] - x[k]});
  return d;
}

BoxWindow BoxWindow::inflated(double margin) const {
  BoxWindow w = *this;
  for (int k = 0; k < dim; ++k) {
    w.min[k] -= margin;
    w.max[k] += margin;
  }
  return w;
}

void BoxWindow::validate() const {
  check_dim(dim);
  for (int k = 0; k < dim; ++k) {
    if (!std::isfinite(min[k]) || !std::isfinite(max[k]) || !(max[k] > min[k])) {
      throw ConfigError("window needs finite bounds with max > min on every axis");
    }
  }
}

double PointPattern::intensity() const {
  return static_cast<double>(points.size()) / window.volume();
}

void PointPattern::validate() const {
  check_dim(dim);
  if (window.dim != dim) throw ConfigError("pattern and window dimensions differ");
  window.validate();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!window.contains(points[i])) {
      throw InputError("point " + std::to_string(i) + " lies outside the window");
    }
  }
}

PointPattern crop(const PointPattern& pattern, const BoxWindow& target) {
  target.validate();
  if (!pattern.window.contains(target)) {
    throw ConfigError("crop target is not contained in the source window");
  }
  PointPattern out;
  out.dim = pattern.dim;
  out.window = target;
  for (const auto& p : pattern.points) {
    if (target.contains(p)) out.points.push_back(p);
  }
  return out;
}

double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double norm(const Point& a, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += a[k] * a[k];
  return std::sqrt(s);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng make_rng(const SeedSpec& seed) {
  const std::uint64_t a = splitmix64(seed.master_seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(seed.stream_id + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace perlat
