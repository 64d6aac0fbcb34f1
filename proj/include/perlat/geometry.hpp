#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace perlat {

inline constexpr int kMaxDim = 3;

// A point in R^d for d <= 3. Coordinates beyond `dim` are kept at zero so that
// arithmetic on the full array stays valid.
using Point = std::array<double, kMaxDim>;

// Volume of the unit ball in R^d.
double unit_ball_volume(int dim);

// Surface area of the unit sphere in R^d (= d * unit_ball_volume(d)).
double unit_sphere_area(int dim);

void check_dim(int dim);

/// A lattice {B i : i in Z^d} with the basis vectors as the columns of B.
class Lattice {
 public:
  explicit Lattice(Eigen::MatrixXd basis);

  static Lattice integer(int dim);

  int dim() const { return static_cast<int>(basis_.rows()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  double covolume() const { return std::abs(basis_.determinant()); }
  bool is_integer() const;

 private:
  Eigen::MatrixXd basis_;
};

/// Dual lattice with basis (B^T)^{-1}. Throws NumericalError("degenerate
/// lattice") if |det B| <= 1e-12.
Lattice dual_lattice(const Lattice& lat);

inline constexpr std::size_t kDefaultEnumerationCap = 100'000'000;

/// Every lattice point except the origin with |x| <= radius (closed ball).
std::vector<Point> lattice_points_in_ball(const Lattice& lat, double radius,
                                          std::size_t cap = kDefaultEnumerationCap);

/// A shell {i in Z^d : |i|^2 = norm2} and its cardinality.
struct Shell {
  std::int64_t norm2;
  std::int64_t count;
};

/// Shells of Z^d \ {0} with |i| <= radius in increasing order of norm.
/// The underlying enumeration is memoized per dimension.
std::vector<Shell> integer_shells(int dim, double radius);

/// Closed axis-aligned box [min, max].
struct BoxWindow {
  int dim = 3;
  Point min{};
  Point max{};

  static BoxWindow cube(int dim, double lo, double hi);

  double side(int k) const { return max[k] - min[k]; }
  double volume() const;
  double shortest_side() const;
  Point center() const;
  bool contains(const Point& x) const;
  bool contains(const BoxWindow& inner) const;
  /// Distance from an interior point to the boundary.
  double boundary_distance(const Point& x) const;
  /// Box grown by `margin` on every side.
  BoxWindow inflated(double margin) const;
  void validate() const;
};

struct PointPattern {
  int dim = 3;
  std::vector<Point> points;
  BoxWindow window;

  std::size_t size() const { return points.size(); }
  double intensity() const;
  /// Checks dimension agreement and that every point lies in the window.
  void validate() const;
};

/// Points of `pattern` inside `target` (closed), with window = target.
/// Throws ConfigError if target is not contained in pattern.window.
PointPattern crop(const PointPattern& pattern, const BoxWindow& target);

double distance(const Point& a, const Point& b, int dim);
double norm(const Point& a, int dim);

// ---------------------------------------------------------------------------
// Deterministic seeding.

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  SeedSpec with_stream(std::uint64_t stream) const { return {master_seed, stream}; }
  bool operator==(const SeedSpec&) const = default;
};

using Rng = std::mt19937_64;

/// Generator state as a pure function of (master_seed, stream_id).
Rng make_rng(const SeedSpec& seed);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace perlat
