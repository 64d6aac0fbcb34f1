#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "perlat/geometry.hpp"

namespace perlat {

/// Uniform cell grid over a pattern's window for fixed-radius pair queries.
class CellGrid {
 public:
  CellGrid(const PointPattern& pattern, double cell_size);

  /// Calls f(i, j, delta, dist) once for every unordered pair i < j with
  /// |x_j - x_i| <= rmax, delta = x_j - x_i. Requires rmax <= cell_size.
  /// The visiting order depends only on the input.
  template <class F>
  void for_each_pair(double rmax, F&& f) const;

  /// Index and distance of the nearest other point of every point.
  /// Requires at least two points.
  void nearest_neighbors(std::vector<std::size_t>& index, std::vector<double>& dist) const;

 private:
  std::size_t cell_of(const Point& x) const;

  const PointPattern* pattern_;
  int dim_;
  double cell_;
  std::array<long, kMaxDim> n_{1, 1, 1};
  std::vector<std::size_t> start_;  // CSR offsets per cell
  std::vector<std::size_t> items_;  // point indices grouped by cell
};

template <class F>
void CellGrid::for_each_pair(double rmax, F&& f) const {
  const auto& pts = pattern_->points;
  const double r2 = rmax * rmax;
  const long nx = n_[0], ny = n_[1], nz = n_[2];
  for (long cx = 0; cx < nx; ++cx) {
    for (long cy = 0; cy < ny; ++cy) {
      for (long cz = 0; cz < nz; ++cz) {
        const std::size_t c = static_cast<std::size_t>((cx * ny + cy) * nz + cz);
        // Neighbouring cells in lexicographic order, only those >= c.
        for (long dx = -1; dx <= 1; ++dx) {
          const long ax = cx + dx;
          if (ax < 0 || ax >= nx) continue;
          for (long dy = -1; dy <= 1; ++dy) {
            const long ay = cy + dy;
            if (ay < 0 || ay >= ny) continue;
            for (long dz = -1; dz <= 1; ++dz) {
              const long az = cz + dz;
              if (az < 0 || az >= nz) continue;
              const std::size_t o = static_cast<std::size_t>((ax * ny + ay) * nz + az);
              if (o < c) continue;
              for (std::size_t a = start_[c]; a < start_[c + 1]; ++a) {
                const std::size_t i = items_[a];
                const std::size_t b0 = (o == c) ? a + 1 : start_[o];
                for (std::size_t b = b0; b < start_[o + 1]; ++b) {
                  const std::size_t j = items_[b];
                  Point delta{};
                  double s = 0.0;
                  for (int k = 0; k < dim_; ++k) {
                    delta[k] = pts[j][k] - pts[i][k];
                    s += delta[k] * delta[k];
                  }
                  if (s <= r2) {
                    if (i < j) {
                      f(i, j, delta, std::sqrt(s));
                    } else {
                      for (int k = 0; k < dim_; ++k) delta[k] = -delta[k];
                      f(j, i, delta, std::sqrt(s));
                    }
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace perlat
