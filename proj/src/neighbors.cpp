#include "perlat/neighbors.hpp"

#include <algorithm>
#include <limits>

#include "perlat/error.hpp"

namespace perlat {

CellGrid::CellGrid(const PointPattern& pattern, double cell_size)
    : pattern_(&pattern), dim_(pattern.dim), cell_(cell_size) {
  check_dim(dim_);
  if (!(cell_size > 0.0)) throw ConfigError("cell size must be positive");
  const auto& w = pattern.window;
  // Keep the grid modest when the cell is small relative to the window.
  const double total_cap = 4.0 * static_cast<double>(std::max<std::size_t>(pattern.size(), 1)) + 64.0;
  double cells = 1.0;
  for (int k = 0; k < dim_; ++k) {
    n_[k] = std::max(1L, static_cast<long>(std::floor(w.side(k) / cell_size)));
    cells *= static_cast<double>(n_[k]);
  }
  while (cells > total_cap) {
    cell_ *= 1.25;
    cells = 1.0;
    for (int k = 0; k < dim_; ++k) {
      n_[k] = std::max(1L, static_cast<long>(std::floor(w.side(k) / cell_)));
      cells *= static_cast<double>(n_[k]);
    }
  }
  const auto total = static_cast<std::size_t>(cells);
  std::vector<std::size_t> cell_index(pattern.size());
  start_.assign(total + 1, 0);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    cell_index[i] = cell_of(pattern.points[i]);
    ++start_[cell_index[i] + 1];
  }
  for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
  items_.resize(pattern.size());
  std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < pattern.size(); ++i) items_[fill[cell_index[i]]++] = i;
}

std::size_t CellGrid::cell_of(const Point& x) const {
  const auto& w = pattern_->window;
  std::array<long, kMaxDim> c{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    const double width = w.side(k) / static_cast<double>(n_[k]);
    c[k] = std::clamp(static_cast<long>(std::floor((x[k] - w.min[k]) / width)), 0L, n_[k] - 1);
  }
  return static_cast<std::size_t>((c[0] * n_[1] + c[1]) * n_[2] + c[2]);
}

void CellGrid::nearest_neighbors(std::vector<std::size_t>& index, std::vector<double>& dist) const {
  const auto& pts = pattern_->points;
  const std::size_t n = pts.size();
  if (n < 2) throw ConfigError("nearest neighbours need at least two points");
  index.assign(n, 0);
  dist.assign(n, std::numeric_limits<double>::infinity());
  const auto& w = pattern_->window;
  std::array<double, kMaxDim> width{1, 1, 1};
  for (int k = 0; k < dim_; ++k) width[k] = w.side(k) / static_cast<double>(n_[k]);
  const double min_width = *std::min_element(width.begin(), width.begin() + dim_);

  for (std::size_t i = 0; i < n; ++i) {
    const Point& x = pts[i];
    std::array<long, kMaxDim> home{0, 0, 0};
    for (int k = 0; k < dim_; ++k) {
      home[k] = std::clamp(static_cast<long>(std::floor((x[k] - w.min[k]) / width[k])), 0L, n_[k] - 1);
    }
    // Grow the searched cube of cells ring by ring until the best distance
    // cannot be beaten by any cell outside it.
    for (long ring = 0;; ++ring) {
      bool any_cell = false;
      std::array<long, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
      for (int k = 0; k < dim_; ++k) {
        lo[k] = home[k] - ring;
        hi[k] = home[k] + ring;
      }
      for (long a = std::max(lo[0], 0L); a <= std::min(hi[0], n_[0] - 1); ++a) {
        for (long b = std::max(lo[1], 0L); b <= std::min(hi[1], n_[1] - 1); ++b) {
          for (long c = std::max(lo[2], 0L); c <= std::min(hi[2], n_[2] - 1); ++c) {
            const bool on_shell = a == lo[0] || a == hi[0] || (dim_ > 1 && (b == lo[1] || b == hi[1])) ||
                                  (dim_ > 2 && (c == lo[2] || c == hi[2]));
            if (!on_shell) continue;
            any_cell = true;
            const auto cell = static_cast<std::size_t>((a * n_[1] + b) * n_[2] + c);
            for (std::size_t t = start_[cell]; t < start_[cell + 1]; ++t) {
              const std::size_t j = items_[t];
              if (j == i) continue;
              const double dd = distance(x, pts[j], dim_);
              if (dd < dist[i] || (dd == dist[i] && j < index[i])) {
                dist[i] = dd;
                index[i] = j;
              }
            }
          }
        }
      }
      if (!any_cell) break;
      if (dist[i] <= static_cast<double>(ring) * min_width) break;
    }
  }
}

}  // namespace perlat
