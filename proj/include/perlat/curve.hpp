#pragma once

#include <string>
#include <vector>

namespace perlat {

enum class CurveKind { K, L_centered, pcf, G, numvar, structure_factor, other };

std::string to_string(CurveKind kind);

/// A function of distance (or wavenumber) sampled on an increasing grid.
struct SummaryCurve {
  std::vector<double> r;
  std::vector<double> values;
  CurveKind kind = CurveKind::other;

  std::size_t size() const { return r.size(); }
  /// Throws ConfigError unless the grid is strictly increasing and nonnegative,
  /// sizes agree and values are finite.
  void validate() const;
};

/// Checks an evaluation grid: nonempty, nonnegative, strictly increasing.
void check_grid(const std::vector<double>& r_grid);

/// lo, lo + step, ..., up to hi (inclusive within 1e-9 step).
std::vector<double> linear_grid(double lo, double hi, double step);

/// Linear interpolation of `curve` at x; throws ConfigError outside the grid.
double interpolate(const SummaryCurve& curve, double x);

}  // namespace perlat
