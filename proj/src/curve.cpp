#include "perlat/curve.hpp"

#include <algorithm>
#include <cmath>

#include "perlat/error.hpp"

namespace perlat {

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::K: return "K";
    case CurveKind::L_centered: return "L_centered";
    case CurveKind::pcf: return "pcf";
    case CurveKind::G: return "G";
    case CurveKind::numvar: return "numvar";
    case CurveKind::structure_factor: return "structure_factor";
    case CurveKind::other: return "other";
  }
  return "other";
}

void check_grid(const std::vector<double>& r_grid) {
  if (r_grid.empty()) throw ConfigError("empty r grid");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!std::isfinite(r_grid[i]) || r_grid[i] < 0.0) throw ConfigError("r grid values must be finite and >= 0");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1])) throw ConfigError("r grid must be strictly increasing");
  }
}

void SummaryCurve::validate() const {
  check_grid(r);
  if (values.size() != r.size()) throw ConfigError("curve grid and values differ in length");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("curve values must be finite");
  }
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("grid needs step > 0 and hi >= lo");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

double interpolate(const SummaryCurve& curve, double x) {
  const auto& r = curve.r;
  if (r.empty() || x < r.front() - 1e-12 || x > r.back() + 1e-12) {
    throw ConfigError("interpolation point outside the curve grid");
  }
  if (r.size() == 1) return curve.values.front();
  auto it = std::upper_bound(r.begin(), r.end(), x);
  std::size_t j = static_cast<std::size_t>(it - r.begin());
  if (j == 0) j = 1;
  if (j >= r.size()) j = r.size() - 1;
  const double t = (x - r[j - 1]) / (r[j] - r[j - 1]);
  return curve.values[j - 1] + std::clamp(t, 0.0, 1.0) * (curve.values[j] - curve.values[j - 1]);
}

}  // namespace perlat
