#include "perlat/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "perlat/error.hpp"
#include "perlat/neighbors.hpp"

namespace perlat {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_pattern(const PointPattern& p, std::size_t min_points) {
  check_dim(p.dim);
  p.window.validate();
  if (p.window.dim != p.dim) throw ConfigError("pattern and window dimensions differ");
  if (p.size() < min_points) {
    throw InputError("pattern needs at least " + std::to_string(min_points) + " points");
  }
}

double translation_weight(const BoxWindow& w, const Point& delta, int dim) {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= w.side(k) - std::fabs(delta[k]);
  return 1.0 / v;
}

double typical_spacing(const PointPattern& p) {
  const double rho = std::max(p.intensity(), 1e-300);
  return std::pow(rho, -1.0 / p.dim);
}

void check_axes(int dim, std::array<int, 2> axes) {
  if (dim < 2) throw ConfigError("planar projections need d >= 2");
  for (int a : axes) {
    if (a < 0 || a >= dim) throw ConfigError("axis index out of range");
  }
  if (axes[0] == axes[1]) throw ConfigError("projection axes must differ");
}

}  // namespace

PointPattern rescale_to_unit_intensity(const PointPattern& p) {
  check_pattern(p, 1);
  const double s = std::pow(static_cast<double>(p.size()) / p.window.volume(), 1.0 / p.dim);
  const Point c = p.window.center();
  PointPattern out;
  out.dim = p.dim;
  out.window.dim = p.dim;
  for (int k = 0; k < p.dim; ++k) {
    out.window.min[k] = (p.window.min[k] - c[k]) * s;
    out.window.max[k] = (p.window.max[k] - c[k]) * s;
  }
  out.points.reserve(p.size());
  for (const auto& x : p.points) {
    Point y{};
    for (int k = 0; k < p.dim; ++k) {
      y[k] = std::clamp((x[k] - c[k]) * s, out.window.min[k], out.window.max[k]);
    }
    out.points.push_back(y);
  }
  return out;
}

SummaryCurve k_empirical(const PointPattern& p, const std::vector<double>& r_grid) {
  check_pattern(p, 2);
  check_grid(r_grid);
  const double rmax = r_grid.back();
  if (!(rmax < 0.5 * p.window.shortest_side())) throw ConfigError("r too large for window");
  const int d = p.dim;
  std::vector<double> bins(r_grid.size(), 0.0);
  if (rmax > 0.0) {
    CellGrid grid(p, rmax);
    grid.for_each_pair(rmax, [&](std::size_t, std::size_t, const Point& delta, double dist) {
      const auto b = static_cast<std::size_t>(std::lower_bound(r_grid.begin(), r_grid.end(), dist) - r_grid.begin());
      if (b < bins.size()) bins[b] += 2.0 * translation_weight(p.window, delta, d);
    });
  }
  const double n = static_cast<double>(p.size());
  const double v = p.window.volume();
  const double scale = v * v / (n * n);
  SummaryCurve out;
  out.kind = CurveKind::K;
  out.r = r_grid;
  out.values.resize(r_grid.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    acc += bins[i];
    out.values[i] = scale * acc;
  }
  return out;
}

double default_pcf_bandwidth(const PointPattern& p) { return 0.15 * typical_spacing(p); }

SummaryCurve pcf_empirical(const PointPattern& p, const std::vector<double>& r_grid, double bandwidth) {
  check_pattern(p, 2);
  check_grid(r_grid);
  if (bandwidth < 0.0) bandwidth = default_pcf_bandwidth(p);
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  const double h = bandwidth;
  const double reach = r_grid.back() + h;
  if (!(reach < 0.5 * p.window.shortest_side())) throw ConfigError("r too large for window");
  const int d = p.dim;
  std::vector<double> acc(r_grid.size(), 0.0);
  CellGrid grid(p, reach);
  grid.for_each_pair(reach, [&](std::size_t, std::size_t, const Point& delta, double dist) {
    const double w = 2.0 * translation_weight(p.window, delta, d);
    auto lo = std::upper_bound(r_grid.begin(), r_grid.end(), dist - h);
    for (auto it = lo; it != r_grid.end() && *it < dist + h; ++it) {
      const double t = (*it - dist) / h;
      acc[static_cast<std::size_t>(it - r_grid.begin())] += w * 0.75 * (1.0 - t * t) / h;
    }
  });
  const double n = static_cast<double>(p.size());
  const double v = p.window.volume();
  const double scale = v * v / (n * n);
  const double area = unit_sphere_area(d);
  SummaryCurve out;
  out.kind = CurveKind::pcf;
  out.r = r_grid;
  out.values.resize(r_grid.size());
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    const double r = r_grid[i];
    out.values[i] = r > 0.0 ? scale * acc[i] / (area * std::pow(r, d - 1)) : 0.0;
  }
  return out;
}

SummaryCurve g_nearest_neighbor(const PointPattern& p, const std::vector<double>& r_grid) {
  check_pattern(p, 2);
  check_grid(r_grid);
  const double border = r_grid.back();
  CellGrid grid(p, 2.0 * typical_spacing(p));
  std::vector<std::size_t> index;
  std::vector<double> dist;
  grid.nearest_neighbors(index, dist);
  std::vector<double> eligible;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.window.boundary_distance(p.points[i]) >= border) eligible.push_back(dist[i]);
  }
  if (eligible.empty()) throw ConfigError("no point lies at distance max(r) from the boundary");
  std::sort(eligible.begin(), eligible.end());
  SummaryCurve out;
  out.kind = CurveKind::G;
  out.r = r_grid;
  out.values.resize(r_grid.size());
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    const auto c = std::upper_bound(eligible.begin(), eligible.end(), r_grid[i]) - eligible.begin();
    out.values[i] = static_cast<double>(c) / static_cast<double>(eligible.size());
  }
  return out;
}

BoxGrid box_grid(const BoxWindow& window, double side, double gap) {
  window.validate();
  if (!(side > 0.0) || !(gap >= 0.0)) throw ConfigError("box side must be > 0 and gap >= 0");
  const int d = window.dim;
  BoxGrid g;
  std::array<double, kMaxDim> offset{0, 0, 0};
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) {
    g.per_axis[k] = static_cast<long>(std::floor((window.side(k) + gap) / (side + gap) + 1e-12));
    total *= static_cast<std::size_t>(std::max(0L, g.per_axis[k]));
    const double extent = static_cast<double>(g.per_axis[k]) * (side + gap) - gap;
    offset[k] = window.min[k] + 0.5 * (window.side(k) - extent);
  }
  if (total < 8) throw ConfigError("fewer than 8 boxes fit in the window");
  for (long a = 0; a < g.per_axis[0]; ++a) {
    for (long b = 0; b < (d > 1 ? g.per_axis[1] : 1); ++b) {
      for (long c = 0; c < (d > 2 ? g.per_axis[2] : 1); ++c) {
        BoxWindow box;
        box.dim = d;
        const std::array<long, kMaxDim> idx{a, b, c};
        for (int k = 0; k < d; ++k) {
          box.min[k] = offset[k] + static_cast<double>(idx[k]) * (side + gap);
          box.max[k] = box.min[k] + side;
        }
        g.boxes.push_back(box);
      }
    }
  }
  return g;
}

BoxCounts number_variance_boxes(const PointPattern& p, double side, double gap) {
  check_pattern(p, 0);
  BoxCounts out;
  out.grid = box_grid(p.window, side, gap);
  out.counts.assign(out.grid.boxes.size(), 0.0);
  for (const auto& x : p.points) {
    for (std::size_t b = 0; b < out.grid.boxes.size(); ++b) {
      if (out.grid.boxes[b].contains(x)) {
        out.counts[b] += 1.0;
        break;
      }
    }
  }
  const double m = static_cast<double>(out.counts.size());
  double mean = 0.0;
  for (double c : out.counts) mean += c;
  mean /= m;
  double var = 0.0;
  for (double c : out.counts) var += (c - mean) * (c - mean);
  var /= (m - 1.0);
  out.mean = mean;
  out.variance = var;
  out.sigma_hat = var / std::pow(side, p.dim);
  return out;
}

SummaryCurve number_variance_batch(const std::vector<PointPattern>& batch, const std::vector<double>& radii,
                                   std::optional<Point> center) {
  if (batch.size() < 30) throw ConfigError("batch number variance needs at least 30 replicates");
  check_grid(radii);
  const int d = batch.front().dim;
  const Point c = center ? *center : batch.front().window.center();
  for (const auto& p : batch) {
    check_pattern(p, 0);
    if (p.dim != d) throw ConfigError("replicates differ in dimension");
    for (int k = 0; k < d; ++k) {
      if (c[k] - radii.back() < p.window.min[k] || c[k] + radii.back() > p.window.max[k]) {
        throw ConfigError("ball does not fit in the window");
      }
    }
  }
  const std::size_t m = batch.size();
  std::vector<std::vector<double>> counts(radii.size(), std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> dists;
    for (const auto& x : batch[j].points) dists.push_back(distance(x, c, d));
    std::sort(dists.begin(), dists.end());
    for (std::size_t i = 0; i < radii.size(); ++i) {
      counts[i][j] = static_cast<double>(std::upper_bound(dists.begin(), dists.end(), radii[i]) - dists.begin());
    }
  }
  SummaryCurve out;
  out.kind = CurveKind::numvar;
  out.r = radii;
  out.values.resize(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double mean = 0.0;
    for (double v : counts[i]) mean += v;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double v : counts[i]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m - 1);
    const double vol = unit_ball_volume(d) * std::pow(radii[i], d);
    out.values[i] = vol > 0.0 ? var / vol : 0.0;
  }
  return out;
}

ScatteringSpectrum scattering_intensity(const PointPattern& p, double k_cutoff, Taper taper) {
  check_pattern(p, 1);
  if (!(k_cutoff > 0.0)) throw ConfigError("k cutoff must be positive");
  const int d = p.dim;
  std::array<long, kMaxDim> zmax{0, 0, 0};
  std::array<double, kMaxDim> base{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    base[k] = kTwoPi / p.window.side(k);
    zmax[k] = static_cast<long>(std::floor(k_cutoff / base[k]));
  }
  ScatteringSpectrum out;
  out.dim = d;
  std::vector<std::array<long, kMaxDim>> modes;
  for (long a = -zmax[0]; a <= zmax[0]; ++a) {
    for (long b = -zmax[1]; b <= zmax[1]; ++b) {
      for (long c = -zmax[2]; c <= zmax[2]; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const std::array<long, kMaxDim> z{a, b, c};
        Point kv{};
        double n2 = 0.0;
        for (int k = 0; k < d; ++k) {
          kv[k] = base[k] * static_cast<double>(z[k]);
          n2 += kv[k] * kv[k];
        }
        if (n2 > k_cutoff * k_cutoff) continue;
        modes.push_back(z);
        out.wavevectors.push_back(kv);
        out.norms.push_back(std::sqrt(n2));
      }
    }
  }
  std::vector<std::complex<double>> amp(modes.size(), 0.0);
  std::array<std::vector<std::complex<double>>, kMaxDim> phase;
  const bool tapered = taper == Taper::sine;
  for (const auto& x : p.points) {
    double weight = 1.0;
    if (tapered) {
      for (int k = 0; k < d; ++k) {
        const double side = p.window.side(k);
        weight *= std::sqrt(2.0 / side) * std::sin(std::numbers::pi * (x[k] - p.window.min[k]) / side);
      }
    }
    for (int k = 0; k < d; ++k) {
      const long zm = zmax[k];
      auto& ph = phase[k];
      ph.assign(static_cast<std::size_t>(2 * zm + 1), 1.0);
      const double theta = -base[k] * (x[k] - p.window.min[k]);
      const std::complex<double> step(std::cos(theta), std::sin(theta));
      for (long z = 1; z <= zm; ++z) {
        ph[static_cast<std::size_t>(zm + z)] = ph[static_cast<std::size_t>(zm + z - 1)] * step;
        ph[static_cast<std::size_t>(zm - z)] = std::conj(ph[static_cast<std::size_t>(zm + z)]);
      }
    }
    for (std::size_t m = 0; m < modes.size(); ++m) {
      std::complex<double> e = phase[0][static_cast<std::size_t>(modes[m][0] + zmax[0])];
      for (int k = 1; k < d; ++k) e *= phase[k][static_cast<std::size_t>(modes[m][k] + zmax[k])];
      amp[m] += weight * e;
    }
  }
  const double n = static_cast<double>(p.size());
  out.intensities.resize(modes.size());
  if (!tapered) {
    for (std::size_t m = 0; m < modes.size(); ++m) out.intensities[m] = std::norm(amp[m]) / n;
    return out;
  }
  // Transform of the sine taper at 2 pi z / L: sqrt(2 L) (2 / pi) / (1 - 4 z^2) per axis.
  const double rho = p.intensity();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    double h = 1.0;
    for (int k = 0; k < d; ++k) {
      const double z = static_cast<double>(modes[m][k]);
      h *= std::sqrt(2.0 * p.window.side(k)) * (2.0 / std::numbers::pi) / (1.0 - 4.0 * z * z);
    }
    out.intensities[m] = rho > 0.0 ? std::norm(amp[m] - rho * h) / rho : 0.0;
  }
  return out;
}

ScatteringSpectrum pool_spectra(const std::vector<ScatteringSpectrum>& spectra) {
  if (spectra.empty()) throw ConfigError("no spectra to pool");
  ScatteringSpectrum out = spectra.front();
  out.pattern_count = 0;
  std::fill(out.intensities.begin(), out.intensities.end(), 0.0);
  for (const auto& s : spectra) {
    if (s.norms.size() != out.norms.size()) throw ConfigError("spectra computed on different mode sets");
    for (std::size_t m = 0; m < s.norms.size(); ++m) {
      if (std::fabs(s.norms[m] - out.norms[m]) > 1e-12 * std::max(1.0, out.norms[m])) {
        throw ConfigError("spectra computed on different mode sets");
      }
      out.intensities[m] += s.intensities[m] * static_cast<double>(s.pattern_count);
    }
    out.pattern_count += s.pattern_count;
  }
  for (double& v : out.intensities) v /= static_cast<double>(out.pattern_count);
  return out;
}

RadialSpectrum radial_bins(const ScatteringSpectrum& spec, double k_max, int n_bins) {
  if (!(k_max > 0.0) || n_bins < 1) throw ConfigError("radial bins need k_max > 0 and at least one bin");
  const double width = k_max / n_bins;
  std::vector<double> ksum(static_cast<std::size_t>(n_bins), 0.0), ssum(ksum);
  std::vector<std::size_t> cnt(static_cast<std::size_t>(n_bins), 0);
  for (std::size_t m = 0; m < spec.norms.size(); ++m) {
    const double k = spec.norms[m];
    if (!(k > 0.0) || k > k_max * (1.0 + 1e-12)) continue;
    auto b = static_cast<long>(std::ceil(k / width)) - 1;
    b = std::clamp(b, 0L, static_cast<long>(n_bins) - 1);
    ksum[static_cast<std::size_t>(b)] += k;
    ssum[static_cast<std::size_t>(b)] += spec.intensities[m];
    ++cnt[static_cast<std::size_t>(b)];
  }
  RadialSpectrum out;
  for (int b = 0; b < n_bins; ++b) {
    const auto i = static_cast<std::size_t>(b);
    if (cnt[i] == 0) continue;
    out.bin_lo.push_back(b * width);
    out.bin_hi.push_back((b + 1) * width);
    out.k_mean.push_back(ksum[i] / static_cast<double>(cnt[i]));
    out.s_mean.push_back(ssum[i] / static_cast<double>(cnt[i]));
    out.modes.push_back(cnt[i]);
  }
  return out;
}

ExponentFit exponent_fit(const ScatteringSpectrum& spec, double k_max, int n_bins) {
  const RadialSpectrum rad = radial_bins(spec, k_max, n_bins);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < rad.k_mean.size(); ++i) {
    if (rad.s_mean[i] > 0.0) {
      x.push_back(std::log(rad.k_mean[i]));
      y.push_back(std::log(rad.s_mean[i]));
    }
  }
  if (x.size() < 8) throw ConfigError("exponent fit needs at least 8 nonempty bins below k_max");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  ExponentFit fit;
  fit.alpha_hat = sxy / sxx;
  fit.intercept = my - fit.alpha_hat * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - fit.intercept - fit.alpha_hat * x[i];
    ssr += e * e;
  }
  fit.stderr_alpha = std::sqrt(ssr / (n - 2.0) / sxx);
  fit.k_max = k_max;
  fit.bins_used = x.size();
  return fit;
}

std::vector<std::array<double, 2>> fry_slab(const PointPattern& p, std::array<int, 2> axes, double slab_halfwidth,
                                            std::optional<double> max_norm) {
  check_pattern(p, 0);
  check_axes(p.dim, axes);
  if (!(slab_halfwidth > 0.0)) throw ConfigError("slab half-width must be positive");
  if (max_norm && !(*max_norm > 0.0)) throw ConfigError("max norm must be positive");
  const int third = p.dim == 3 ? 3 - axes[0] - axes[1] : -1;
  std::vector<std::array<double, 2>> out;
  auto keep = [&](const Point& delta) {
    if (third >= 0 && std::fabs(delta[third]) > slab_halfwidth) return;
    const std::array<double, 2> v{delta[axes[0]], delta[axes[1]]};
    if (max_norm && std::hypot(v[0], v[1]) > *max_norm) return;
    out.push_back(v);
    out.push_back({-v[0], -v[1]});
  };
  if (max_norm) {
    const double reach = third >= 0 ? std::hypot(*max_norm, slab_halfwidth) : *max_norm;
    CellGrid grid(p, reach);
    grid.for_each_pair(reach, [&](std::size_t, std::size_t, const Point& delta, double) { keep(delta); });
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        Point delta{};
        for (int k = 0; k < p.dim; ++k) delta[k] = p.points[j][k] - p.points[i][k];
        keep(delta);
      }
    }
  }
  return out;
}

Histogram angle_histogram(const std::vector<std::array<double, 2>>& vectors, int bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  const double width = kTwoPi / bins;
  for (int b = 0; b < bins; ++b) {
    h.lo.push_back(b * width);
    h.hi.push_back((b + 1) * width);
  }
  for (const auto& v : vectors) {
    double a = std::atan2(v[1], v[0]);
    if (a < 0.0) a += kTwoPi;
    auto b = static_cast<long>(std::floor(a / width));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    h.counts[static_cast<std::size_t>(b)] += 1.0;
  }
  return h;
}

Histogram nn_angle_histogram(const PointPattern& p, std::array<int, 2> axes, int bins) {
  check_pattern(p, 2);
  check_axes(p.dim, axes);
  CellGrid grid(p, 2.0 * typical_spacing(p));
  std::vector<std::size_t> index;
  std::vector<double> dist;
  grid.nearest_neighbors(index, dist);
  std::vector<std::array<double, 2>> vecs;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point& a = p.points[i];
    const Point& b = p.points[index[i]];
    const std::array<double, 2> v{b[axes[0]] - a[axes[0]], b[axes[1]] - a[axes[1]]};
    if (std::hypot(v[0], v[1]) <= 1e-12 * std::max(dist[i], 1e-300)) continue;
    vecs.push_back(v);
  }
  return angle_histogram(vecs, bins);
}

}  // namespace perlat
