#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "perlat/curve.hpp"
#include "perlat/estimators.hpp"
#include "perlat/gauss_field.hpp"
#include "perlat/geometry.hpp"

namespace perlat {

/// Point CSV: header `x`, `x,y` or `x,y,z` matching dim, one point per row.
/// Without a window the bounding box of the points is used. Throws InputError
/// (with the row number) on a bad header, wrong arity, unparsable or
/// non-finite values, or points outside the window.
PointPattern read_pattern_csv(const std::string& path, int dim, const std::optional<BoxWindow>& window = std::nullopt);
void write_pattern_csv(const std::string& path, const PointPattern& pattern);

/// Sidecar window JSON {"min": [...], "max": [...]}.
BoxWindow read_window_json(const std::string& path);
BoxWindow window_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoxWindow& w);

/// Model JSON {"kind": ..., "sigma": ..., "range": ..., "gamma": ..., "dim": ...}.
CovarianceModel model_from_json(const nlohmann::json& j, int default_dim = 3);
nlohmann::json to_json(const CovarianceModel& m);

/// Curve CSV `r,value`.
void write_curve_csv(const std::string& path, const SummaryCurve& curve);
SummaryCurve read_curve_csv(const std::string& path, CurveKind kind);

/// Spectrum CSV `kx,ky,kz,k_norm,S` (unused components written as 0).
void write_spectrum_csv(const std::string& path, const ScatteringSpectrum& spec);

/// Histogram CSV `bin_lo,bin_hi,count`.
void write_histogram_csv(const std::string& path, const Histogram& hist);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace perlat
