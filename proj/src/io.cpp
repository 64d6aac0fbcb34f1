#include "perlat/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "perlat/error.hpp"

namespace perlat {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  return res.ec == std::errc() && res.ptr == last;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

std::string expected_header(int dim) {
  static const char* names[] = {"x", "y", "z"};
  std::string h;
  for (int k = 0; k < dim; ++k) {
    if (k) h += ",";
    h += names[k];
  }
  return h;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

PointPattern read_pattern_csv(const std::string& path, int dim, const std::optional<BoxWindow>& window) {
  check_dim(dim);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
  const std::string header = trim(line);
  const auto cols = split(header);
  std::string joined;
  for (std::size_t i = 0; i < cols.size(); ++i) joined += (i ? "," : "") + cols[i];
  if (joined != expected_header(dim)) {
    throw InputError("header '" + header + "' does not match dimension " + std::to_string(dim) + " (expected '" +
                     expected_header(dim) + "')");
  }
  PointPattern p;
  p.dim = dim;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split(t);
    if (static_cast<int>(fields.size()) != dim) {
      throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(dim) + " values");
    }
    Point x{};
    for (int k = 0; k < dim; ++k) {
      double v = 0.0;
      if (!parse_double(fields[k], v)) throw InputError("row " + std::to_string(row) + ": cannot parse '" + fields[k] + "'");
      if (!std::isfinite(v)) throw InputError("row " + std::to_string(row) + ": non-finite coordinate");
      x[k] = v;
    }
    p.points.push_back(x);
  }
  if (window) {
    if (window->dim != dim) throw ConfigError("window dimension differs from --dim");
    window->validate();
    p.window = *window;
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      if (!p.window.contains(p.points[i])) {
        throw InputError("row " + std::to_string(i + 2) + ": point lies outside the declared window");
      }
    }
  } else {
    if (p.points.empty()) throw InputError("cannot infer a window from an empty file");
    p.window.dim = dim;
    p.window.min = p.points.front();
    p.window.max = p.points.front();
    for (const auto& x : p.points) {
      for (int k = 0; k < dim; ++k) {
        p.window.min[k] = std::min(p.window.min[k], x[k]);
        p.window.max[k] = std::max(p.window.max[k], x[k]);
      }
    }
    for (int k = 0; k < dim; ++k) {
      if (!(p.window.max[k] > p.window.min[k])) throw InputError("bounding box of the points is degenerate");
    }
  }
  return p;
}

void write_pattern_csv(const std::string& path, const PointPattern& pattern) {
  auto out = open_out(path);
  out << expected_header(pattern.dim) << "\n";
  for (const auto& x : pattern.points) {
    for (int k = 0; k < pattern.dim; ++k) out << (k ? "," : "") << format_double(x[k]);
    out << "\n";
  }
}

BoxWindow window_from_json(const nlohmann::json& j) {
  try {
    const auto lo = j.at("min").get<std::vector<double>>();
    const auto hi = j.at("max").get<std::vector<double>>();
    if (lo.size() != hi.size() || lo.empty() || lo.size() > static_cast<std::size_t>(kMaxDim)) {
      throw ConfigError("window min and max must have equal length 1..3");
    }
    BoxWindow w;
    w.dim = static_cast<int>(lo.size());
    for (int k = 0; k < w.dim; ++k) {
      w.min[k] = lo[k];
      w.max[k] = hi[k];
    }
    w.validate();
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad window JSON: ") + e.what());
  }
}

BoxWindow read_window_json(const std::string& path) { return window_from_json(read_json(path)); }

nlohmann::json to_json(const BoxWindow& w) {
  return {{"min", std::vector<double>(w.min.begin(), w.min.begin() + w.dim)},
          {"max", std::vector<double>(w.max.begin(), w.max.begin() + w.dim)}};
}

CovarianceModel model_from_json(const nlohmann::json& j, int default_dim) {
  try {
    CovarianceModel m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.dim = j.value("dim", default_dim);
    m.sigma = j.value("sigma", 0.0);
    m.range = j.value("range", 1.0);
    m.gamma = j.value("gamma", 2.0);
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model JSON: ") + e.what());
  }
}

nlohmann::json to_json(const CovarianceModel& m) {
  nlohmann::json j{{"kind", to_string(m.kind)}, {"dim", m.dim}};
  if (m.kind != ModelKind::stationarized) j["sigma"] = m.sigma;
  if (m.kind == ModelKind::powexp_gauss) {
    j["range"] = m.range;
    j["gamma"] = m.gamma;
  }
  return j;
}

void write_curve_csv(const std::string& path, const SummaryCurve& curve) {
  auto out = open_out(path);
  out << "r,value\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << format_double(curve.r[i]) << "," << format_double(curve.values[i]) << "\n";
}

SummaryCurve read_curve_csv(const std::string& path, CurveKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "r,value") throw InputError("curve file '" + path + "' needs header 'r,value'");
  SummaryCurve c;
  c.kind = kind;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto f = split(t);
    double r = 0.0, v = 0.0;
    if (f.size() != 2 || !parse_double(f[0], r) || !parse_double(f[1], v) || !std::isfinite(r) || !std::isfinite(v)) {
      throw InputError("row " + std::to_string(row) + ": expected two finite numbers");
    }
    c.r.push_back(r);
    c.values.push_back(v);
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw InputError(std::string("curve file '") + path + "': " + e.what());
  }
  return c;
}

void write_spectrum_csv(const std::string& path, const ScatteringSpectrum& spec) {
  auto out = open_out(path);
  out << "kx,ky,kz,k_norm,S\n";
  for (std::size_t m = 0; m < spec.norms.size(); ++m) {
    const auto& k = spec.wavevectors[m];
    out << format_double(k[0]) << "," << format_double(k[1]) << "," << format_double(k[2]) << ","
        << format_double(spec.norms[m]) << "," << format_double(spec.intensities[m]) << "\n";
  }
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
  auto out = open_out(path);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << format_double(hist.lo[i]) << "," << format_double(hist.hi[i]) << "," << format_double(hist.counts[i]) << "\n";
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace perlat
