#pragma once

// Experiment configuration: a small key = value file format with [table]
// sections, plus the typed ExperimentConfig assembled from it.
//
//   [grid]
//   nx = 256
//   ny = 256
//   side = 1.0            # hx = side/nx, hy = side/ny (or set hx/hy directly)
//   topology = "torus"    # or "box"
//   [norm]
//   kind = "randers"      # quadratic | randers | lp | table
//   g = [1, 0, 0, 1]      # row-major 2x2
//   beta = [0.5, 0]
//   p = 1                 # lp exponent, "inf" allowed
//   eps = 0.01
//   n_dir = 512
//   [region_a]
//   shape = "disk"
//   center = [0.25, 0.5]
//   radius = 0.1
//   [ladder]
//   t_max = 0.02
//   ratio = 0.5
//   count = 6
//   [heat]
//   cfl = 0.5
//   [output]
//   dir = "out/run"
//   extrapolation = "richardson"   # or "linear"
//   [lp_family]
//   p = [1, inf]
//   eps = [0.1, 0.01, 0.001]

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fheat/calculus.hpp"
#include "fheat/grid.hpp"
#include "fheat/norms.hpp"

namespace fheat {

class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  static ConfigFile parse(const std::string& text, const std::string& origin = "<memory>") {
    ConfigFile cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": bad section");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty() || val.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key or value");
      cfg.values_[section + "." + key] = val;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "") const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return unquote(it->second);
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_double(it->second, key);
  }

  long get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return static_cast<long>(to_double(it->second, key));
  }

  std::vector<double> get_array(const std::string& key,
                                const std::vector<double>& fallback = {}) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string body = trim(it->second);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']')
      throw std::runtime_error("config: " + key + " is not an array");
    body = body.substr(1, body.size() - 2);
    std::vector<double> out;
    std::string item;
    std::istringstream in(body);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(to_double(item, key));
    }
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }
  static std::string unquote(const std::string& s) {
    std::string t = trim(s);
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                          (t.front() == '\'' && t.back() == '\'')))
      return t.substr(1, t.size() - 2);
    return t;
  }
  static double to_double(const std::string& s, const std::string& key) {
    const std::string t = unquote(s);
    if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
    try {
      std::size_t pos = 0;
      const double v = std::stod(t, &pos);
      if (pos != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config: cannot parse number for " + key + ": '" + t + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------

struct RegionSpec {
  std::string shape = "disk";  // disk | rect
  double cx = 0.5, cy = 0.5, radius = 0.1;
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  Region build(const Grid& grid) const {
    if (shape == "disk") return disk_region(grid, cx, cy, radius);
    if (shape == "rect") return rect_region(grid, x0, y0, x1, y1);
    throw std::invalid_argument("RegionSpec: unknown shape " + shape);
  }
};

struct LadderSpec {
  double t_max = 0.02;
  double ratio = 0.5;
  int count = 6;

  void validate() const {
    if (!(t_max > 0.0)) throw std::invalid_argument("ladder: t_max must be positive");
    if (!(ratio > 0.0) || !(ratio < 1.0))
      throw std::invalid_argument("ladder: ratio must lie in (0,1)");
    if (count < 2) throw std::invalid_argument("ladder: count must be >= 2");
  }

  // decreasing sequence t_max * ratio^k
  std::vector<double> times_decreasing() const {
    std::vector<double> t(static_cast<std::size_t>(count));
    double v = t_max;
    for (int k = 0; k < count; ++k) {
      t[k] = v;
      v *= ratio;
    }
    return t;
  }
};

enum class Extrapolation : std::uint8_t { LinearInT, Richardson };

struct ExperimentConfig {
  int nx = 256, ny = 256;
  double hx = 1.0 / 256, hy = 1.0 / 256;
  Topology topology = Topology::Torus;

  NormSpec norm = NormSpec::quadratic(Mat2::identity());
  int n_dir = 512;

  RegionSpec region_a{"disk", 0.25, 0.5, 0.1};
  RegionSpec region_b{"disk", 0.75, 0.5, 0.1};

  LadderSpec ladder;
  double cfl = 0.5;
  long max_steps = 50'000'000;

  std::string output_dir = "out";
  Extrapolation extrapolation = Extrapolation::LinearInT;

  std::vector<double> lp_ps{1.0, std::numeric_limits<double>::infinity()};
  std::vector<double> lp_eps{1e-1, 1e-2, 1e-3};

  Grid make_grid() const {
    Grid g(nx, ny, hx, hy, topology);
    return g;
  }
  FinslerField make_field() const { return FinslerField::constant(norm); }

  void validate() const {
    ladder.validate();
    if (!(cfl > 0.0) || cfl > 1.0) throw std::invalid_argument("config: cfl must be in (0,1]");
  }
};

inline NormSpec norm_from_config(const ConfigFile& c) {
  const std::string kind = c.get_string("norm.kind", "quadratic");
  const auto garr = c.get_array("norm.g", {1.0, 0.0, 0.0, 1.0});
  if (garr.size() != 4 || garr[1] != garr[2])
    throw std::runtime_error("config: norm.g must be a symmetric row-major 2x2 matrix");
  const Mat2 g{garr[0], garr[1], garr[3]};
  if (kind == "quadratic") return NormSpec::quadratic(g);
  if (kind == "randers") {
    const auto b = c.get_array("norm.beta", {0.0, 0.0});
    if (b.size() != 2) throw std::runtime_error("config: norm.beta must have 2 entries");
    return NormSpec::randers(g, {b[0], b[1]});
  }
  if (kind == "lp")
    return NormSpec::lp(c.get_double("norm.p", 2.0), c.get_double("norm.eps", 1e-2));
  if (kind == "table") {
    const auto samples = c.get_array("norm.samples", {});
    if (!samples.empty()) return NormSpec::table(samples);
    // tabulated from another kind: sample a Randers norm by default
    const auto b = c.get_array("norm.beta", {0.0, 0.0});
    const int n = static_cast<int>(c.get_long("norm.n_dir", 256));
    return NormSpec::table_from(NormSpec::randers(g, {b[0], b[1]}), n);
  }
  throw std::runtime_error("config: unknown norm.kind '" + kind + "'");
}

inline RegionSpec region_from_config(const ConfigFile& c, const std::string& section,
                                     RegionSpec fallback) {
  RegionSpec r = fallback;
  r.shape = c.get_string(section + ".shape", r.shape);
  const auto center = c.get_array(section + ".center", {r.cx, r.cy});
  if (center.size() == 2) {
    r.cx = center[0];
    r.cy = center[1];
  }
  r.radius = c.get_double(section + ".radius", r.radius);
  const auto rect = c.get_array(section + ".rect", {});
  if (rect.size() == 4) {
    r.x0 = rect[0];
    r.y0 = rect[1];
    r.x1 = rect[2];
    r.y1 = rect[3];
  }
  return r;
}

inline ExperimentConfig experiment_from_config(const ConfigFile& c) {
  ExperimentConfig e;
  e.nx = static_cast<int>(c.get_long("grid.nx", e.nx));
  e.ny = static_cast<int>(c.get_long("grid.ny", e.ny));
  const double side = c.get_double("grid.side", 1.0);
  e.hx = c.get_double("grid.hx", side / e.nx);
  e.hy = c.get_double("grid.hy", side / e.ny);
  const std::string topo = c.get_string("grid.topology", "torus");
  if (topo == "torus")
    e.topology = Topology::Torus;
  else if (topo == "box")
    e.topology = Topology::Box;
  else
    throw std::runtime_error("config: unknown topology '" + topo + "'");

  e.norm = norm_from_config(c);
  e.n_dir = static_cast<int>(c.get_long("norm.n_dir", e.n_dir));

  e.region_a = region_from_config(c, "region_a", e.region_a);
  e.region_b = region_from_config(c, "region_b", e.region_b);

  e.ladder.t_max = c.get_double("ladder.t_max", e.ladder.t_max);
  e.ladder.ratio = c.get_double("ladder.ratio", e.ladder.ratio);
  e.ladder.count = static_cast<int>(c.get_long("ladder.count", e.ladder.count));

  e.cfl = c.get_double("heat.cfl", e.cfl);
  e.max_steps = c.get_long("heat.max_steps", e.max_steps);

  e.output_dir = c.get_string("output.dir", e.output_dir);
  const std::string ex = c.get_string("output.extrapolation", "linear");
  if (ex == "linear")
    e.extrapolation = Extrapolation::LinearInT;
  else if (ex == "richardson")
    e.extrapolation = Extrapolation::Richardson;
  else
    throw std::runtime_error("config: unknown extrapolation '" + ex + "'");

  e.lp_ps = c.get_array("lp_family.p", e.lp_ps);
  e.lp_eps = c.get_array("lp_family.eps", e.lp_eps);

  e.validate();
  return e;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from_config(ConfigFile::parse_file(path));
}

}  // namespace fheat
