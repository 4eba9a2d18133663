#include "arrival/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "arrival/classical.hpp"
#include "arrival/ensemble.hpp"
#include "arrival/quantum.hpp"
#include "arrival/unitary.hpp"

namespace arrival::scenario {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) throw ConfigError(key, "empty value");
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) throw ConfigError(key, "not a number: '" + t + "'");
  return v;
}

}  // namespace

std::string version() { return "0.1.0"; }

// ---------------------------------------------------------------------------
// config

const std::map<std::string, std::string>& ScenarioConfig::defaults() {
  static const std::map<std::string, std::string> d = {
      {"pipeline", "unitary"},
      // units: natural by default
      {"m", "1"},
      {"hbar", "1"},
      {"gamma", "0.5"},
      {"kT", "1"},
      // time or sweep
      {"t", "1"},
      {"t_min", "0"},
      {"t_max", "0"},
      {"t_count", "1"},
      {"t_spacing", "log"},
      // initial state
      {"state", "gaussian"},
      {"x0", "6"},
      {"p0", "-3"},
      {"sigma", "1"},
      {"x0b", "6"},
      {"p0b", "3"},
      {"sigmab", "1"},
      {"weight", "0.5"},
      {"phase_b", "0"},
      // grids and quadrature
      {"grid_n", "0"},
      {"half_width", "0"},
      {"quad_n", "241"},
      {"coarse_n", "31"},
      // Monte Carlo
      {"n_paths", "0"},
      {"n_steps", "1000"},
      {"seed", ""},
      // ensemble
      {"N", "40"},
      {"one_source", "alpha"},
      {"one_p", "0.3"},
      {"one_alpha", "1e6"},
      {"one_pbar", "0.7"},
      {"one_d_re", "0"},
      {"one_d_im", "0"},
      {"n_ref", "-1"},
      {"delta_n", "0"},
      {"ensemble_view", "distribution"},
      {"strict", "false"},
  };
  return d;
}

ScenarioConfig::ScenarioConfig() : values_(defaults()) {}

void ScenarioConfig::set(const std::string& key, const std::string& value) {
  auto k = trim(key);
  if (!values_.count(k)) throw ConfigError(k, "unknown configuration key");
  values_[k] = trim(value);
}

void ScenarioConfig::set_assignment(const std::string& a) {
  auto eq = a.find('=');
  if (eq == std::string::npos) throw ConfigError(a, "expected key=value");
  set(a.substr(0, eq), a.substr(eq + 1));
}

void ScenarioConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno), "expected key = value");
    set_assignment(line);
  }
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
  ScenarioConfig c;
  c.load_file(path);
  return c;
}

const std::string& ScenarioConfig::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown configuration key");
  return it->second;
}

double ScenarioConfig::real(const std::string& key) const {
  double v = parse_double(key, text(key));
  if (std::isnan(v)) throw ConfigError(key, "NaN is not allowed");
  return v;
}

long long ScenarioConfig::integer(const std::string& key) const {
  const auto& s = text(key);
  long long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(key, "not an integer: '" + s + "'");
  return v;
}

std::uint64_t ScenarioConfig::u64(const std::string& key) const {
  const auto& s = text(key);
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(key, "not an unsigned 64-bit integer: '" + s + "'");
  return v;
}

bool ScenarioConfig::flag(const std::string& key) const {
  const auto& s = text(key);
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no" || s.empty()) return false;
  throw ConfigError(key, "not a boolean: '" + s + "'");
}

std::vector<double> ScenarioConfig::times() const {
  long long count = integer("t_count");
  if (count < 1) throw ConfigError("t_count", "must be >= 1");
  if (count == 1) return {real("t")};
  double a = real("t_min"), b = real("t_max");
  if (!(a > 0) || !(b > a)) throw ConfigError("t_min", "sweep needs 0 < t_min < t_max");
  const auto& sp = text("t_spacing");
  std::vector<double> ts(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    double f = static_cast<double>(i) / static_cast<double>(count - 1);
    if (sp == "log")
      ts[i] = a * std::pow(b / a, f);
    else if (sp == "linear")
      ts[i] = a + (b - a) * f;
    else
      throw ConfigError("t_spacing", "expected log or linear");
  }
  return ts;
}

void ScenarioConfig::validate() const {
  const auto& pl = text("pipeline");
  if (pl != "unitary" && pl != "classical" && pl != "qbm" && pl != "ensemble" &&
      pl != "acceptance")
    throw ConfigError("pipeline", "expected unitary, classical, qbm, ensemble or acceptance");

  auto positive = [&](const char* k) {
    double v = real(k);
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError(k, "must be positive and finite");
  };
  auto finite = [&](const char* k) {
    if (!std::isfinite(real(k))) throw ConfigError(k, "must be finite");
  };
  positive("m");
  positive("hbar");
  if (pl == "acceptance") return;

  if (pl != "ensemble") {
    for (double t : times())
      if (!(t > 0) || !std::isfinite(t)) throw ConfigError("t", "times must be positive");
    const auto& st = text("state");
    if (st != "gaussian" && st != "antisymmetric" && st != "superposition")
      throw ConfigError("state", "expected gaussian, antisymmetric or superposition");
    finite("x0");
    finite("p0");
    positive("sigma");
    if (st == "superposition") {
      finite("x0b");
      finite("p0b");
      positive("sigmab");
      finite("phase_b");
      double w = real("weight");
      if (!(w >= 0 && w <= 1)) throw ConfigError("weight", "must lie in [0, 1]");
    }
    if (integer("grid_n") < 0 || integer("grid_n") % 2 != 0)
      throw ConfigError("grid_n", "must be 0 (automatic) or a positive even number");
    if (real("half_width") < 0) throw ConfigError("half_width", "must be >= 0");
  }
  if (pl == "classical" || pl == "qbm") {
    positive("gamma");
    positive("kT");
    if (integer("quad_n") < 11) throw ConfigError("quad_n", "must be >= 11");
  }
  if (pl == "classical") {
    if (text("state") != "gaussian")
      throw ConfigError("state", "the classical pipeline takes a gaussian state");
    long long np = integer("n_paths");
    if (np < 0) throw ConfigError("n_paths", "must be >= 0");
    if (np > 0) {
      if (text("seed").empty()) throw ConfigError("seed", "required for Monte Carlo runs");
      (void)u64("seed");
      if (np < 1000) throw ConfigError("n_paths", "must be >= 1000 when Monte Carlo is on");
      if (integer("n_steps") < 100) throw ConfigError("n_steps", "must be >= 100");
    }
  }
  if (pl == "qbm") {
    if (integer("coarse_n") < 5) throw ConfigError("coarse_n", "must be >= 5");
    if (integer("grid_n") > 4096) throw ConfigError("grid_n", "at most 4096 for density matrices");
  }
  if (pl == "ensemble") {
    long long N = integer("N");
    if (N < 1 || N > 100000) throw ConfigError("N", "must lie in [1, 100000]");
    const auto& src = text("one_source");
    if (src != "alpha" && src != "explicit")
      throw ConfigError("one_source", "expected alpha or explicit");
    long long nr = integer("n_ref");
    if (nr > N) throw ConfigError("n_ref", "must be <= N");
    if (integer("delta_n") < 0) throw ConfigError("delta_n", "must be >= 0");
    const auto& v = text("ensemble_view");
    if (v != "distribution" && v != "epsilon_matrix")
      throw ConfigError("ensemble_view", "expected distribution or epsilon_matrix");
    if (v == "epsilon_matrix" && N > 400)
      throw ConfigError("N", "epsilon_matrix view is limited to N <= 400");
  }
}

// ---------------------------------------------------------------------------
// tables

void ResultTable::add_meta(const std::string& key, const std::string& value) {
  std::string v = value;
  std::replace(v.begin(), v.end(), '\n', ' ');
  for (auto& kv : meta_)
    if (kv.first == key) {
      kv.second = v;
      return;
    }
  meta_.emplace_back(key, v);
}

void ResultTable::add_column(const std::string& name, std::vector<double> values) {
  if (!columns_.empty() && values.size() != columns_.front().values.size())
    throw DomainError("ResultTable: column '" + name + "' has a different length");
  for (const auto& c : columns_)
    if (c.name == name) throw DomainError("ResultTable: duplicate column '" + name + "'");
  columns_.push_back({name, std::move(values)});
}

void ResultTable::add_complex_column(const std::string& name, const std::vector<cplx>& values) {
  std::vector<double> re(values.size()), im(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    re[i] = values[i].real();
    im[i] = values[i].imag();
  }
  add_column(name + "_re", std::move(re));
  add_column(name + "_im", std::move(im));
}

std::size_t ResultTable::rows() const {
  return columns_.empty() ? 0 : columns_.front().values.size();
}

const Column& ResultTable::column(const std::string& name) const {
  for (const auto& c : columns_)
    if (c.name == name) return c;
  throw DomainError("ResultTable: no column '" + name + "'");
}

std::string ResultTable::meta_value(const std::string& key) const {
  for (const auto& kv : meta_)
    if (kv.first == key) return kv.second;
  return {};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DomainError("CSV: unterminated quoted field");
  out.push_back(cur);
  return out;
}

}  // namespace

std::string ResultTable::to_csv() const {
  std::string o;
  for (const auto& kv : meta_) o += "# " + kv.first + "=" + kv.second + "\n";
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) o += ',';
    o += csv_field(columns_[c].name);
  }
  o += "\n";
  std::size_t nr = rows();
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c) o += ',';
      o += fmt(columns_[c].values[r]);
    }
    o += "\n";
  }
  return o;
}

ResultTable ResultTable::from_csv(const std::string& text) {
  ResultTable t;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen && line.rfind("# ", 0) == 0) {
      auto body = line.substr(2);
      auto eq = body.find('=');
      if (eq == std::string::npos) throw DomainError("CSV: malformed metadata line");
      t.add_meta(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (!line.empty()) names = split_csv_line(line);
      cols.assign(names.size(), {});
      continue;
    }
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != names.size()) throw DomainError("CSV: row width differs from header");
    for (std::size_t c = 0; c < f.size(); ++c) cols[c].push_back(parse_double(names[c], f[c]));
  }
  for (std::size_t c = 0; c < names.size(); ++c) t.add_column(names[c], std::move(cols[c]));
  return t;
}

std::string ResultTable::to_json() const {
  nlohmann::ordered_json j;
  j["meta"] = nlohmann::ordered_json::object();
  for (const auto& kv : meta_) j["meta"][kv.first] = kv.second;
  j["columns"] = nlohmann::ordered_json::object();
  for (const auto& c : columns_) {
    auto arr = nlohmann::ordered_json::array();
    for (double v : c.values) {
      if (std::isfinite(v))
        arr.push_back(v);
      else
        arr.push_back(fmt(v));  // JSON has no inf/nan
    }
    j["columns"][c.name] = std::move(arr);
  }
  return j.dump(1) + "\n";
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("format", "expected csv or json");
}

const char* extension(Format f) { return f == Format::csv ? ".csv" : ".json"; }

void emit(const ResultTable& table, Format format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << (format == Format::csv ? table.to_csv() : table.to_json());
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// plot scripts

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "smalltime-scaling") return PlotKind::smalltime_scaling;
  if (s == "survival-vs-t") return PlotKind::survival_vs_t;
  if (s == "pn-histogram") return PlotKind::pn_histogram;
  if (s == "epsilon-heatmap") return PlotKind::epsilon_heatmap;
  throw ConfigError("plot", "unknown plot kind '" + s +
                                "' (smalltime-scaling, survival-vs-t, pn-histogram, epsilon-heatmap)");
}

std::string plot_kind_name(PlotKind k) {
  switch (k) {
    case PlotKind::smalltime_scaling: return "smalltime-scaling";
    case PlotKind::survival_vs_t: return "survival-vs-t";
    case PlotKind::pn_histogram: return "pn-histogram";
    case PlotKind::epsilon_heatmap: return "epsilon-heatmap";
  }
  return "?";
}

namespace {

void require_columns(const ResultTable& t, std::initializer_list<const char*> names, PlotKind k) {
  for (const char* n : names) {
    bool found = false;
    for (const auto& c : t.columns()) found = found || c.name == n;
    if (!found)
      throw DomainError("plot " + plot_kind_name(k) + " needs column '" + std::string(n) + "'");
  }
}

std::string py_string(const std::string& s) {
  std::string o = "\"";
  for (char c : s) {
    if (c == '\\' || c == '"') o += '\\';
    o += c;
  }
  return o + "\"";
}

const char* kPlotHeader = R"PY(import csv
import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    meta, rows = {}, []
    with open(os.path.join(HERE, name), newline="") as f:
        body = []
        for line in f:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition("=")
                meta[k] = v
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    cols = {h: [] for h in header}
    for r in reader:
        for h, v in zip(header, r):
            cols[h].append(float(v))
    return meta, cols


)PY";

}  // namespace

std::string plot_script(const ResultTable& table, PlotKind kind, const std::string& csv_name) {
  std::string s = kPlotHeader;
  s += "CSV = " + py_string(csv_name) + "\n";
  s += "meta, cols = load(CSV)\n";
  s += "out = os.path.join(HERE, os.path.splitext(CSV)[0] + " +
       py_string("_" + plot_kind_name(kind) + ".png") + ")\n\n";
  switch (kind) {
    case PlotKind::smalltime_scaling: {
      require_columns(table, {"t", "abs_d", "p_cross"}, kind);
      std::string slope = table.meta_value("fit.slope_abs_d");
      s += "fitted = " + (slope.empty() ? std::string("None") : slope) + "\n";
      s += R"PY(t = cols["t"]
fig, ax = plt.subplots()
ax.loglog(t, cols["abs_d"], "o-", label="|D|")
ax.loglog(t, cols["p_cross"], "s-", label="p_cross")
# slope-0.5 guide through the first |D| point
guide = [cols["abs_d"][0] * (x / t[0]) ** 0.5 for x in t]
ax.loglog(t, guide, "k--", label="slope 0.5 guide")
if fitted is not None:
    ax.annotate("fitted slope %.3f (guide 0.5)" % fitted, xy=(0.05, 0.92),
                xycoords="axes fraction")
ax.set_xlabel("t")
ax.set_ylabel("magnitude")
ax.legend()
fig.savefig(out, dpi=150)
)PY";
      break;
    }
    case PlotKind::survival_vs_t: {
      require_columns(table, {"t", "p_nocross"}, kind);
      s += R"PY(t = cols["t"]
fig, ax = plt.subplots()
ax.plot(t, cols["p_nocross"], "o-", label="survival (never crossed)")
if "mc_mean" in cols:
    ax.errorbar(t, cols["mc_mean"], yerr=[3 * e for e in cols["mc_stderr"]], fmt="x",
                label="Langevin, 3 s.e.")
ax.set_xlabel("t")
ax.set_ylabel("probability")
ax.set_ylim(-0.02, 1.02)
ax.legend()
fig.savefig(out, dpi=150)
)PY";
      break;
    }
    case PlotKind::pn_histogram: {
      require_columns(table, {"n", "p_n"}, kind);
      std::string peak = table.meta_value("peak_prediction");
      s += "peak = " + (peak.empty() ? std::string("None") : peak) + "\n";
      s += R"PY(fig, ax = plt.subplots()
ax.bar(cols["n"], cols["p_n"], width=1.0)
if peak is not None:
    ax.axvline(peak, color="k", ls="--", label="N p / (p + pbar)")
    ax.legend()
ax.set_xlabel("n (number crossed)")
ax.set_ylabel("p(n)")
fig.savefig(out, dpi=150)
)PY";
      break;
    }
    case PlotKind::epsilon_heatmap: {
      require_columns(table, {"n", "nprime", "log_epsilon"}, kind);
      s += R"PY(n = [int(v) for v in cols["n"]]
m = [int(v) for v in cols["nprime"]]
size = max(max(n), max(m)) + 1
grid = [[float("nan")] * size for _ in range(size)]
for a, b, v in zip(n, m, cols["log_epsilon"]):
    grid[a][b] = v if math.isfinite(v) else float("nan")
fig, ax = plt.subplots()
im = ax.imshow(grid, origin="lower", cmap="viridis")
fig.colorbar(im, ax=ax, label="ln epsilon")
ax.set_xlabel("n'")
ax.set_ylabel("n")
fig.savefig(out, dpi=150)
)PY";
      break;
    }
  }
  return s;
}

void emit_plot_script(const ResultTable& table, PlotKind kind, const std::string& csv_name,
                      const std::filesystem::path& path) {
  std::string s = plot_script(table, kind, csv_name);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << s;
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// pipelines

namespace {

unitary::ParticleParams particle(const ScenarioConfig& c, double t) {
  return {c.real("m"), c.real("hbar"), t};
}

classical::BathParams bath(const ScenarioConfig& c) {
  classical::BathParams b{c.real("m"), c.real("gamma"), c.real("kT")};
  b.validate();
  return b;
}

// grid wide enough for the state's free evolution up to t_max
numerics::Grid1D state_grid(const ScenarioConfig& c, double t_max) {
  auto pp = particle(c, t_max);
  auto g = unitary::suggest_grid(c.real("x0"), c.real("p0"), c.real("sigma"), pp);
  if (c.text("state") == "superposition") {
    auto gb = unitary::suggest_grid(c.real("x0b"), c.real("p0b"), c.real("sigmab"), pp);
    g.half_width = std::max(g.half_width, gb.half_width);
    g.n_points = std::max(g.n_points, gb.n_points);
  }
  double L = c.real("half_width") > 0 ? c.real("half_width") : g.half_width;
  auto n = c.integer("grid_n") > 0 ? static_cast<std::size_t>(c.integer("grid_n")) : g.n_points;
  return numerics::symmetric_periodic_grid(L, n);
}

unitary::Wavefunction build_state(const ScenarioConfig& c, const numerics::Grid1D& g) {
  double hbar = c.real("hbar");
  const auto& st = c.text("state");
  if (st == "antisymmetric")
    return unitary::antisymmetric_gaussian(g, c.real("x0"), c.real("p0"), c.real("sigma"), hbar);
  auto a = unitary::gaussian_state(g, c.real("x0"), c.real("p0"), c.real("sigma"), hbar);
  if (st == "gaussian") return a;
  auto b = unitary::gaussian_state(g, c.real("x0b"), c.real("p0b"), c.real("sigmab"), hbar);
  double w = c.real("weight");
  return unitary::superposition(a, b, std::sqrt(w),
                                std::polar(std::sqrt(1.0 - w), c.real("phase_b")));
}

void fit_meta(ResultTable& t, const std::vector<double>& x, const std::vector<double>& y,
              const std::string& name) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0 && y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 3) return;
  auto f = numerics::fit_line(lx, ly);
  t.add_meta("fit.slope_" + name, fmt(f.slope));
  t.add_meta("fit.r2_" + name, fmt(f.r_squared));
}

ResultTable run_unitary(const ScenarioConfig& c) {
  auto ts = c.times();
  auto g = state_grid(c, *std::max_element(ts.begin(), ts.end()));
  auto psi = build_state(c, g);
  std::vector<double> pc, pn, eps, res, ad;
  std::vector<cplx> d;
  for (double t : ts) {
    auto tb = unitary::decoherence_table(psi, particle(c, t));
    pc.push_back(tb.p_cross);
    pn.push_back(tb.p_nocross);
    d.push_back(tb.d_offdiag);
    ad.push_back(std::abs(tb.d_offdiag));
    eps.push_back(tb.epsilon_ratio);
    res.push_back(tb.sum_rule_residual);
  }
  ResultTable t;
  t.add_meta("grid.n", std::to_string(g.size()));
  t.add_meta("grid.half_width", fmt(-g[0]));
  fit_meta(t, ts, ad, "abs_d");
  fit_meta(t, ts, pc, "p_cross");
  t.add_column("t", ts);
  t.add_column("p_cross", pc);
  t.add_column("p_nocross", pn);
  t.add_complex_column("d", d);
  t.add_column("abs_d", ad);
  t.add_column("epsilon_ratio", eps);
  t.add_column("sum_rule_residual", res);
  return t;
}

ResultTable run_classical(const ScenarioConfig& c) {
  auto ts = c.times();
  auto b = bath(c);
  double hbar = c.real("hbar"), sigma = c.real("sigma");
  auto w0 = classical::gaussian_distribution(c.real("p0"), c.real("x0"), hbar / (2.0 * sigma),
                                             sigma);
  auto qn = static_cast<std::size_t>(c.integer("quad_n"));
  classical::QuadratureOptions q{qn, qn, 200, 8.0};
  long long np = c.integer("n_paths");
  std::vector<double> surv, cross, mc, se;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double s = classical::survival_probability(w0, ts[i], b, q);
    surv.push_back(s);
    cross.push_back(1.0 - s);
    if (np > 0) {
      auto est = classical::langevin_survival(w0, ts[i], b, static_cast<std::size_t>(np),
                                              static_cast<std::size_t>(c.integer("n_steps")),
                                              {c.u64("seed"), i});
      mc.push_back(est.mean);
      se.push_back(est.stderr_);
    }
  }
  ResultTable t;
  t.add_meta("Dp", fmt(b.Dp()));
  t.add_column("t", ts);
  t.add_column("p_nocross", surv);
  t.add_column("p_cross", cross);
  if (np > 0) {
    t.add_column("mc_mean", mc);
    t.add_column("mc_stderr", se);
  }
  return t;
}

ResultTable run_qbm(const ScenarioConfig& c, bool strict) {
  auto ts = c.times();
  auto b = bath(c);
  // the crossing estimate only needs the initial Wigner function
  auto g = state_grid(c, 0.0);
  auto psi = build_state(c, g);
  auto rho = quantum::DensityMatrixGrid::pure(psi);
  quantum::CoarseOptions co;
  co.n_p = co.n_x = static_cast<std::size_t>(c.integer("coarse_n"));
  auto qn = static_cast<std::size_t>(c.integer("quad_n"));
  co.quad = {qn, qn, 200, 8.0};
  std::vector<double> pc, pn, ratio, clamp;
  std::vector<cplx> d;
  bool warn = false;
  double wmin = 0;
  for (double t : ts) {
    auto r = quantum::quantum_crossing_probabilities(rho, t, b, particle(c, t), co);
    pc.push_back(r.table.p_cross);
    pn.push_back(r.table.p_nocross);
    d.push_back(r.table.d_offdiag);
    ratio.push_back(r.regime_ratio);
    clamp.push_back(r.clamp_magnitude);
    wmin = r.wigner_min;
    if (!r.regime_ok) {
      warn = true;
      if (strict)
        throw RegimeWarning("decoherent regime check failed at t = " + fmt(t) +
                            ": hbar/sqrt(Dp t)/sigma_x = " + fmt(r.regime_ratio) + " > 0.1");
    }
  }
  ResultTable t;
  t.add_meta("Dp", fmt(b.Dp()));
  t.add_meta("grid.n", std::to_string(g.size()));
  t.add_meta("wigner_min", fmt(wmin));
  t.add_meta("regime_warning", warn ? "true" : "false");
  t.add_meta("d_offdiag", "not computed; interference term neglected in this regime");
  t.add_column("t", ts);
  t.add_column("p_cross", pc);
  t.add_column("p_nocross", pn);
  t.add_complex_column("d", d);
  t.add_column("regime_ratio", ratio);
  t.add_column("clamp_magnitude", clamp);
  return t;
}

ensemble::OneParticleHistoryData one_particle(const ScenarioConfig& c) {
  ensemble::OneParticleHistoryData o;
  try {
    if (c.text("one_source") == "alpha")
      o = ensemble::OneParticleHistoryData::with_alpha(c.real("one_p"), c.real("one_alpha"));
    else
      o = {c.real("one_p"), c.real("one_pbar"), cplx(c.real("one_d_re"), c.real("one_d_im"))};
    o.validate();
  } catch (const DomainError& e) {
    throw ConfigError("one_source", e.what());
  }
  return o;
}

ResultTable run_ensemble(const ScenarioConfig& c) {
  auto one = one_particle(c);
  auto N = static_cast<std::size_t>(c.integer("N"));
  ResultTable t;
  t.add_meta("one.p", fmt(one.p));
  t.add_meta("one.pbar", fmt(one.pbar));
  t.add_meta("one.d_re", fmt(one.d.real()));
  t.add_meta("one.d_im", fmt(one.d.imag()));
  t.add_meta("one.alpha", fmt(one.alpha()));
  t.add_meta("peak_prediction", fmt(static_cast<double>(N) * one.p / (one.p + one.pbar)));

  if (c.text("ensemble_view") == "epsilon_matrix") {
    auto m = ensemble::exact_matrix(N, one);
    if (c.integer("delta_n") > 0)
      m = ensemble::binned_matrix(m, {static_cast<std::size_t>(2 * c.integer("delta_n")), 0});
    std::vector<double> a, b, le;
    for (std::size_t i = 0; i < m.dim(); ++i)
      for (std::size_t j = 0; j < m.dim(); ++j) {
        a.push_back(static_cast<double>(i));
        b.push_back(static_cast<double>(j));
        double v;
        try {
          v = ensemble::log_epsilon(m, i, j);
        } catch (const DomainError&) {
          v = std::numeric_limits<double>::quiet_NaN();
        }
        le.push_back(v);
      }
    t.add_column("n", a);
    t.add_column("nprime", b);
    t.add_column("log_epsilon", le);
    return t;
  }

  auto logp = ensemble::log_candidate_probabilities(N, one);
  long long nr = c.integer("n_ref");
  std::size_t ref = nr < 0 ? N / 2 : static_cast<std::size_t>(nr);
  t.add_meta("n_ref", std::to_string(ref));
  auto st = ensemble::peak_stats(logp);
  t.add_meta("stats.argmax", std::to_string(st.argmax));
  t.add_meta("stats.mean", fmt(st.mean));
  t.add_meta("stats.variance", fmt(st.variance));
  std::vector<double> n(N + 1), p(N + 1), le(N + 1), e(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    n[k] = static_cast<double>(k);
    p[k] = std::exp(logp[k]);
    double l;
    try {
      l = ensemble::log_epsilon_exact(N, k, ref, one);
    } catch (const DomainError&) {
      l = std::numeric_limits<double>::quiet_NaN();
    }
    le[k] = l;
    e[k] = std::exp(l);
  }
  t.add_column("n", n);
  t.add_column("p_n", p);
  t.add_column("log_p_n", logp);
  t.add_column("epsilon_ref", e);
  t.add_column("log_epsilon_ref", le);
  return t;
}

}  // namespace

ResultTable run_scenario(const ScenarioConfig& config) {
  config.validate();
  const auto& pl = config.text("pipeline");
  bool strict = config.flag("strict");
  ResultTable t;
  if (pl == "unitary")
    t = run_unitary(config);
  else if (pl == "classical")
    t = run_classical(config);
  else if (pl == "qbm")
    t = run_qbm(config, strict);
  else if (pl == "ensemble")
    t = run_ensemble(config);
  else
    throw ConfigError("pipeline", "the acceptance pipeline is run by the acceptance suite");

  ResultTable out;
  out.add_meta("program", "arrival " + version());
  out.add_meta("pipeline", pl);
  out.add_meta("units", "natural unless overridden: hbar=" + config.text("hbar") +
                            " m=" + config.text("m"));
  out.add_meta("seed", config.text("seed").empty() ? "none" : config.text("seed"));
  for (const auto& [k, v] : config.entries()) out.add_meta("config." + k, v);
  for (const auto& kv : t.meta()) out.add_meta(kv.first, kv.second);
  for (const auto& col : t.columns()) out.add_column(col.name, col.values);
  return out;
}

std::string run_to_csv(const ScenarioConfig& config) { return run_scenario(config).to_csv(); }

}  // namespace arrival::scenario
