#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kuramoto/acceptance.hpp"
#include "kuramoto/distributions.hpp"
#include "kuramoto/errors.hpp"
#include "kuramoto/locked.hpp"
#include "kuramoto/meanfield.hpp"
#include "kuramoto/parallel.hpp"
#include "kuramoto/particles.hpp"
#include "kuramoto/penrose.hpp"
#include "kuramoto/reduction.hpp"
#include "kuramoto/volterra.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace kuramoto;

namespace {

// ---------------------------------------------------------------------------
// Option groups.

struct DistSpec {
  std::string family = "gaussian";
  std::vector<double> params;
  std::string table;
};

struct Global {
  std::string out;
  bool out_on_command_line = false;
  unsigned threads = 0;
};

struct Coefficients {
  std::vector<std::string> raw;  // l:re:im
};

void add_dist(CLI::App* app, DistSpec& d) {
  app->add_option("--dist", d.family, "Distribution family")
      ->check(CLI::IsMember({"gaussian", "lorentzian", "bimodal", "tabulated"}))
      ->capture_default_str();
  app->add_option("--params", d.params,
                  "Family parameters: gaussian mean,stddev; lorentzian center,halfwidth; bimodal offset,stddev")
      ->delimiter(',');
  app->add_option("--table", d.table, "Two-column CSV file (w,g) for the tabulated family");
}

void add_coefficients(CLI::App* app, Coefficients& c, const std::string& help) {
  app->add_option("--c", c.raw, help)->take_all();
}

double param(const DistSpec& d, std::size_t i, double fallback) { return i < d.params.size() ? d.params[i] : fallback; }

std::vector<std::pair<double, double>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open table file '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream s(line);
    double w, g;
    if (!(s >> w >> g)) {
      if (rows.empty()) continue;  // header
      throw usage_error("table file '" + path + "': malformed row '" + line + "'");
    }
    rows.emplace_back(w, g);
  }
  return rows;
}

VelocityDistribution make_dist(const DistSpec& d) {
  const std::size_t allowed = d.family == "tabulated" ? 0 : 2;
  if (d.params.size() > allowed) throw usage_error("--params: too many values for " + d.family);
  if (d.family == "gaussian") return VelocityDistribution::gaussian(param(d, 0, 0.0), param(d, 1, 1.0));
  if (d.family == "lorentzian") return VelocityDistribution::lorentzian(param(d, 0, 0.0), param(d, 1, 1.0));
  if (d.family == "bimodal") {
    if (d.params.empty()) throw usage_error("bimodal needs --params offset[,stddev]");
    return VelocityDistribution::bimodal(d.params[0], param(d, 1, 1.0));
  }
  if (d.table.empty()) throw usage_error("tabulated needs --table FILE");
  std::vector<double> w, g;
  for (const auto& [a, b] : read_table(d.table)) {
    w.push_back(a);
    g.push_back(b);
  }
  return VelocityDistribution::tabulated(std::move(w), std::move(g));
}

json dist_json(const DistSpec& d, const VelocityDistribution& dist) {
  json j{{"family", d.family}, {"name", dist.name()}, {"params", d.params}};
  if (!d.table.empty()) j["table"] = d.table;
  return j;
}

/// Parses l:re:im triples into c_1..c_L (missing l are zero).
std::vector<cplx> parse_coefficients(const Coefficients& c) {
  std::vector<cplx> out;
  for (const auto& item : c.raw) {
    std::vector<std::string> parts;
    std::stringstream s(item);
    std::string p;
    while (std::getline(s, p, ':')) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3) throw usage_error("--c expects l:re[:im], got '" + item + "'");
    int l;
    double re, im = 0.0;
    try {
      std::size_t used = 0;
      l = std::stoi(parts[0], &used);
      if (used != parts[0].size()) throw std::invalid_argument("l");
      re = std::stod(parts[1]);
      if (parts.size() == 3) im = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw usage_error("--c expects l:re[:im], got '" + item + "'");
    }
    if (l < 1) throw usage_error("--c: mode index must be >= 1");
    if (out.size() < static_cast<std::size_t>(l)) out.resize(static_cast<std::size_t>(l), 0.0);
    out[static_cast<std::size_t>(l - 1)] = {re, im};
  }
  return out;
}

json coefficients_json(const std::vector<cplx>& c) {
  json a = json::array();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0.0) a.push_back({{"l", i + 1}, {"re", c[i].real()}, {"im", c[i].imag()}});
  return a;
}

// ---------------------------------------------------------------------------
// Output.

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// --out on the command line, then $KURAMOTO_OUT, then `out` from the config file, then ".".
fs::path out_dir(const Global& g) {
  const char* env = std::getenv("KURAMOTO_OUT");
  fs::path p = ".";
  if (g.out_on_command_line)
    p = g.out;
  else if (env && *env)
    p = env;
  else if (!g.out.empty())
    p = g.out;
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << s;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

class Csv {
 public:
  explicit Csv(const std::string& header) { s_ << header << '\n'; }
  void row(std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
      if (!first) s_ << ',';
      s_ << num(v);
      first = false;
    }
    s_ << '\n';
  }
  std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

void summary(const std::string& line) { std::printf("%s\n", line.c_str()); }

json cplx_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

// ---------------------------------------------------------------------------
// penrose

struct PenroseOpts {
  DistSpec dist;
  double coupling = 1.0;
  double extent = 0.0;
  int samples = 2048;
  double k_min = 1e-3, k_max = 1e3;
};

int run_penrose(const Global& g, const PenroseOpts& o) {
  const auto dist = make_dist(o.dist);
  penrose::CriticalSearch search;
  search.k_min = o.k_min;
  search.k_max = o.k_max;
  const double X = o.extent > 0.0 ? o.extent : 8.0 * dist.scale();
  const auto rep = penrose::analyze(dist, o.coupling, X, o.samples, search);
  const auto curve = penrose::boundary_curve(dist, X, o.samples);
  const auto dir = out_dir(g);
  Csv csv("x,re,im");
  for (const auto& s : curve.samples) csv.row({s.x, s.w.real(), s.w.imag()});
  write_text(dir / "penrose_curve.csv", csv.str());
  const penrose::CurveOptions copt;
  json j{{"coupling", rep.coupling},
         {"winding", rep.winding_count},
         {"stable", rep.stable},
         {"K_c", rep.penrose_critical ? json(*rep.penrose_critical) : json(nullptr)},
         {"K_ec", rep.energy_critical},
         {"sufficient_bound", rep.sufficient_bound},
         {"distribution", dist_json(o.dist, dist)},
         {"grid", {{"extent_requested", X}, {"extent", curve.extent}, {"core_extent", curve.core_extent},
                   {"samples", o.samples}, {"curve_points", curve.samples.size()}}},
         {"tolerances", {{"closure", copt.closure}, {"endpoint_magnitude", curve.endpoint_magnitude},
                         {"bracket", {o.k_min, o.k_max}}, {"cap", search.k_cap}}}};
  write_json(dir / "penrose.json", j);
  summary("penrose: " + dist.name() + " K_c = " + (rep.penrose_critical ? num(*rep.penrose_critical) : "none") +
          " K_ec = " + num(rep.energy_critical) + " winding(K = " + num(o.coupling) +
          ") = " + std::to_string(rep.winding_count) + " -> " + (dir / "penrose.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// eigen

struct EigenOpts {
  DistSpec dist;
  double coupling = 1.0;
  std::optional<double> strip;
  std::vector<double> box;
  double boundary_tol = 1e-8;
};

int run_eigen(const Global& g, const EigenOpts& o) {
  const auto dist = make_dist(o.dist);
  const double strip = o.strip ? *o.strip : volterra::default_strip(dist);
  volterra::Box box{};
  if (o.box.empty()) {
    box = volterra::default_box(dist, o.coupling, strip);
  } else {
    if (o.box.size() != 4) throw usage_error("--box expects re_min,re_max,im_min,im_max");
    box = {o.box[0], o.box[1], o.box[2], o.box[3]};
  }
  volterra::RootOptions ropt;
  ropt.boundary_tol = o.boundary_tol;
  const auto set = volterra::locate_roots(dist, o.coupling, strip, box, ropt);
  json roots = json::array();
  for (const auto& r : set.roots) {
    json res = json::array();
    for (const auto& c : r.residues) res.push_back(cplx_json(c));
    roots.push_back({{"re", r.lambda.real()}, {"im", r.lambda.imag()}, {"multiplicity", r.multiplicity},
                     {"laurent", res}});
  }
  json j{{"roots", roots},
         {"box", {{"re_min", box.re_min}, {"re_max", box.re_max}, {"im_min", box.im_min}, {"im_max", box.im_max}}},
         {"strip", strip},
         {"boundary_min_abs", set.boundary_min_abs},
         {"coupling", o.coupling},
         {"contour_count", set.contour_count},
         {"distribution", dist_json(o.dist, dist)},
         {"grid", {{"residue_points", ropt.residue_points}}},
         {"tolerances", {{"boundary", ropt.boundary_tol}, {"cluster_diameter", ropt.cluster_diameter},
                         {"newton_iterations", ropt.newton_iterations}}}};
  const auto dir = out_dir(g);
  write_json(dir / "eigen.json", j);
  std::string list;
  for (const auto& r : set.roots) list += " " + num(r.lambda.real()) + (r.lambda.imag() < 0 ? "" : "+") +
                                          num(r.lambda.imag()) + "i";
  summary("eigen: " + std::to_string(set.total_multiplicity()) + " root(s) in box at K = " + num(o.coupling) + ":" +
          (list.empty() ? " none" : list) + " -> " + (dir / "eigen.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// volterra

struct VolterraOpts {
  DistSpec dist;
  double coupling = 1.0;
  double horizon = 20.0;
  double dt = 1.0 / 64;
  double amplitude = 1e-3;
  bool resolvent = false;
};

int run_volterra(const Global& g, const VolterraOpts& o) {
  const auto dist = make_dist(o.dist);
  const auto k = volterra::kernel_signal(dist, o.coupling, o.horizon, o.dt);
  SampledSignal x;
  double res = 0.0;
  if (o.resolvent) {
    x = volterra::resolvent_solve(k);
    res = volterra::detail::residual(k, x, k);
  } else {
    SampledSignal f{0.0, o.dt, std::vector<cplx>(k.size())};
    for (std::size_t j = 0; j < f.size(); ++j) f.values[j] = o.amplitude * dist.fourier(f.time(j));
    x = volterra::volterra_solve(k, f);
    res = volterra::detail::residual(k, x, f);
  }
  const auto dir = out_dir(g);
  Csv csv("t,re,im");
  for (std::size_t j = 0; j < x.size(); ++j) csv.row({x.time(j), x.values[j].real(), x.values[j].imag()});
  write_text(dir / "volterra.csv", csv.str());
  json j{{"solution", o.resolvent ? "resolvent" : "order_parameter"},
         {"coupling", o.coupling},
         {"amplitude", o.amplitude},
         {"residual", res},
         {"final", cplx_json(x.values.back())},
         {"distribution", dist_json(o.dist, dist)},
         {"grid", {{"dt", o.dt}, {"horizon", o.horizon}, {"samples", x.size()}}},
         {"tolerances", {{"residual_relative", 1e-8}}}};
  write_json(dir / "volterra.json", j);
  summary("volterra: " + std::string(o.resolvent ? "resolvent" : "nu") + " on " + std::to_string(x.size()) +
          " samples, residual " + num(res) + " -> " + (dir / "volterra.csv").string());
  return 0;
}

// ---------------------------------------------------------------------------
// simulate and energy

struct SimOpts {
  DistSpec dist;
  double coupling = 1.0;
  Coefficients c;
  double h = 1.0 / 64;
  double xi_max = 30.0;
  int lmax = 32;
  double horizon = 20.0;
  int corrector_passes = 1;
  bool energy = false;
  std::string fit;
  std::vector<double> fit_window;
};

struct EnergyTrack {
  meanfield::EnergyWeight weight;
  std::vector<double> energy;       // I(t_n)
  std::vector<double> dissipation;  // c int_0^t |eta|^2, right-endpoint sum
  double max_increase = -INFINITY;  // largest I(t_{n+1}) - I(t_n)
};

struct SimResult {
  meanfield::OrderParameterTrace trace;
  std::optional<EnergyTrack> energy;
};

SimResult simulate(const VelocityDistribution& dist, const SimOpts& o, const std::vector<cplx>& c) {
  auto s = meanfield::init_state(dist, c, o.h, o.xi_max, o.lmax);
  SimResult r;
  std::function<void(const meanfield::SpectralState&)> obs;
  if (o.energy) {
    r.energy.emplace();
    r.energy->weight = meanfield::build_energy_weight(dist, o.coupling, o.xi_max);
    obs = [&](const meanfield::SpectralState& st) {
      auto& e = *r.energy;
      const double I = meanfield::energy_functional(st, e.weight);
      if (e.energy.empty()) {
        e.dissipation.push_back(0.0);
      } else {
        e.max_increase = std::max(e.max_increase, I - e.energy.back());
        e.dissipation.push_back(e.dissipation.back() + e.weight.c() * std::norm(st.eta()) * st.h);
      }
      e.energy.push_back(I);
    };
  }
  r.trace = meanfield::run(s, o.coupling, o.horizon, {o.corrector_passes}, obs);
  return r;
}

json sim_grid(const SimOpts& o) {
  return {{"h", o.h}, {"xi_max", o.xi_max}, {"lmax", o.lmax}, {"horizon", o.horizon},
          {"corrector_passes", o.corrector_passes}};
}

json energy_summary(const VelocityDistribution& dist, const EnergyTrack& e) {
  const double I0 = e.energy.front(), IT = e.energy.back();
  const double inc = e.energy.size() > 1 ? e.max_increase : 0.0;
  return {{"K_ec", penrose::energy_critical_coupling(dist)},
          {"alpha", e.weight.alpha},
          {"c", e.weight.c()},
          {"gamma_bar", e.weight.gamma_bar},
          {"A_bar", e.weight.A_bar},
          {"I0", I0},
          {"IT", IT},
          {"max_step_increase", inc},
          {"monotone", inc <= 1e-6 * I0},
          {"inequality_lhs", IT + e.dissipation.back()},
          {"inequality_holds", IT + e.dissipation.back() <= I0 * (1.0 + 1e-3)}};
}

int run_simulate(const Global& g, const SimOpts& o) {
  const auto dist = make_dist(o.dist);
  const auto c = parse_coefficients(o.c);
  std::optional<meanfield::DecayModel> model;
  if (o.fit == "exponential") model = meanfield::DecayModel::exponential;
  if (o.fit == "algebraic") model = meanfield::DecayModel::algebraic;
  double t1 = 0.25 * o.horizon, t2 = o.horizon;
  if (!o.fit_window.empty()) {
    if (o.fit_window.size() != 2) throw usage_error("--fit-window expects t1,t2");
    t1 = o.fit_window[0];
    t2 = o.fit_window[1];
  }
  const auto r = simulate(dist, o, c);
  const auto& eta = r.trace.eta;
  const auto dir = out_dir(g);
  Csv csv("t,re_eta,im_eta,abs_eta,trunc_monitor");
  for (std::size_t i = 0; i < eta.size(); ++i)
    csv.row({eta.time(i), eta.values[i].real(), eta.values[i].imag(), std::abs(eta.values[i]), r.trace.truncation[i]});
  write_text(dir / "simulate.csv", csv.str());
  json j{{"coupling", o.coupling},
         {"coefficients", coefficients_json(c)},
         {"distribution", dist_json(o.dist, dist)},
         {"grid", sim_grid(o)},
         {"tolerances", {{"density_guard", "sum 2|c_l| <= 1"}, {"clamp", 1.0}}},
         {"final", {{"t", eta.time(eta.size() - 1)}, {"abs_eta", std::abs(eta.values.back())}}},
         {"max_abs_u", r.trace.max_abs_u},
         {"max_trunc_monitor", *std::max_element(r.trace.truncation.begin(), r.trace.truncation.end())}};
  if (r.energy) j["energy"] = energy_summary(dist, *r.energy);
  std::string fit_note;
  if (model) {
    // Written before the fit so that a failing fit still leaves the trace.
    write_json(dir / "simulate.json", j);
    const auto fit = meanfield::decay_fit(eta, t1, t2, *model);
    j["fit"] = {{"model", o.fit}, {"window", {t1, t2}}, {"rate", fit.rate}, {"r_squared", fit.r_squared},
                {"samples", fit.samples}};
    fit_note = " " + o.fit + " rate " + num(fit.rate);
  }
  write_json(dir / "simulate.json", j);
  summary("simulate: " + std::to_string(eta.size() - 1) + " steps, |eta(T)| = " + num(std::abs(eta.values.back())) +
          fit_note + " -> " + (dir / "simulate.csv").string());
  return 0;
}

int run_energy(const Global& g, SimOpts o) {
  o.energy = true;
  const auto dist = make_dist(o.dist);
  const auto c = parse_coefficients(o.c);
  const auto r = simulate(dist, o, c);
  const auto& e = *r.energy;
  const auto dir = out_dir(g);
  Csv csv("t,energy,energy_plus_dissipation");
  for (std::size_t i = 0; i < e.energy.size(); ++i)
    csv.row({r.trace.eta.time(i), e.energy[i], e.energy[i] + e.dissipation[i]});
  write_text(dir / "energy.csv", csv.str());
  json j = energy_summary(dist, e);
  j["coupling"] = o.coupling;
  j["coefficients"] = coefficients_json(c);
  j["distribution"] = dist_json(o.dist, dist);
  j["grid"] = sim_grid(o);
  j["tolerances"] = {{"monotone_relative", 1e-6}, {"inequality_relative", 1e-3}};
  write_json(dir / "energy.json", j);
  summary("energy: alpha = " + num(e.weight.alpha) + " I(0) = " + num(e.energy.front()) + " I(T) = " +
          num(e.energy.back()) + " monotone " + (j["monotone"].get<bool>() ? "yes" : "no") + " -> " +
          (dir / "energy.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// particles

struct ParticleOpts {
  DistSpec dist;
  double coupling = 1.0;
  std::size_t n = 5000;
  std::optional<std::uint64_t> seed;
  bool quantile = false;
  double dt = 1.0 / 32;
  double horizon = 20.0;
  Coefficients c;
};

int run_particles(const Global& g, const ParticleOpts& o) {
  if (o.seed && o.quantile) throw usage_error("--seed and --quantile are mutually exclusive");
  const auto dist = make_dist(o.dist);
  const auto c = parse_coefficients(o.c);
  const auto sampling = o.seed ? particles::Sampling::seeded(*o.seed) : particles::Sampling::quantile();
  const auto eta = particles::run_particles(dist, o.n, o.coupling, o.horizon, o.dt, sampling, c);
  const auto dir = out_dir(g);
  Csv csv("t,re,im,abs");
  for (std::size_t i = 0; i < eta.size(); ++i)
    csv.row({eta.time(i), eta.values[i].real(), eta.values[i].imag(), std::abs(eta.values[i])});
  write_text(dir / "particles.csv", csv.str());
  json j{{"coupling", o.coupling},
         {"n", o.n},
         {"sampling", o.seed ? "random" : "quantile"},
         {"seed", o.seed ? json(*o.seed) : json(nullptr)},
         {"coefficients", coefficients_json(c)},
         {"distribution", dist_json(o.dist, dist)},
         {"grid", {{"dt", o.dt}, {"horizon", o.horizon}, {"integrator", "rk4"}}},
         {"tolerances", {{"quantile_relative", 1e-10}}},
         {"final_abs", std::abs(eta.values.back())}};
  write_json(dir / "particles.json", j);
  summary("particles: N = " + std::to_string(o.n) + " |eta(T)| = " + num(std::abs(eta.values.back())) + " -> " +
          (dir / "particles.csv").string());
  return 0;
}

// ---------------------------------------------------------------------------
// bifurcate

struct BifurcateOpts {
  DistSpec dist;
  std::vector<double> eps{0.02, 0.05, 0.1};
  bool sweep = false;
  double h = 1.0 / 16;
  double xi_max = 40.0;
  int lmax = 64;
  double horizon = 0.0;
  double c1 = 0.05;
  double window = 50.0;
};

int run_bifurcate(const Global& g, const BifurcateOpts& o) {
  const auto dist = make_dist(o.dist);
  const auto red = reduction::reduce(dist);
  const auto dir = out_dir(g);
  json eig = json::array();
  for (const auto& z : red.eigenvalues) eig.push_back(cplx_json(z));
  json j{{"status", red.status},
         {"critical_eigenvalues", eig},
         {"distribution", dist_json(o.dist, dist)},
         {"grid", {{"eps", o.eps}}},
         {"tolerances", {{"moment_abs", reduction::detail::moment_tol}, {"criticality", 1e-6},
                         {"validity_eps_over_K_c", 0.1}}}};
  if (!red.equation) {
    write_json(dir / "bifurcate.json", j);
    summary("bifurcate: " + red.status + " -> " + (dir / "bifurcate.json").string());
    return 0;
  }
  const auto& eq = *red.equation;
  j["K_c"] = eq.critical_coupling;
  j["critical_frequency"] = eq.critical_frequency;
  j["linear_per_eps"] = cplx_json(eq.linear_per_eps);
  j["cubic"] = cplx_json(eq.cubic);
  j["normalization"] = cplx_json(eq.normalization);
  json table = json::array();
  std::vector<double> pred;
  for (double e : o.eps) {
    const auto a = reduction::equilibrium_amplitude(eq, e);
    pred.push_back(a.value);
    table.push_back({{"eps", e}, {"beta", a.value}, {"valid", a.valid}});
  }
  j["beta_c"] = table;
  std::string note;
  if (o.sweep) {
    Csv csv("eps,beta_pred,abs_eta_steady");
    json runs = json::array();
    for (std::size_t i = 0; i < o.eps.size(); ++i) {
      const double e = o.eps[i];
      const double T = o.horizon > 0.0 ? o.horizon : std::max(300.0, 12.0 / e);
      if (!(o.window > 0.0 && o.window <= T)) throw usage_error("--window must lie in (0, horizon]");
      auto s = meanfield::init_state(dist, {o.c1}, o.h, o.xi_max, o.lmax);
      const auto tr = meanfield::run(s, eq.critical_coupling + e, T);
      std::vector<double> tail;
      for (std::size_t k = 0; k < tr.eta.size(); ++k)
        if (tr.eta.time(k) >= T - o.window) tail.push_back(std::abs(tr.eta.values[k]));
      const double steady = pairwise_sum(tail) / static_cast<double>(tail.size());
      csv.row({e, pred[i], steady});
      runs.push_back({{"eps", e}, {"horizon", T}, {"abs_eta_steady", steady},
                      {"relative_error", std::abs(steady - pred[i]) / pred[i]}});
    }
    write_text(dir / "bifurcate.csv", csv.str());
    j["sweep"] = runs;
    j["grid"] = {{"eps", o.eps}, {"h", o.h}, {"xi_max", o.xi_max}, {"lmax", o.lmax}, {"c1", o.c1}, {"window", o.window}};
    note = " sweep of " + std::to_string(o.eps.size()) + " run(s)";
  }
  write_json(dir / "bifurcate.json", j);
  summary("bifurcate: K_c = " + num(eq.critical_coupling) + " cubic = " + num(eq.cubic.real()) + note + " -> " +
          (dir / "bifurcate.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// locked

struct LockedOpts {
  DistSpec dist;
  double coupling = 1.7;
  std::optional<double> eta;
  double a = 0.5;
  int lmax = 4;
  double xi_max = 12.0;
  int points = 120;
  bool phase_power_l = false;
};

int run_locked(const Global& g, const LockedOpts& o) {
  const auto dist = make_dist(o.dist);
  const double eta = o.eta ? *o.eta : locked::self_consistent_amplitude(dist, o.coupling);
  if (!(eta > 0.0)) throw domain_error("locked: no partially locked state at this coupling (|eta| = 0)");
  locked::LockedState s{o.coupling, eta, dist, o.phase_power_l};
  const auto est = locked::za_norm_estimate(s, o.a, o.lmax, o.xi_max, o.points);
  if (!std::isfinite(est.za_norm)) throw numeric_error("locked: norm estimate is not finite", est.za_norm);
  const double bound = std::max(est.bound_theorem, est.bound_proof);
  json j{{"za_norm", est.za_norm},
         {"bound", bound},
         {"bound_satisfied", est.bound_satisfied},
         {"tail_uncertainty", est.tail_uncertainty},
         {"bound_theorem", est.bound_theorem},
         {"bound_proof", est.bound_proof},
         {"small_eta", est.small_eta},
         {"shifted_norm", est.shifted_norm},
         {"eta", eta},
         {"eta_self_consistent", !o.eta.has_value()},
         {"coupling", o.coupling},
         {"a", o.a},
         {"argmax", {{"l", est.argmax_l}, {"xi", est.argmax_xi}}},
         {"distribution", dist_json(o.dist, dist)},
         {"grid", {{"lmax", o.lmax}, {"xi_max", o.xi_max}, {"points", o.points}, {"phase_power_l", o.phase_power_l}}},
         {"tolerances", {{"quadrature_abs", 1e-13}, {"quadrature_rel", 1e-11}}}};
  const auto dir = out_dir(g);
  write_json(dir / "locked.json", j);
  summary("locked: |eta| = " + num(eta) + " za_norm = " + num(est.za_norm) + " bound = " + num(bound) +
          (est.small_eta ? (est.bound_satisfied ? " (satisfied)" : " (violated)") : " (not applicable)") + " -> " +
          (dir / "locked.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// selftest

int run_selftest(const Global& g, const std::vector<int>& only) {
  const auto results = acceptance::run_all(only, [](const acceptance::Outcome& r) {
    std::printf("%s\n", acceptance::format(r).c_str());
    std::fflush(stdout);
  });
  if (results.empty()) throw usage_error("selftest: no criterion matches --only");
  json arr = json::array();
  int failed = 0;
  for (const auto& r : results) {
    arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    failed += r.pass ? 0 : 1;
  }
  const auto dir = out_dir(g);
  write_json(dir / "selftest.json", {{"criteria", arr}, {"passed", results.size() - failed}, {"total", results.size()}});
  summary("selftest: " + std::to_string(results.size() - failed) + " of " + std::to_string(results.size()) +
          " criteria passed -> " + (dir / "selftest.json").string());
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kuramoto mean-field toolkit", "kuramoto-cli"};
  app.require_subcommand(1);
  // Long form only: --h is the grid spacing.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "INI file; keys in [subcommand] sections, unknown keys rejected");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Global g;
  app.add_option("--out", g.out, "Output directory (default: $KURAMOTO_OUT, else the working directory)");
  app.add_option("--threads", g.threads, "Cap on worker threads (0: one per core)");

  PenroseOpts pen;
  auto* p = app.add_subcommand("penrose", "Boundary curve, winding count and critical couplings");
  add_dist(p, pen.dist);
  p->add_option("--coupling", pen.coupling, "Coupling K for the winding count")->capture_default_str();
  p->add_option("--extent", pen.extent, "Initial curve half-width (0: 8 scales)");
  p->add_option("--samples", pen.samples, "Uniform curve samples")->check(CLI::PositiveNumber)->capture_default_str();
  p->add_option("--k-min", pen.k_min, "Lower end of the reporting bracket")->capture_default_str();
  p->add_option("--k-max", pen.k_max, "Upper end of the reporting bracket")->capture_default_str();

  EigenOpts eig;
  auto* e = app.add_subcommand("eigen", "Roots of 1 - (K/2) Lghat(z) in a box");
  add_dist(e, eig.dist);
  e->add_option("--coupling", eig.coupling, "Coupling K")->required();
  e->add_option("--strip", eig.strip, "Strip width a (default 0.9 min(a_max, 1))");
  e->add_option("--box", eig.box, "re_min,re_max,im_min,im_max (default: bounding box of all roots)")
      ->delimiter(',');
  e->add_option("--boundary-tol", eig.boundary_tol, "Required min |F| on the box boundary")->capture_default_str();

  VolterraOpts vol;
  auto* v = app.add_subcommand("volterra", "Linear order parameter or resolvent by product integration");
  add_dist(v, vol.dist);
  v->add_option("--coupling", vol.coupling, "Coupling K")->required();
  v->add_option("--horizon", vol.horizon, "Final time")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--dt", vol.dt, "Time step")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--amplitude", vol.amplitude, "Initial first-mode amplitude c_1")->capture_default_str();
  v->add_flag("--resolvent", vol.resolvent, "Write the resolvent kernel instead");

  SimOpts sim;
  auto add_sim = [](CLI::App* a, SimOpts& s) {
    add_dist(a, s.dist);
    a->add_option("--coupling", s.coupling, "Coupling K")->required();
    add_coefficients(a, s.c, "Initial coefficients c_l as l:re[:im], repeatable");
    a->add_option("--h", s.h, "Grid spacing and time step")->check(CLI::PositiveNumber)->capture_default_str();
    a->add_option("--xi-max", s.xi_max, "Largest xi")->check(CLI::PositiveNumber)->capture_default_str();
    a->add_option("--lmax", s.lmax, "Number of spatial modes")->check(CLI::PositiveNumber)->capture_default_str();
    a->add_option("--horizon", s.horizon, "Final time")->check(CLI::NonNegativeNumber)->capture_default_str();
    a->add_option("--corrector-passes", s.corrector_passes, "Heun corrector passes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto* s = app.add_subcommand("simulate", "Mean-field spectral simulation");
  add_sim(s, sim);
  s->add_flag("--energy", sim.energy, "Track the energy functional");
  s->add_option("--fit", sim.fit, "Fit the decay of |eta|")->check(CLI::IsMember({"exponential", "algebraic"}));
  s->add_option("--fit-window", sim.fit_window, "t1,t2 (default horizon/4, horizon)")->delimiter(',');

  SimOpts en;
  auto* n = app.add_subcommand("energy", "Energy weight and the energy inequality along a run");
  add_sim(n, en);

  ParticleOpts par;
  auto* pa = app.add_subcommand("particles", "Finite-N oscillator ensemble");
  add_dist(pa, par.dist);
  pa->add_option("--coupling", par.coupling, "Coupling K")->required();
  pa->add_option("--n", par.n, "Number of oscillators")->check(CLI::PositiveNumber)->capture_default_str();
  pa->add_option("--seed", par.seed, "Draw frequencies randomly with this seed");
  pa->add_flag("--quantile", par.quantile, "Deterministic quantile frequencies (default)");
  pa->add_option("--dt", par.dt, "Time step")->check(CLI::PositiveNumber)->capture_default_str();
  pa->add_option("--horizon", par.horizon, "Final time")->check(CLI::NonNegativeNumber)->capture_default_str();
  add_coefficients(pa, par.c, "Phase-density coefficients c_l as l:re[:im], repeatable");

  BifurcateOpts bif;
  auto* b = app.add_subcommand("bifurcate", "Amplitude equation and optional mean-field sweep");
  add_dist(b, bif.dist);
  b->add_option("--eps", bif.eps, "Distances above K_c")->delimiter(',')->capture_default_str();
  b->add_flag("--sweep", bif.sweep, "Run mean-field simulations at K_c + eps");
  b->add_option("--h", bif.h, "Sweep grid spacing")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--xi-max", bif.xi_max, "Sweep largest xi")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--lmax", bif.lmax, "Sweep number of modes")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--horizon", bif.horizon, "Sweep final time (0: max(300, 12/eps))")->capture_default_str();
  b->add_option("--c1", bif.c1, "Sweep initial amplitude")->capture_default_str();
  b->add_option("--window", bif.window, "Averaging window at the end of each run")->capture_default_str();

  LockedOpts loc;
  auto* l = app.add_subcommand("locked", "Z^a norm of a partially locked state");
  add_dist(l, loc.dist);
  l->add_option("--coupling", loc.coupling, "Coupling K")->capture_default_str();
  l->add_option("--eta", loc.eta, "|eta| (default: self-consistent)");
  l->add_option("--a", loc.a, "Strip width a")->capture_default_str();
  l->add_option("--lmax", loc.lmax, "Largest mode")->check(CLI::PositiveNumber)->capture_default_str();
  l->add_option("--xi-max", loc.xi_max, "Largest xi")->check(CLI::PositiveNumber)->capture_default_str();
  l->add_option("--points", loc.points, "Grid intervals on [0, xi_max]")->check(CLI::PositiveNumber)->capture_default_str();
  l->add_flag("--phase-power-l", loc.phase_power_l, "Use (eta/|eta|)^l as the phase prefactor");

  std::vector<int> only;
  auto* st = app.add_subcommand("selftest", "Run the acceptance criteria");
  st->add_option("--only", only, "Criterion ids")->delimiter(',');

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 1;
  }

  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" || a.rfind("--out=", 0) == 0) g.out_on_command_line = true;
  }
  try {
    set_thread_cap(g.threads);
    if (p->parsed()) return run_penrose(g, pen);
    if (e->parsed()) return run_eigen(g, eig);
    if (v->parsed()) return run_volterra(g, vol);
    if (s->parsed()) return run_simulate(g, sim);
    if (n->parsed()) return run_energy(g, en);
    if (pa->parsed()) return run_particles(g, par);
    if (b->parsed()) return run_bifurcate(g, bif);
    if (l->parsed()) return run_locked(g, loc);
    if (st->parsed()) return run_selftest(g, only);
  } catch (const numeric_error& ex) {
    std::cerr << "numeric error: " << ex.what() << "\n";
    return 2;
  } catch (const domain_error& ex) {
    std::cerr << "invalid input: " << ex.what() << "\n";
    return 1;
  } catch (const usage_error& ex) {
    std::cerr << "usage: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 1;
}
