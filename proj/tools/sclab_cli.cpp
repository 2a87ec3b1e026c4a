// sclab: command-line front end.  Every subcommand prints its JSON report on
// stdout and writes report plus CSV artifacts into --out.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include <sclab/sclab.hpp>

namespace fs = std::filesystem;
using sclab::io::json;

namespace {

constexpr int kUsage = 64;
constexpr int kSoftware = 70;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Error codes that describe bad input rather than a failed computation.
bool is_usage_code(const std::string& code) {
  static const std::set<std::string> usage{
      "subcritical-Discr", "invalid-p",        "invalid-config",   "invalid-family",  "invalid-ell",
      "invalid-k",         "invalid-exponent", "invalid-variant",  "invalid-order",   "invalid-annulus",
      "bad-tolerance",     "L-too-small",      "M-too-small",      "ell-too-small",   "invalid-time",
      "missing-xi",        "insufficient-xi",  "irrational-discr", "grid-too-short"};
  return usage.count(code) > 0;
}

void emit(const fs::path& out, const std::string& name, const json& report) {
  sclab::io::write_json(out / name, report);
  std::cout << sclab::io::to_string(report);
}

std::vector<double> column(const sclab::RadialField& f) { return f.v; }

// ---------------------------------------------------------------------------
// Config schema helpers

class Schema {
 public:
  Schema(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UsageError(where_ + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw UsageError(where_ + ": unknown key '" + it.key() + "'");
  }

  bool has(const char* key) const { return j_.contains(key); }

  double num(const char* key, double def, double lo, double hi) const {
    if (!j_.contains(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw UsageError(where_ + "." + key + ": expected a number");
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi))
      throw UsageError(where_ + "." + key + ": value out of range [" + sclab::io::fmt17(lo) + ", " +
                       sclab::io::fmt17(hi) + "]");
    return x;
  }

  double required(const char* key, double lo, double hi) const {
    if (!j_.contains(key)) throw UsageError(where_ + ": missing required key '" + key + "'");
    return num(key, 0, lo, hi);
  }

  int integer(const char* key, int def, int lo, int hi) const {
    if (!j_.contains(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw UsageError(where_ + "." + key + ": expected an integer");
    const int x = v.get<int>();
    if (x < lo || x > hi) throw UsageError(where_ + "." + key + ": value out of range");
    return x;
  }

  bool flag(const char* key, bool def) const {
    if (!j_.contains(key)) return def;
    if (!j_.at(key).is_boolean()) throw UsageError(where_ + "." + key + ": expected a boolean");
    return j_.at(key).get<bool>();
  }

  std::string str(const char* key, const std::string& def) const {
    if (!j_.contains(key)) return def;
    if (!j_.at(key).is_string()) throw UsageError(where_ + "." + key + ": expected a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> list(const char* key) const {
    std::vector<double> out;
    if (!j_.contains(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw UsageError(where_ + "." + key + ": expected an array of numbers");
    for (const auto& e : v) {
      if (!e.is_number()) throw UsageError(where_ + "." + key + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Schema sub(const char* key) const {
    static const json empty = json::object();
    return Schema(j_.contains(key) ? j_.at(key) : empty, where_ + "." + key);
  }

 private:
  const json& j_;
  std::string where_;
};

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config " + path);
  try {
    return json::parse(f);
  } catch (const std::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared builders

struct FamilySetup {
  std::unique_ptr<sclab::ProfileFamily> F;
  std::unique_ptr<sclab::XiDirections> X;
  bool cache_hit = false;
};

FamilySetup family_setup(const sclab::SupercriticalParams& P, int L_plus, double M, double rmax) {
  FamilySetup S;
  const sclab::GroundState G = sclab::io::cached_ground_state(P, rmax, 1e-10, 1e-3, &S.cache_hit);
  S.F = std::make_unique<sclab::ProfileFamily>(sclab::generate_phi_family(G, sclab::potentials(G), L_plus));
  if (M > 0) S.X = std::make_unique<sclab::XiDirections>(sclab::build_xi(*S.F, M));
  return S;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  if (s.empty()) return v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return v;
}

json complex_json(const std::vector<double>& b, const std::vector<double>& a) {
  return json{{"b", sclab::io::to_json(b)}, {"a", sclab::io::to_json(a)}};
}

// ---------------------------------------------------------------------------
// Subcommands

struct Common {
  int d = 12;
  double p = 7;
  std::string out = "sclab_out";
};

int cmd_numerology(const Common& c, int ell, bool permissive) {
  const auto P = sclab::derive_params(c.d, c.p, permissive);
  json r{{"params", sclab::io::to_json(P)}, {"p_jl", sclab::joseph_lundgren(c.d)}};
  if (ell > 0) r["admissibility"] = sclab::io::to_json(sclab::admissibility(P, ell));
  emit(c.out, "numerology.json", r);
  return 0;
}

int cmd_ground_state(const Common& c, double rmax, double tol, double h) {
  const auto P = sclab::derive_params(c.d, c.p);
  bool hit = false;
  const sclab::GroundState G = sclab::io::cached_ground_state(P, rmax, tol, h, &hit);
  const auto V = sclab::potentials(G);
  const fs::path out(c.out);
  const auto& y = G.grid->y();
  auto csv = [&](const char* name, const sclab::RadialField& f) {
    sclab::io::write_csv(out / name, {"y", "value"}, {y, column(f)});
  };
  csv("Q.csv", G.Q);
  csv("LambdaQ.csv", G.LQ);
  csv("V_plus.csv", V.V_plus);
  csv("V_minus.csv", V.V_minus);
  csv("W_plus.csv", V.W_plus);
  csv("W_minus.csv", V.W_minus);
  double min_lq = G.LQ[0];
  for (double x : G.LQ.v) min_lq = std::min(min_lq, x);
  const double lo = std::min(1e2, rmax / 10), hi = std::min(1e3, rmax);
  const auto qfit = sclab::tail_fit(G.Q, {}, lo, hi);
  const auto dfit = sclab::tail_fit(G.dev, {}, lo, hi);
  json r{{"params", sclab::io::to_json(P)},
         {"rmax", rmax},
         {"tol", tol},
         {"h", h},
         {"nodes", G.grid->size()},
         {"cache_key", sclab::io::ground_state_key(P, rmax, tol, h)},
         {"cache_hit", hit},
         {"ode_residual", sclab::ode_residual(G)},
         {"derivative_consistency", sclab::derivative_consistency(G)},
         {"min_LambdaQ", min_lq},
         {"tail",
          {{"window", {lo, hi}},
           {"scaling_exponent_fit", -qfit.leading_exponent},
           {"scaling_exponent", P.m},
           {"gamma_fit", -dfit.leading_exponent},
           {"gamma", P.tail_gamma},
           {"c_inf_fit", G.c_inf_fit},
           {"c_inf", P.c_inf},
           {"a1_fit", G.a1_fit}}}};
  emit(out, "ground_state.json", r);
  return 0;
}

int cmd_profiles(const Common& c, int L, double M, double rmax) {
  const auto P = sclab::derive_params(c.d, c.p);
  const FamilySetup S = family_setup(P, L, M, rmax);
  const auto& F = *S.F;
  const fs::path out(c.out);
  const auto& y = F.grid()->y();
  json members = json::array();
  auto add = [&](const char* fam, int k, const sclab::ComplexPair& u, const sclab::TailFit& fit, double expected,
                 double residual) {
    const std::string name = std::string("phi_") + fam + "_" + std::to_string(k) + ".csv";
    sclab::io::write_csv(out / name, {"y", "re", "im"}, {y, u.re.v, u.im.v});
    members.push_back(json{{"family", fam},
                           {"k", k},
                           {"file", name},
                           {"expected_exponent", expected},
                           {"fitted_exponent", fit.leading_exponent},
                           {"inversion_residual", residual}});
  };
  for (int k = 0; k <= F.L_plus; ++k)
    add("plus", k, F.phi_plus[k], F.phi_plus_fit[k], F.phi_plus_expected[k], F.phi_plus_residual[k]);
  for (int k = 0; k <= F.L_minus; ++k)
    add("minus", k, F.phi_minus[k], F.phi_minus_fit[k], F.phi_minus_expected[k], F.phi_minus_residual[k]);
  json r{{"params", sclab::io::to_json(P)}, {"L_plus", F.L_plus}, {"L_minus", F.L_minus},
         {"fit_window", {F.fit_lo, F.fit_hi}}, {"members", members}};
  if (S.X) {
    r["xi"] = json{{"M", S.X->M},
                   {"pairing", S.X->pairing},
                   {"biorthogonality_defect", sclab::biorthogonality_defect(*S.X)},
                   {"c_plus_plus", sclab::io::to_json(S.X->cp_plus)},
                   {"c_plus_minus", sclab::io::to_json(S.X->cp_minus)},
                   {"c_minus_plus", sclab::io::to_json(S.X->cm_plus)},
                   {"c_minus_minus", sclab::io::to_json(S.X->cm_minus)}};
  }
  emit(out, "profiles.json", r);
  return 0;
}

int cmd_profile(const Common& c, int L, const std::string& bs, const std::string& as, double eta0, double rmax) {
  const auto P = sclab::derive_params(c.d, c.p);
  const FamilySetup S = family_setup(P, L, 0, rmax);
  sclab::ProfileConfig cfg;
  cfg.b = parse_list(bs);
  cfg.a = parse_list(as);
  cfg.eta0 = eta0;
  const auto prof = sclab::assemble(*S.F, cfg);
  const auto res = sclab::renormalized_residual(prof);
  const fs::path out(c.out);
  sclab::io::write_csv(out / "profile.csv", {"y", "re", "im", "chi", "residual_re", "residual_im"},
                       {S.F->grid()->y(), prof.field.re.v, prof.field.im.v, prof.chi.v, res.re.v, res.im.v});
  json r{{"params", sclab::io::to_json(P)},
         {"config", complex_json(cfg.b, cfg.a)},
         {"eta", cfg.eta(S.F->L_plus)},
         {"B1", prof.B1},
         {"residual_weighted_norm", sclab::weighted_residual_norm(res, S.F->grid()->rmax())},
         {"residual_weighted_norm_2B1",
          std::isfinite(prof.B1) ? sclab::weighted_residual_norm(res, 2 * prof.B1) : 0.0}};
  emit(out, "profile.json", r);
  return 0;
}

std::map<std::string, double> parse_perturb(const std::string& s) {
  std::map<std::string, double> m;
  if (s.empty()) return m;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("perturbation must look like b2=1e-3: '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (key.size() < 2 || (key[0] != 'b' && key[0] != 'a' && key[0] != 'V'))
      throw UsageError("perturbation key must be b<k>, a<k> or V<k>: '" + key + "'");
    m[key] = parse_list(item.substr(eq + 1)).at(0);
  }
  return m;
}

int cmd_param_flow(const Common& c, int ell, double s0, double s_end, const std::string& perturb, int L_plus,
                   int L_minus) {
  const auto P = sclab::derive_params(c.d, c.p);
  const auto A = sclab::admissibility(P, ell);
  if (!A.ell_ok) throw sclab::Error("ell-too-small", "ell must exceed alpha/2");
  if (L_plus < 0) L_plus = ell;
  if (L_minus < 0) L_minus = std::max(A.k_ell, 1);
  const auto L = sclab::linearization(P.alpha, ell);
  sclab::ParamState x0 = sclab::explicit_solution(P, ell, s0, L_plus, L_minus);
  const auto pert = parse_perturb(perturb);
  Eigen::VectorXd V = Eigen::VectorXd::Zero(ell);
  bool modal = false;
  for (const auto& [key, val] : pert) {
    const int k = std::stoi(key.substr(1));
    if (key[0] == 'V') {
      if (k < 1 || k > ell) throw UsageError("V index out of range: " + key);
      V(k - 1) = val;
      modal = true;
    }
  }
  if (modal) x0 = sclab::state_from_modes(L, s0, V, Eigen::VectorXd(), L_plus, L_minus);
  for (const auto& [key, val] : pert) {
    const int k = std::stoi(key.substr(1));
    if (key[0] == 'b') {
      if (k < 1 || k > L_plus) throw UsageError("b index out of range: " + key);
      x0.b[k - 1] += val;
    } else if (key[0] == 'a') {
      if (k < 1 || k > L_minus) throw UsageError("a index out of range: " + key);
      x0.a[k - 1] += val;
    }
  }
  sclab::IntegrateOptions opt;
  opt.samples = 400;
  const auto tr = sclab::integrate(P, x0, s_end, opt);
  const fs::path out(c.out);
  std::vector<std::string> head{"s", "t", "lambda", "phase"};
  for (int k = 1; k <= L_plus; ++k) head.push_back("b" + std::to_string(k));
  for (int k = 1; k <= L_minus; ++k) head.push_back("a" + std::to_string(k));
  for (int k = 1; k <= ell; ++k) head.push_back("V" + std::to_string(k));
  for (int k = 1; k <= L.k_ell; ++k) head.push_back("At" + std::to_string(k));
  std::vector<std::vector<double>> cols(head.size());
  double drift = 0, inv_lo = std::numeric_limits<double>::infinity(), inv_hi = 0;
  const double c1 = ell / (2.0 * ell - P.alpha);
  for (const auto& x : tr.states) {
    std::size_t j = 0;
    cols[j++].push_back(x.s);
    cols[j++].push_back(x.t);
    cols[j++].push_back(x.lam);
    cols[j++].push_back(x.phase);
    for (double b : x.b) cols[j++].push_back(b);
    for (double a : x.a) cols[j++].push_back(a);
    const auto mc = sclab::mode_coordinates(L, x);
    for (int k = 0; k < ell; ++k) cols[j++].push_back(mc.V(k));
    for (int k = 0; k < L.k_ell; ++k) cols[j++].push_back(mc.Atilde(k));
    const auto xe = sclab::explicit_solution(P, ell, x.s, L_plus, L_minus);
    for (int k = 0; k < L_plus; ++k)
      drift = std::max(drift, std::abs(x.b[k] - xe.b[k]) / std::max(std::abs(xe.b[0]), 1e-300));
    const double inv = x.lam * std::pow(x.s, c1);
    inv_lo = std::min(inv_lo, inv);
    inv_hi = std::max(inv_hi, inv);
  }
  sclab::io::write_csv(out / "trajectory.csv", head, cols);
  json r{{"params", sclab::io::to_json(P)},
         {"ell", ell},
         {"s0", s0},
         {"s_end", s_end},
         {"perturbation", pert.empty() ? json::object() : json(pert)},
         {"samples", tr.states.size()},
         {"blowup_reached", tr.blowup_reached},
         {"orbit_drift", drift},
         {"scaling_invariant_spread", inv_hi / inv_lo - 1},
         {"expected_exponent", ell / P.alpha}};
  try {
    const auto fit = sclab::blowup_fit(tr, 1.0);
    r["fit"] = json{{"T", fit.T}, {"exponent", fit.exponent}, {"prefactor", fit.prefactor}, {"rms", fit.rms},
                    {"points", fit.points}};
  } catch (const sclab::Error& e) {
    r["fit"] = json{{"error", e.code()}, {"message", e.what()}};
  }
  emit(out, "param_flow.json", r);
  return 0;
}

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

int cmd_spectrum(const Common& c, int ell, double alpha) {
  if (!(alpha > 0)) alpha = sclab::derive_params(c.d, c.p).alpha;
  const auto L = sclab::linearization(alpha, ell);
  json r{{"alpha", alpha},
         {"ell", ell},
         {"M", matrix_json(L.M)},
         {"eigenvalues", vector_json(L.D)},
         {"eigenvalues_closed_form", sclab::io::to_json(L.D_closed)},
         {"P", matrix_json(L.P)},
         {"spectrum_error", L.spectrum_error},
         {"k_ell", L.k_ell},
         {"delta_ell", L.delta_ell},
         {"Mcal", matrix_json(L.Mcal)},
         {"eigenvalues_cal", vector_json(L.Dcal)},
         {"eigenvalues_cal_closed_form", sclab::io::to_json(L.Dcal_closed)},
         {"Qcal", matrix_json(L.Qcal)},
         {"spectrum_error_cal", L.spectrum_error_cal}};
  emit(c.out, "spectrum.json", r);
  return 0;
}

int cmd_selfsim(const Common& c, int ell, const std::string& family) {
  const auto fam = sclab::parse_family(family);
  const auto P = sclab::derive_params(c.d, c.p);
  json r{{"d", c.d}, {"p", c.p}, {"ell", ell}, {"family", sclab::to_string(fam)}};
  sclab::SelfSimilarEigenpair<double> E;
  const bool integer_p = std::abs(c.p - std::round(c.p)) == 0.0;
  bool exact = false;
  if (integer_p) {
    try {
      const auto S = sclab::selfsim_params_exact(c.d, static_cast<int>(c.p));
      const auto X = sclab::build_eigenpair(S, fam, ell);
      json coeffs = json::array();
      for (const auto& q : X.c) coeffs.push_back(q.str());
      r["exact"] = json{{"gamma", S.gamma.str()},
                        {"decay_rate", X.decay_rate.str()},
                        {"beta", X.beta.str()},
                        {"coefficients", coeffs},
                        {"coefficient_residual", sclab::coefficient_residual(X).str()}};
      E = sclab::to_double(X);
      exact = true;
    } catch (const sclab::Error& e) {
      if (e.code() != "irrational-discr") throw;
    }
  }
  if (!exact) E = sclab::build_eigenpair(sclab::selfsim_params(P), fam, ell);
  r["arithmetic"] = exact ? "rational" : "double";
  r["decay_rate"] = E.decay_rate;
  r["operator_eigenvalue"] = E.operator_eigenvalue;
  r["beta"] = E.beta;
  r["coefficients"] = sclab::io::to_json(E.c);
  r["coefficient_residual_double"] = sclab::coefficient_residual(E);
  r["grid_residual"] = sclab::eigen_residual(E, 0.5, 5.0);
  emit(c.out, "selfsim.json", r);
  return 0;
}

json report_json(const sclab::InequalityReport& r) {
  return json{{"id", r.id},       {"descriptor", r.descriptor}, {"lhs", r.lhs},
              {"rhs", r.rhs},     {"boundary", r.boundary},     {"weighted", r.weighted},
              {"constant", r.constant}, {"ratio", r.ratio},     {"pass", r.pass}};
}

json report_json(const sclab::CoercivityReport& r) {
  return json{{"k", r.k},
              {"regime", r.regime},
              {"constraints", r.constraints},
              {"basis", r.basis},
              {"retained", r.retained},
              {"min_quotient", r.min_quotient},
              {"overlap", r.overlap},
              {"constraint_residual", r.constraint_residual},
              {"positive", r.positive}};
}

int cmd_validate(const Common& c, const std::string& suite, int L, double M, double rmax) {
  json r{{"suite", suite}, {"d", c.d}};
  bool pass = true;
  if (suite == "hardy") {
    json items = json::array();
    for (const auto& rep : sclab::hardy_suite(c.d)) {
      items.push_back(report_json(rep));
      pass = pass && rep.pass;
    }
    r["reports"] = items;
  } else if (suite == "coercivity") {
    const auto P = sclab::derive_params(c.d, c.p);
    r["p"] = c.p;
    const FamilySetup S = family_setup(P, L, M, rmax);
    const auto suiteR = sclab::coercivity_suite(*S.F, *S.X);
    json items = json::array();
    for (const auto& rep : suiteR.constrained) items.push_back(report_json(rep));
    r["constrained"] = items;
    r["unconstrained"] = report_json(suiteR.unconstrained);
    pass = suiteR.pass;
  } else {
    throw UsageError("--suite must be hardy or coercivity");
  }
  r["pass"] = pass;
  emit(c.out, "validate_" + suite + ".json", r);
  return pass ? 0 : 1;
}

sclab::SimConfig sim_config(const Schema& root, const sclab::SupercriticalParams& P) {
  sclab::SimConfig sc;
  sc.params = P;
  const Schema g = root.sub("grid");
  g.allow({"scale", "h", "rmax"});
  sc.grid_scale = g.num("scale", sc.grid_scale, 1e-6, 1e3);
  sc.grid_h = g.num("h", sc.grid_h, 1e-5, 1.0);
  sc.rmax = g.num("rmax", sc.rmax, 1.0, 1e8);
  const Schema st = root.sub("stepper");
  st.allow({"scheme", "dt", "t_end", "remesh", "remesh_lambda", "remesh_cells", "blowup_amplitude", "dt_min",
            "max_steps", "sample_every", "nonlinear"});
  if (st.str("scheme", "cn-strang") != "cn-strang") throw UsageError("stepper.scheme must be cn-strang");
  sc.dt = st.num("dt", sc.dt, 1e-12, 1.0);
  sc.remesh = st.flag("remesh", sc.remesh);
  sc.remesh_lambda = st.num("remesh_lambda", sc.remesh_lambda, 1e-3, 0.99);
  sc.remesh_cells = st.integer("remesh_cells", sc.remesh_cells, 1, 1000000);
  sc.blowup_amplitude = st.num("blowup_amplitude", sc.blowup_amplitude, 1.0, 1e300);
  sc.dt_min = st.num("dt_min", sc.dt_min, 0.0, 1.0);
  sc.max_steps = st.integer("max_steps", 20000000, 1, 2000000000);
  sc.sample_every = st.integer("sample_every", sc.sample_every, 1, 1000000000);
  sc.nonlinear = st.flag("nonlinear", true);
  sc.sigma = root.num("sigma", 0.0, 0.0, 1e3);
  return sc;
}

int cmd_simulate(const Common& c, const std::string& config) {
  const json cfg = load_config(config);
  const Schema root(cfg, "config");
  root.allow({"d", "p", "ell", "sigma", "grid", "stepper", "initial", "modulation"});
  const int d = root.integer("d", c.d, 11, 1000);
  const double p = root.num("p", c.p, 3, 1e3);
  const auto P = sclab::derive_params(d, p);
  sclab::SimConfig sc = sim_config(root, P);
  const double t_end = root.sub("stepper").num("t_end", 1.0, 0.0, 1e12);
  const Schema mod = root.sub("modulation");
  mod.allow({"L_plus", "M", "every", "family_rmax"});
  const bool modulate = root.has("modulation");
  sc.L_plus = mod.integer("L_plus", 2, 1, 12);
  sc.validate();
  const sclab::Simulator sim(sc);
  const double sigma = sc.sigma_value();

  FamilySetup fam;
  if (modulate || root.sub("initial").str("type", "ground-state") == "profile")
    fam = family_setup(P, sc.L_plus, mod.num("M", 4.0, 2.0, 1e4), mod.num("family_rmax", 2e3, 1e3, 1e6));

  const Schema init = root.sub("initial");
  init.allow({"type", "amplitude", "width", "b", "a", "lambda", "phase"});
  const std::string type = init.str("type", "ground-state");
  const double amp = init.num("amplitude", 1.0, -1e6, 1e6);
  sclab::SimState st;
  if (type == "ground-state") {
    st = sim.state_from([](double) { return sclab::cplx(0.0); });
    for (std::size_t i = 0; i < st.u.size(); ++i) st.u[i] = amp * sim.ground_state()[i];
  } else if (type == "gaussian") {
    const double w = init.num("width", 1.0, 1e-6, 1e6);
    st = sim.state_from([&](double r) { return sclab::cplx(amp * std::exp(-(r / w) * (r / w)), 0.0); });
  } else if (type == "profile") {
    sclab::ProfileConfig pc;
    pc.b = init.list("b");
    pc.a = init.list("a");
    const auto prof = sclab::assemble(*fam.F, pc);
    const auto f = sclab::modulated_profile(prof, init.num("lambda", 1.0, 1e-6, 1e6), init.num("phase", 0.0, -1e6, 1e6));
    st = sim.state_from([&](double r) { return amp * f(r); });
  } else {
    throw UsageError("initial.type must be ground-state, gaussian or profile");
  }

  const int every = mod.integer("every", 10, 1, 1000000000);
  const int nb = fam.F ? fam.F->L_plus : 0, na = fam.F ? fam.F->L_minus : 0;
  std::vector<std::string> head{"t", "lambda", "mass", "energy", "umax", "scale", "sobolev_sigma"};
  if (modulate) {
    head.insert(head.end(), {"mod_lambda", "phase"});
    for (int k = 1; k <= nb; ++k) head.push_back("b" + std::to_string(k));
    for (int k = 1; k <= na; ++k) head.push_back("a" + std::to_string(k));
    head.push_back("eps_norm");
  }
  std::vector<std::vector<double>> cols(head.size());
  const sclab::SobolevProxy sob(sim);
  sclab::ModulationGuess guess{1.0, 0.0, {}, {}};
  if (init.has("lambda")) guess.lam = init.num("lambda", 1.0, 1e-6, 1e6);
  if (init.has("phase")) guess.phase = init.num("phase", 0.0, -1e6, 1e6);
  guess.b = init.list("b");
  guess.a = init.list("a");
  std::string mod_status = modulate ? "ok" : "off";
  long sample = 0;
  auto record = [&](const sclab::SimState& s) {
    const auto smp = sim.sample(s);
    std::size_t j = 0;
    for (double v : {smp.t, smp.lam, smp.mass, smp.energy, smp.umax, smp.scale, sob(s, sigma)}) cols[j++].push_back(v);
    if (!modulate) return;
    sclab::ModulationResult mr;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    bool ok = mod_status == "ok";
    if (ok) {
      try {
        mr = sclab::modulation_decompose(sim.physical_field(s), *fam.F, *fam.X, guess);
        guess = {mr.lam, mr.phase, mr.b, mr.a};
      } catch (const sclab::Error& e) {
        mod_status = e.code();
        ok = false;
      }
    }
    cols[j++].push_back(ok ? mr.lam : nan);
    cols[j++].push_back(ok ? mr.phase : nan);
    for (int k = 0; k < nb; ++k) cols[j++].push_back(ok ? mr.b[k] : nan);
    for (int k = 0; k < na; ++k) cols[j++].push_back(ok ? mr.a[k] : nan);
    cols[j++].push_back(ok ? mr.eps_norm : nan);
  };
  const double mass0 = sim.mass(st), energy0 = sim.energy(st);
  record(st);
  const auto res = sim.evolve(st, t_end, [&](const sclab::SimState& s) {
    if (s.steps % (static_cast<long>(sc.sample_every) * every) == 0) {
      record(s);
      ++sample;
    }
    return true;
  });
  if (cols[0].back() != st.t) record(st);

  const fs::path out(c.out);
  sclab::io::write_csv(out / "trajectory.csv", head, cols);
  const auto phys = sim.physical_field(st);
  std::vector<double> rr, re, im;
  for (std::size_t i = 0; i < st.u.size(); ++i) {
    const double r = st.scale * sim.grid()->y(i);
    const auto z = phys(r);
    rr.push_back(r);
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  sclab::io::write_csv(out / "snapshot.csv", {"r", "re", "im"}, {rr, re, im});
  json r{{"params", sclab::io::to_json(P)},
         {"status", sclab::to_string(res.status)},
         {"message", res.message},
         {"t", st.t},
         {"steps", st.steps},
         {"remeshes", st.remeshes},
         {"scale", st.scale},
         {"sigma", sigma},
         {"s_plus", sc.s_plus()},
         {"mass0", mass0},
         {"energy0", energy0},
         {"mass_drift", std::abs(sim.mass(st) - mass0) / std::max(std::abs(mass0), 1e-300)},
         {"energy_drift", std::abs(sim.energy(st) - energy0) / std::max(std::abs(energy0), 1e-300)},
         {"modulation", mod_status}};
  emit(out, "simulate.json", r);
  switch (res.status) {
    case sclab::SimStatus::focusing: return 2;
    case sclab::SimStatus::breakdown: return 3;
    default: return 0;
  }
}

int cmd_shoot(const Common& c, const std::string& config) {
  const json cfg = load_config(config);
  const Schema root(cfg, "config");
  root.allow({"d", "p", "ell", "sigma", "grid", "stepper", "L_plus", "M", "family_rmax", "s0", "lambda0", "v_lo",
              "v_hi", "bound", "s_factor", "lambda_target", "decompose_every", "max_runs", "max_seconds",
              "coord_tol"});
  const int d = root.integer("d", c.d, 11, 1000);
  const double p = root.num("p", c.p, 3, 1e3);
  const auto P = sclab::derive_params(d, p);
  sclab::ShootConfig C;
  C.sim = sim_config(root, P);
  C.sim.rmax = root.sub("grid").num("rmax", 200.0, 1.0, 1e8);
  C.sim.dt = root.sub("stepper").num("dt", 2e-3, 1e-12, 1.0);
  C.ell = root.integer("ell", 2, 1, 50);
  C.s0 = root.num("s0", C.s0, 1.0, 1e12);
  C.lam0 = root.num("lambda0", C.lam0, 1e-6, 1e6);
  C.v_lo = root.num("v_lo", C.v_lo, -1e12, 1e12);
  C.v_hi = root.num("v_hi", C.v_hi, -1e12, 1e12);
  C.bound = root.num("bound", C.bound, 0.0, 1e300);
  C.s_factor = root.num("s_factor", C.s_factor, 1.0, 1e12);
  C.lam_target = root.num("lambda_target", C.lam_target, 0.0, 1.0);
  C.M = root.num("M", C.M, 2.0, 1e4);
  C.family_rmax = root.num("family_rmax", C.family_rmax, 1e3, 1e6);
  C.decompose_every = root.integer("decompose_every", C.decompose_every, 1, 1000000000);
  C.max_runs = root.integer("max_runs", C.max_runs, 2, 100000);
  C.max_seconds = root.num("max_seconds", C.max_seconds, 0.0, 1e9);
  C.coord_tol = root.num("coord_tol", C.coord_tol, 0.0, 1e12);
  const int L_plus = root.integer("L_plus", std::max(3, C.ell), 1, 12);
  C.sim.L_plus = L_plus;
  C.sim.validate();
  const FamilySetup S = family_setup(P, L_plus, C.M, C.family_rmax);
  const auto R = sclab::shooting_search(C, *S.F, *S.X);

  const fs::path out(c.out);
  json runs = json::array();
  std::size_t best = 0;
  for (std::size_t i = 0; i < R.runs.size(); ++i) {
    const auto& run = R.runs[i];
    runs.push_back(json{{"v", run.v},
                        {"exit_sign", run.exit_sign},
                        {"trapping_time", run.trapping_time},
                        {"lambda_drop", run.lam_drop},
                        {"status", run.status}});
    if (run.trapping_time > R.runs[best].trapping_time) best = i;
  }
  if (!R.runs.empty()) {
    const auto& b = R.runs[best];
    sclab::io::write_csv(out / "best_run.csv", {"t", "s", "lambda", "b1", "v_unstable"}, {b.t, b.s, b.lam, b.b1, b.v_unstable});
  }
  json r{{"params", sclab::io::to_json(P)},
         {"ell", C.ell},
         {"s0", C.s0},
         {"best_v", R.best_v},
         {"best_trapping_time", R.best_trapping_time},
         {"lambda_drop", R.lam_drop},
         {"rate_exponent", R.rate_exponent},
         {"expected_exponent", R.expected_exponent},
         {"rate_recovered", R.rate_recovered},
         {"budget_exhausted", R.budget_exhausted},
         {"bracket_failed", R.bracket_failed},
         {"message", R.message},
         {"runs", runs}};
  emit(out, "shoot.json", r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sclab: supercritical NLS blow-up laboratory"};
  app.require_subcommand(0, 1);
  Common c;
  auto common = [&](CLI::App* s, bool dp = true) {
    if (dp) {
      s->add_option("--d", c.d, "dimension")->check(CLI::Range(1, 1000));
      s->add_option("--p", c.p, "nonlinearity exponent");
    }
    s->add_option("--out", c.out, "output directory");
  };

  int ell = 0, L = 3, L_minus = -1;
  bool permissive = false;
  double rmax = 2e3, tol = 1e-10, h = 1e-3, M = 10, eta0 = 0.05, s0 = 10, s_end = 100, alpha = 0;
  std::string bs, as, perturb, family = "plus", suite, config;

  auto* num = app.add_subcommand("numerology", "derived constants and admissibility");
  common(num);
  num->add_option("--ell", ell, "rate index");
  num->add_flag("--permissive", permissive, "accept any real p above p_JL");

  auto* gs = app.add_subcommand("ground-state", "ground state, potentials and tail report");
  common(gs);
  gs->add_option("--rmax", rmax)->check(CLI::PositiveNumber);
  gs->add_option("--tol", tol);
  gs->add_option("--step", h, "grid step in the sinh coordinate")->check(CLI::PositiveNumber);

  auto* prs = app.add_subcommand("profiles", "kernel generators Phi_k and Xi directions");
  common(prs);
  prs->add_option("--L", L, "L_plus")->check(CLI::Range(1, 12));
  prs->add_option("--M", M, "Xi cutoff scale (0 skips Xi)");
  prs->add_option("--rmax", rmax)->check(CLI::PositiveNumber);

  auto* pr = app.add_subcommand("profile", "approximate profile Q~_{b,a} and its residual");
  common(pr);
  pr->add_option("--L", L, "L_plus")->check(CLI::Range(1, 12));
  pr->add_option("--b", bs, "comma separated b_1,...");
  pr->add_option("--a", as, "comma separated a_1,...");
  pr->add_option("--eta0", eta0);
  pr->add_option("--rmax", rmax)->check(CLI::PositiveNumber);

  auto* pf = app.add_subcommand("param-flow", "parameter ODE trajectory and rate fit");
  common(pf);
  pf->add_option("--ell", ell)->required();
  pf->add_option("--s0", s0)->check(CLI::PositiveNumber);
  pf->add_option("--s-end", s_end)->check(CLI::PositiveNumber);
  pf->add_option("--perturb", perturb, "b<k>=v, a<k>=v or V<k>=v, comma separated");
  pf->add_option("--L-plus", L, "number of b parameters (default ell)");
  pf->add_option("--L-minus", L_minus, "number of a parameters");

  auto* sp = app.add_subcommand("spectrum", "linearized b and a systems and their spectra");
  common(sp);
  sp->add_option("--ell", ell)->required();
  sp->add_option("--alpha", alpha, "override alpha");

  auto* ss = app.add_subcommand("selfsim", "self-similar eigenpairs");
  common(ss);
  ss->add_option("--ell", ell)->required();
  ss->add_option("--family", family, "plus or minus");

  auto* va = app.add_subcommand("validate", "Hardy and coercivity suites");
  common(va);
  va->add_option("--suite", suite)->required();
  va->add_option("--L", L)->check(CLI::Range(1, 12));
  va->add_option("--M", M);
  va->add_option("--rmax", rmax);

  auto* si = app.add_subcommand("simulate", "evolve the radial NLS");
  common(si);
  si->add_option("--config", config)->required();

  auto* sh = app.add_subcommand("shoot", "one-unstable-mode shooting search");
  common(sh);
  sh->add_option("--config", config)->required();

  bool pf_L_given = false;
  try {
    app.parse(argc, argv);
    pf_L_given = pf->count("--L-plus") > 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*num) return cmd_numerology(c, ell, permissive);
    if (*gs) return cmd_ground_state(c, rmax, tol, h);
    if (*prs) return cmd_profiles(c, L, M, std::max(rmax, 2 * M));
    if (*pr) return cmd_profile(c, L, bs, as, eta0, rmax);
    if (*pf) return cmd_param_flow(c, ell, s0, s_end, perturb, pf_L_given ? L : -1, L_minus);
    if (*sp) return cmd_spectrum(c, ell, alpha);
    if (*ss) return cmd_selfsim(c, ell, family);
    if (*va) return cmd_validate(c, suite, L, M, va->count("--rmax") ? rmax : 5e4);
    if (*si) return cmd_simulate(c, config);
    if (*sh) return cmd_shoot(c, config);
  } catch (const UsageError& e) {
    std::cerr << sclab::io::to_string(json{{"error", "schema"}, {"message", e.what()}});
    return kUsage;
  } catch (const sclab::Error& e) {
    std::cerr << sclab::io::to_string(json{{"error", e.code()}, {"message", e.what()}});
    return is_usage_code(e.code()) ? kUsage : kSoftware;
  } catch (const std::exception& e) {
    std::cerr << sclab::io::to_string(json{{"error", "internal"}, {"message", e.what()}});
    return kSoftware;
  }
  return kUsage;
}
