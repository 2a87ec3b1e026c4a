// Acceptance run: one PASS/FAIL line per criterion.  Criteria 1-10 decide the
// exit status; criterion 11 is a stretch experiment and only reports.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include <sclab/sclab.hpp>

using namespace sclab;

namespace {

namespace tol {
constexpr int kNumerologySamples = 500;
constexpr double kIdentity = 1e-10;
constexpr double kNumerologySeconds = 1.0;

constexpr double kGroundResidual = 1e-9;
constexpr double kScalingExponent = 0.005;
constexpr double kGammaExponent = 0.02;
constexpr double kGroundSeconds = 10.0;

constexpr double kRoundTrip = 1e-6;
constexpr double kInversionSeconds = 5.0;

constexpr double kFamilyTail = 0.02;

constexpr double kBiorthogonality = 1e-6;
constexpr double kPairingSlope = 0.05;

constexpr double kSpectrum = 1e-10;

constexpr double kOrbitDrift = 1e-8;
constexpr double kLambdaInvariant = 1e-6;
constexpr double kRateExponent = 0.01;

constexpr double kSelfSimGrid = 1e-10;

constexpr double kHardySharp = 0.01;
constexpr double kDegenerate = 1e-3;

constexpr double kMassDrift = 1e-6;
constexpr double kSoliton = 1e-4;
constexpr double kPlantRecover = 1e-6;

constexpr double kStretchDrop = 10.0;
constexpr double kStretchRate = 0.2;
constexpr double kStretchSeconds = 600.0;
}  // namespace tol

double now() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome run_guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome numerology() {
  const double t0 = now();
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dd(11, 40), qq(1, 80);
  double worst_discr = 0, worst_rel = 0;
  bool ranges = true;
  int n = 0;
  while (n < tol::kNumerologySamples) {
    const int d = dd(rng), p = 2 * qq(rng) + 1;
    if (!(p > joseph_lundgren(d))) continue;
    ++n;
    const auto P = derive_params(d, p);
    worst_discr = std::max(worst_discr, std::abs(P.discr - 4 * ((P.s_c - 2) * (P.s_c - 2) - (d - 1))) / (1 + std::abs(P.discr)));
    worst_rel = std::max({worst_rel, std::abs(d - 2 * P.tail_gamma - 4 * P.k_plus - (4 * P.delta_plus - 2)) / d,
                          std::abs(d - 4.0 / (p - 1) - 4 * P.k_minus - (4 * P.delta_minus - 2)) / d,
                          std::abs(0.5 * P.alpha - P.delta_k - (P.delta_minus - P.delta_plus)) / d});
    ranges = ranges && P.alpha > 2 && P.alpha < 0.5 * d - 1 && P.k_plus >= 1;
  }
  const double secs = now() - t0;
  return {worst_discr < tol::kIdentity && worst_rel < tol::kIdentity && ranges && secs < tol::kNumerologySeconds,
          fmt("%d pairs, discr %.1e, k/delta identities %.1e, ranges %s, %.2f s", n, worst_discr, worst_rel,
              ranges ? "ok" : "violated", secs)};
}

Outcome ground_state() {
  const double t0 = now();
  const auto G = solve_ground_state(derive_params(12, 7), 1e3, 1e-10);
  const double secs = now() - t0;
  const auto& P = G.params;
  const double res = ode_residual(G);
  bool positive = true;
  for (double v : G.LQ.v) positive = positive && v > 0;
  const double em = std::abs(tail_fit(G.Q, {}, 1e2, 1e3).leading_exponent / -P.m - 1);
  const double eg = std::abs(tail_fit(G.dev, {}, 1e2, 1e3).leading_exponent / -P.tail_gamma - 1);
  return {res < tol::kGroundResidual && positive && em < tol::kScalingExponent && eg < tol::kGammaExponent &&
              secs < tol::kGroundSeconds,
          fmt("residual %.1e, Lambda Q > 0: %s, 2/(p-1) err %.1e, gamma err %.1e, %.2f s", res, positive ? "yes" : "no",
              em, eg, secs)};
}

struct LinopSetup {
  GroundState gs;
  Potentials pot;
  ProfileFamily fam;
};

const LinopSetup& linop_setup() {
  static const LinopSetup S = [] {
    LinopSetup s;
    s.gs = solve_ground_state(derive_params(12, 7), 1e3, 1e-10, 5e-4);
    s.pot = potentials(s.gs);
    s.fam = generate_phi_family(s.gs, s.pot, 3);
    return s;
  }();
  return S;
}

Outcome inversion() {
  const auto& S = linop_setup();
  const auto g = S.gs.grid;
  const double ymax = g->rmax() / 2;
  const std::vector<std::function<double(double)>> corpus{
      [](double y) { return std::exp(-y * y); },
      [](double y) { return std::exp(-y * y / 4); },
      [](double y) { return y * y * std::exp(-y * y); },
      [](double y) { return std::exp(-(y - 3) * (y - 3)); },
      [](double y) { return std::pow(1 + y * y, -6.0); },
      [](double y) { return std::cos(y) * std::pow(1 + y * y, -8.0); },
      [](double y) { return smooth_step(y / 2); },
      [](double y) { return std::pow(y, 4) * std::exp(-y); },
      [](double y) { return 1 / std::cosh(y); },
      [](double y) { return std::exp(-y * y) * (1 - y * y / 3); },
  };
  auto sup_rel = [&](const RadialField& a, const RadialField& b) {
    double e = 0, s = 0;
    for (std::size_t i = 0; i < a.size() && g->y(i) <= ymax; ++i) {
      e = std::max(e, std::abs(a[i] - b[i]));
      s = std::max(s, std::abs(b[i]));
    }
    return e / s;
  };
  const double t0 = now();
  double worst = 0;
  for (const auto& fn : corpus) {
    const auto f = RadialField::sample(g, 12, fn);
    worst = std::max(worst, sup_rel(apply_Lplus(invert_Lplus(f, S.gs), S.pot), f));
    worst = std::max(worst, sup_rel(apply_Lminus(invert_Lminus(f, S.gs), S.pot), f));
  }
  const double secs = now() - t0;
  return {worst < tol::kRoundTrip && secs < tol::kInversionSeconds,
          fmt("%zu functions x {L_+, L_-}, worst %.1e on y <= %.0f, %.2f s", corpus.size(), worst, ymax, secs)};
}

Outcome family_tails() {
  const auto& F = linop_setup().fam;
  const auto& P = F.params;
  double worst = 0;
  for (int k = 0; k <= std::min(3, F.L_plus); ++k)
    worst = std::max(worst, std::abs(F.phi_plus_fit[k].leading_exponent / (2 * k - P.tail_gamma) - 1));
  for (int k = 0; k <= std::min(3, F.L_minus); ++k)
    worst = std::max(worst, std::abs(F.phi_minus_fit[k].leading_exponent / (2 * k - P.m) - 1));
  return {worst < tol::kFamilyTail, fmt("plus k <= %d, minus k <= %d, worst relative exponent error %.1e",
                                        std::min(3, F.L_plus), std::min(3, F.L_minus), worst)};
}

Outcome xi_biorthogonality() {
  const auto& F = linop_setup().fam;
  const auto& P = F.params;
  double defect = 0;
  std::vector<double> pairings;
  for (double M : {10.0, 20.0, 40.0}) {
    const auto X = build_xi(F, M);
    defect = std::max(defect, biorthogonality_defect(X));
    pairings.push_back(X.pairing);
  }
  const double slope = std::log(pairings[2] / pairings[0]) / std::log(4.0);
  const double expected = P.d - P.tail_gamma - P.m;
  const double es = std::abs(slope / expected - 1);
  return {defect < tol::kBiorthogonality && es < tol::kPairingSlope,
          fmt("defect %.1e (relative to pairing), slope %.4f vs %.4f (err %.1e)", defect, slope, expected, es)};
}

Outcome spectra() {
  double worst = 0, worst_cal = 0;
  bool positive = true;
  for (int ell = 2; ell <= 6; ++ell)
    for (double alpha : {2.2, 2.7, derive_params(12, 7).alpha, 3.5, 3.9}) {
      const auto L = linearization(alpha, ell);
      worst = std::max(worst, L.spectrum_error);
      worst_cal = std::max(worst_cal, L.spectrum_error_cal);
      for (double v : L.Dcal_closed) positive = positive && v > 0;
      for (Eigen::Index k = 0; k < L.Dcal.size(); ++k) positive = positive && L.Dcal(k) > 0;
    }
  return {worst < tol::kSpectrum && worst_cal < tol::kSpectrum && positive,
          fmt("ell 2..6 x 5 alpha: M_ell %.1e, Mcal %.1e, Mcal spectrum positive: %s", worst, worst_cal,
              positive ? "yes" : "no")};
}

Outcome parameter_flow() {
  const auto P = derive_params(12, 7);
  const int ell = 2;
  const auto x0 = explicit_solution(P, ell, 10, 4, 2);
  IntegrateOptions o;
  o.tol = 1e-13;
  o.samples = 400;
  const auto decade = integrate(P, x0, 100, o);
  const double c = ell / (2 * ell - P.alpha);
  double drift = 0, inv = 0;
  for (const auto& x : decade.states) {
    const auto e = explicit_solution(P, ell, x.s, 4, 2);
    for (std::size_t j = 0; j < e.b.size(); ++j)
      drift = std::max(drift, std::abs(x.b[j] - e.b[j]) * std::pow(x.s, j + 1.0));
    inv = std::max(inv, std::abs(x.lam * std::pow(x.s / 10.0, c) - 1));
  }
  const auto fit = blowup_fit(integrate(P, x0, 1e5, o));
  const double expected = ell / P.alpha;
  const double er = std::abs(fit.exponent / expected - 1);
  return {drift < tol::kOrbitDrift && inv < tol::kLambdaInvariant && er < tol::kRateExponent,
          fmt("orbit drift %.1e, lambda s^{l/(2l-a)} variation %.1e, rate %.5f vs %.5f (err %.1e)", drift, inv,
              fit.exponent, expected, er)};
}

Outcome selfsim() {
  const auto Sx = selfsim_params_exact(13, 5);
  const auto Sd = selfsim_params(derive_params(12, 7));
  bool exact = true;
  double grid = 0;
  for (auto fam : {Family::plus, Family::minus})
    for (int ell = 0; ell <= 4; ++ell) {
      exact = exact && coefficient_residual(build_eigenpair(Sx, fam, ell)) == Rational(0);
      grid = std::max(grid, eigen_residual(build_eigenpair(Sd, fam, ell), 1, 10));
    }
  return {exact && grid < tol::kSelfSimGrid,
          fmt("(13,5) exact residual zero: %s; (12,7) grid residual %.1e", exact ? "yes" : "no", grid)};
}

Outcome hardy_coercivity() {
  const auto suite = hardy_suite(12, tol::kHardySharp);
  bool hardy = true;
  double sharp = 0;
  for (const auto& r : suite) {
    hardy = hardy && r.pass;
    if (r.id == "origin-sharp") sharp = r.ratio / r.constant - 1;
  }
  const auto gs = std::make_shared<const GroundState>(solve_ground_state(derive_params(12, 7), 5e4, 1e-10, 0.01));
  const auto F = generate_phi_family(*gs, potentials(*gs), 3);
  const auto X = build_xi(F, 10);
  const auto C = coercivity_suite(F, X, tol::kDegenerate);
  std::string mins;
  for (const auto& r : C.constrained) mins += fmt(" k=%d:%.2e", r.k, r.min_quotient);
  return {hardy && std::abs(sharp) < tol::kHardySharp && C.pass,
          fmt("Hardy %zu checks %s, (d-2)^2/4 realized to %.1e; constrained minima%s; unconstrained k=%d %.1e",
              suite.size(), hardy ? "pass" : "fail", sharp, mins.c_str(), C.unconstrained.k,
              C.unconstrained.min_quotient)};
}

Outcome simulator() {
  SimConfig c;
  c.params = derive_params(12, 7);
  c.rmax = 60;
  c.remesh = false;
  const Simulator sim(c);
  auto s = sim.state_from([](double r) { return cplx(std::exp(-r * r), 0.3 * std::exp(-r * r / 2)); });
  const double m0 = sim.mass(s);
  for (int i = 0; i < 1000; ++i) sim.step(s, 1e-3);
  const double drift = std::abs(sim.mass(s) / m0 - 1);

  const auto& Qh = sim.ground_state();
  auto q = sim.state_from([](double) { return cplx(0); });
  for (std::size_t i = 0; i < Qh.size(); ++i) q.u[i] = Qh[i];
  sim.evolve(q, 1.0);
  double sol = 0;
  for (std::size_t i = 0; i < Qh.size(); ++i) sol = std::max(sol, std::abs(q.u[i] - Qh[i]));

  const auto G = solve_ground_state(c.params, 2e3, 1e-10);
  const auto F = generate_phi_family(G, potentials(G), 3);
  const auto X = build_xi(F, 10);
  ProfileConfig pc;
  pc.b = {1e-3, -1e-4, 5e-6};
  pc.a = {2e-4};
  const double lam = 0.7, phase = 0.3;
  const auto r = modulation_decompose(modulated_profile(assemble(F, pc), lam, phase), F, X,
                                      {0.72, 0.28, {1.05e-3, 0, 0}, {0}});
  std::vector<double> got{r.lam, r.phase, r.b[0], r.b[1], r.b[2], r.a[0]};
  std::vector<double> want{lam, phase, pc.b[0], pc.b[1], pc.b[2], pc.a[0]};
  double scale = 0, worst = 0;
  for (std::size_t k = 0; k < want.size(); ++k) {
    scale = std::max(scale, std::abs(want[k]));
    worst = std::max(worst, std::abs(got[k] - want[k]));
  }
  const double plant = worst / scale;
  const double lead = std::max({std::abs(r.lam / lam - 1), std::abs(r.phase - phase), std::abs(r.b[0] / pc.b[0] - 1)});
  return {drift < tol::kMassDrift && sol < tol::kSoliton && plant < tol::kPlantRecover && lead < tol::kPlantRecover,
          fmt("mass drift %.1e over 1e3 steps, soliton deviation %.1e on [0,1], plant-recover %.1e (lam/phase/b1 %.1e)",
              drift, sol, plant, lead)};
}

Outcome shooting() {
  const auto P = derive_params(12, 7);
  ShootConfig C;
  C.sim.params = P;
  C.sim.rmax = 200;
  C.sim.dt = 2e-3;
  C.max_seconds = tol::kStretchSeconds;
  const auto G = solve_ground_state(P, C.family_rmax, 1e-10);
  const auto F = generate_phi_family(G, potentials(G), 3);
  const auto X = build_xi(F, C.M);
  const auto R = shooting_search(C, F, X);
  const bool ok = R.rate_recovered && R.lam_drop >= tol::kStretchDrop &&
                  std::abs(R.rate_exponent / R.expected_exponent - 1) <= tol::kStretchRate;
  return {ok, fmt("%zu runs, best v %.3e, best trapping time %.3f, lambda drop %.2fx, rate %.4f vs %.4f: %s",
                  R.runs.size(), R.best_v, R.best_trapping_time, R.lam_drop, R.rate_exponent, R.expected_exponent,
                  R.message.c_str())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*fn)();
    bool stretch;
  };
  const Criterion list[] = {
      {1, "numerology identities", numerology, false},
      {2, "ground state (12,7)", ground_state, false},
      {3, "inversion round trips", inversion, false},
      {4, "Phi-family tails", family_tails, false},
      {5, "Xi biorthogonality", xi_biorthogonality, false},
      {6, "M_ell spectra", spectra, false},
      {7, "parameter flow", parameter_flow, false},
      {8, "self-similar eigenpairs", selfsim, false},
      {9, "Hardy and coercivity", hardy_coercivity, false},
      {10, "simulator", simulator, false},
      {11, "shooting (stretch)", shooting, true},
  };
  int failed = 0;
  for (const auto& c : list) {
    const double t0 = now();
    const Outcome o = run_guarded(c.fn);
    const char* tag = o.pass ? "PASS" : (c.stretch ? "FAIL (stretch, not gating)" : "FAIL");
    std::printf("criterion %2d %-24s %s  [%.1f s] %s\n", c.id, c.name, tag, now() - t0, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !c.stretch) ++failed;
  }
  std::printf("%s: %d gating criteria failed\n", failed ? "FAILED" : "OK", failed);
  return failed ? 1 : 0;
}
