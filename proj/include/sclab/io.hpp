#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ground_state.hpp"

namespace sclab::io {

using json = nlohmann::ordered_json;

inline std::string fmt17(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void dump(const json& j, std::ostream& os, int indent, int level) {
  const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
  const std::string end(static_cast<std::size_t>(indent * level), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        dump(it.value(), os, indent, level + 1);
      }
      os << "\n" << end << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      os << "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << (flat ? ", " : ",");
        first = false;
        if (!flat) os << "\n" << pad;
        dump(e, os, indent, level + 1);
      }
      if (!flat) os << "\n" << end;
      os << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      // JSON has no non-finite numbers; they are written as strings
      if (std::isfinite(x))
        os << fmt17(x);
      else
        os << '"' << fmt17(x) << '"';
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

// Pretty-printed JSON with every float written to 17 significant digits.
inline std::string to_string(const json& j) {
  std::ostringstream os;
  detail::dump(j, os, 2, 0);
  os << "\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io-error", "cannot write " + path.string());
  f << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, to_string(j)); }

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  std::ostringstream os;
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << "\n";
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << fmt17(columns[c][r]);
    os << "\n";
  }
  write_text(path, os.str());
}

inline json to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline json to_json(const SupercriticalParams& P) {
  return json{{"d", P.d},         {"p", P.p},
              {"m", P.m},         {"c_inf", P.c_inf},
              {"c_pow", P.c_pow}, {"discr", P.discr},
              {"gamma", P.tail_gamma}, {"gamma2", P.gamma2},
              {"alpha", P.alpha}, {"s_c", P.s_c},
              {"k_plus", P.k_plus}, {"k_minus", P.k_minus},
              {"delta_plus", P.delta_plus}, {"delta_minus", P.delta_minus},
              {"delta_p", P.delta_p}, {"delta_k", P.delta_k}};
}

inline json to_json(const AdmissibilityReport& A) {
  return json{{"is_p_analytic", A.is_p_analytic}, {"above_pjl", A.above_pjl}, {"discr_gt_4", A.discr_gt_4},
              {"generic", A.generic},             {"ell", A.ell},             {"ell_ok", A.ell_ok},
              {"k_ell", A.k_ell},                 {"delta_ell", A.delta_ell}, {"unstable_count", A.unstable_count}};
}

// ---------------------------------------------------------------------------
// Ground-state cache

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string ground_state_key(const SupercriticalParams& P, double rmax, double tol, double h) {
  std::ostringstream os;
  os << "gs-v1|" << P.d << "|" << fmt17(P.p) << "|" << fmt17(rmax) << "|" << fmt17(tol) << "|" << fmt17(h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

// Cache directory from SCLAB_CACHE_DIR; caching is off when it is unset.
inline std::optional<std::filesystem::path> cache_dir() {
  const char* env = std::getenv("SCLAB_CACHE_DIR");
  if (!env || !*env) return std::nullopt;
  return std::filesystem::path(env);
}

namespace detail {

inline void put_vec(std::ofstream& f, const std::vector<double>& v) {
  const std::uint64_t n = v.size();
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

inline bool get_vec(std::ifstream& f, std::vector<double>& v, std::size_t expect) {
  std::uint64_t n = 0;
  if (!f.read(reinterpret_cast<char*>(&n), sizeof n) || n != expect) return false;
  v.resize(n);
  return static_cast<bool>(f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))));
}

}  // namespace detail

// solve_ground_state(P, rmax, tol, h) through the on-disk cache.  Sets *hit
// when the result came from the cache.
inline GroundState cached_ground_state(const SupercriticalParams& P, double rmax, double tol = 1e-10, double h = 1e-3,
                                       bool* hit = nullptr) {
  if (hit) *hit = false;
  const auto dir = cache_dir();
  if (!dir) return solve_ground_state(P, rmax, tol, h);
  const auto path = *dir / ("ground_state_" + ground_state_key(P, rmax, tol, h) + ".bin");
  if (std::filesystem::exists(path)) {
    std::ifstream f(path, std::ios::binary);
    GroundState G;
    G.params = P;
    G.grid = Grid::make(1.0, h, rmax);
    G.tol = tol;
    const std::size_t n = G.grid->size();
    std::vector<double> q, dq, lq, dlq, dev, meta;
    if (detail::get_vec(f, q, n) && detail::get_vec(f, dq, n) && detail::get_vec(f, lq, n) &&
        detail::get_vec(f, dlq, n) && detail::get_vec(f, dev, n) && detail::get_vec(f, meta, 4)) {
      G.Q = RadialField(G.grid, P.d, q);
      G.dQ = RadialField(G.grid, P.d, dq, Parity::odd);
      G.LQ = RadialField(G.grid, P.d, lq);
      G.dLQ = RadialField(G.grid, P.d, dlq, Parity::odd);
      G.dev = RadialField(G.grid, P.d, dev);
      G.c_inf_fit = meta[0];
      G.a1_fit = meta[1];
      G.gamma_fit = meta[2];
      G.g = meta[3];
      if (hit) *hit = true;
      return G;
    }
  }
  GroundState G = solve_ground_state(P, rmax, tol, h);
  std::filesystem::create_directories(*dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) return G;
    detail::put_vec(f, G.Q.v);
    detail::put_vec(f, G.dQ.v);
    detail::put_vec(f, G.LQ.v);
    detail::put_vec(f, G.dLQ.v);
    detail::put_vec(f, G.dev.v);
    detail::put_vec(f, {G.c_inf_fit, G.a1_fit, G.gamma_fit, G.g});
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  return G;
}

}  // namespace sclab::io
