// Command-line front end: single-point queries, table reproduction, s-scans,
// Monte Carlo cross-checks.  Emits human, CSV, or JSON output; JSON documents
// carry {meta: {version, defaults, timestamp}, result: ...}.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nlcone/cone.hpp"
#include "nlcone/curvature.hpp"
#include "nlcone/errors.hpp"
#include "nlcone/oracle.hpp"
#include "nlcone/quadrature.hpp"
#include "nlcone/stability.hpp"
#include "nlcone/version.hpp"

using nlohmann::ordered_json;
using namespace nlcone;

namespace {

constexpr int kExitInvalidArgs = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitInconsistency = 4;

struct Options {
  int m = 0;
  int n = 0;
  double s = 0;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> tol;
  long long samples = 1000000;
  std::uint64_t seed = 0;
  std::string format = "human";
  std::string out;
  int jobs = 1;
  bool raw = false;
  bool bracket_threshold = false;
  double s_from = 0;
  double s_to = 0;
  int steps = 1;
  QuadSpec spec;  // effective quadrature tolerances (defaults, env, flags)
};

double env_double(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const double x = std::strtod(v, &end);
  if (end == v || !(x > 0))
    throw InvalidArgument(std::string(name) + ": expected a positive number");
  return x;
}

std::string iso_timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ordered_json ve(double value, double error) {
  return ordered_json{{"value", value}, {"error", error}};
}

ordered_json make_meta(const Options& o) {
  ordered_json defaults{{"quad_abs_tol", o.spec.abs_tol},
                        {"quad_rel_tol", o.spec.rel_tol},
                        {"samples", o.samples},
                        {"seed", o.seed},
                        {"jobs", o.jobs},
                        {"format", o.format}};
  return ordered_json{{"version", version_string},
                      {"defaults", defaults},
                      {"timestamp", iso_timestamp()}};
}

std::string provenance(const Options& o) {
  std::ostringstream h;
  h << "# nlcone " << version_string << " " << iso_timestamp() << "\n"
    << "# quad_abs_tol=" << o.spec.abs_tol << " quad_rel_tol=" << o.spec.rel_tol
    << " samples=" << o.samples << " seed=" << o.seed << " jobs=" << o.jobs
    << "\n";
  return h.str();
}

void write_output(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open output path: " + o.out);
  f << text;
}

void emit_json(const Options& o, const ordered_json& result) {
  ordered_json doc{{"meta", make_meta(o)}, {"result", result}};
  write_output(o, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

ordered_json aperture_json(const ApertureSolution& sol) {
  const double err = 0.5 * (sol.bracket.second - sol.bracket.first);
  return ordered_json{
      {"m", sol.params.swapped ? sol.params.n : sol.params.m},
      {"n", sol.params.swapped ? sol.params.m : sol.params.n},
      {"s", sol.params.s},
      {"alpha", ve(sol.params.swapped ? 1.0 / sol.params.alpha : sol.params.alpha,
                   err)},
      {"residual", sol.residual},
      {"bracket", ordered_json{{"lo", sol.bracket.first}, {"hi", sol.bracket.second}}},
      {"method", sol.method == SolveMethod::bisection ? "bisection"
                                                      : "closed-form-symmetry"}};
}

int cmd_aperture(const Options& o, bool force_s_zero) {
  const double s = force_s_zero ? 0.0 : o.s;
  ApertureSolution sol =
      s > 0 ? solve_alpha(o.m, o.n, s, o.tol.value_or(1e-5))
            : alpha0(o.m, o.n, o.tol.value_or(1e-10));
  ordered_json r = aperture_json(sol);
  if (o.format == "json") {
    emit_json(o, r);
  } else if (o.format == "csv") {
    std::ostringstream c;
    c << provenance(o)
      << "m,n,s,alpha,alpha_err,residual,bracket_lo,bracket_hi,method\n"
      << r["m"] << "," << r["n"] << "," << fmt("%.10g", s) << ","
      << fmt("%.12g", r["alpha"]["value"].get<double>()) << ","
      << fmt("%.3g", r["alpha"]["error"].get<double>()) << ","
      << fmt("%.3g", sol.residual) << "," << fmt("%.12g", sol.bracket.first)
      << "," << fmt("%.12g", sol.bracket.second) << ","
      << r["method"].get<std::string>() << "\n";
    write_output(o, c.str());
  } else {
    std::ostringstream h;
    h << "aperture for (m=" << r["m"] << ", n=" << r["n"] << ", s=" << s
      << ")\n"
      << "  alpha    = " << fmt("%.10f", r["alpha"]["value"].get<double>())
      << "  (+- " << fmt("%.2e", r["alpha"]["error"].get<double>()) << ")\n"
      << "  residual = " << fmt("%+.3e", sol.residual) << "\n"
      << "  method   = " << r["method"].get<std::string>() << "\n";
    write_output(o, h.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

ordered_json report_json(const StabilityReport& rep, bool solved) {
  const double aerr =
      solved ? 0.5 * (rep.diagnostics.alpha_bracket.second -
                      rep.diagnostics.alpha_bracket.first)
             : 0.0;
  const double pref = normalization_factor(rep.params);
  return ordered_json{
      {"m", rep.params.m},
      {"n", rep.params.n},
      {"s", rep.params.s},
      {"alpha", ve(rep.params.alpha, aerr)},
      {"alpha_method", !solved              ? "supplied"
                       : rep.diagnostics.method == SolveMethod::bisection
                           ? "bisection"
                           : "closed-form-symmetry"},
      {"alpha_residual", rep.diagnostics.alpha_residual},
      {"H", ordered_json{{"normalized", ve(rep.H_normalized, rep.diagnostics.hardy_error)},
                         {"raw", ve(rep.H_value, pref * rep.diagnostics.hardy_error)}}},
      {"A0_squared",
       ordered_json{{"normalized", ve(rep.A0_normalized, rep.diagnostics.a0_error)},
                    {"raw", ve(rep.A0_squared, pref * rep.diagnostics.a0_error)}}},
      {"margin",
       ve(rep.margin,
          pref * (rep.diagnostics.hardy_error + rep.diagnostics.a0_error))},
      {"margin_normalized",
       ve(rep.H_normalized - rep.A0_normalized,
          rep.diagnostics.hardy_error + rep.diagnostics.a0_error)},
      {"verdict", rep.stable ? "stable" : "unstable"}};
}

int cmd_stability(const Options& o) {
  StabilityReport rep;
  bool solved = !o.alpha.has_value();
  if (o.alpha) {
    rep = stability_report(ConeParams<double>::make(o.m, o.n, o.s, *o.alpha),
                           o.spec);
  } else {
    rep = stability_report(o.m, o.n, o.s, o.tol.value_or(1e-5), o.spec);
  }
  ordered_json r = report_json(rep, solved);
  if (o.format == "json") {
    emit_json(o, r);
  } else if (o.format == "csv") {
    const char* conv = o.raw ? "raw" : "normalized";
    std::ostringstream c;
    c << provenance(o) << "# convention=" << conv << "\n"
      << "m,n,s,alpha,alpha_err,H,H_err,A0sq,A0sq_err,margin,margin_err,"
         "verdict\n";
    const auto& H = r["H"][conv];
    const auto& A = r["A0_squared"][conv];
    const double mh = H["value"].get<double>() - A["value"].get<double>();
    const double me = H["error"].get<double>() + A["error"].get<double>();
    c << rep.params.m << "," << rep.params.n << "," << fmt("%.10g", rep.params.s)
      << "," << fmt("%.12g", rep.params.alpha) << ","
      << fmt("%.3g", r["alpha"]["error"].get<double>()) << ","
      << fmt("%.10g", H["value"].get<double>()) << ","
      << fmt("%.3g", H["error"].get<double>()) << ","
      << fmt("%.10g", A["value"].get<double>()) << ","
      << fmt("%.3g", A["error"].get<double>()) << "," << fmt("%.10g", mh) << ","
      << fmt("%.3g", me) << "," << r["verdict"].get<std::string>() << "\n";
    write_output(o, c.str());
  } else {
    std::ostringstream h;
    h << "stability of the cone (m=" << rep.params.m << ", n=" << rep.params.n
      << ", s=" << rep.params.s << ")\n"
      << "  alpha        = " << fmt("%.8f", rep.params.alpha) << "  ["
      << r["alpha_method"].get<std::string>() << "]\n"
      << "  H            = " << fmt("%.6f", rep.H_normalized) << " (+- "
      << fmt("%.1e", rep.diagnostics.hardy_error) << ")   raw "
      << fmt("%.6f", rep.H_value) << "\n"
      << "  A0^2         = " << fmt("%.6f", rep.A0_normalized) << " (+- "
      << fmt("%.1e", rep.diagnostics.a0_error) << ")   raw "
      << fmt("%.6f", rep.A0_squared) << "\n"
      << "  margin (raw) = " << fmt("%+.6f", rep.margin) << "\n"
      << "  verdict      = " << (rep.stable ? "stable" : "unstable") << "\n";
    write_output(o, h.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

// Runs fn(i) for i in [0, count) across o.jobs threads.  Exceptions are
// rethrown on the calling thread after everyone joins.
template <class Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int k = std::min(jobs, count);
  std::vector<std::exception_ptr> errs(k);
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (int j = 0; j < k; ++j)
    pool.emplace_back([&, j] {
      try {
        for (int i = j; i < count; i += k) fn(i);
      } catch (...) {
        errs[j] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

int cmd_table1(const Options& o) {
  struct Cell {
    int m, n;
  };
  std::vector<Cell> cells;
  for (int m = 2; m <= 7; ++m)
    for (int n = 1; n <= m; ++n) cells.push_back({m, n});
  std::vector<StabilityReport> reps(cells.size());
  parallel_for(int(cells.size()), o.jobs, [&](int i) {
    reps[i] = stability_report(cells[i].m, cells[i].n, 0.0, 1e-9, o.spec);
  });

  const bool raw = o.raw;
  auto hval = [&](const StabilityReport& r) { return raw ? r.H_value : r.H_normalized; };
  auto herr = [&](const StabilityReport& r) {
    return (raw ? normalization_factor(r.params) : 1.0) * r.diagnostics.hardy_error;
  };
  auto aval = [&](const StabilityReport& r) {
    return raw ? r.A0_squared : r.A0_normalized;
  };
  auto aerr = [&](const StabilityReport& r) {
    return (raw ? normalization_factor(r.params) : 1.0) * r.diagnostics.a0_error;
  };

  if (o.format == "json") {
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& r = reps[i];
      arr.push_back(ordered_json{{"m", cells[i].m},
                                 {"n", cells[i].n},
                                 {"alpha", ve(r.params.alpha, 0.0)},
                                 {"H", ve(hval(r), herr(r))},
                                 {"A0_squared", ve(aval(r), aerr(r))},
                                 {"verdict", r.stable ? "stable" : "unstable"}});
    }
    emit_json(o, ordered_json{{"s", 0.0},
                              {"convention", raw ? "raw" : "normalized"},
                              {"cells", arr}});
    return 0;
  }

  auto cell_at = [&](int m, int n) -> const StabilityReport* {
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].m == m && cells[i].n == n) return &reps[i];
    return nullptr;
  };
  if (o.format == "csv") {
    std::ostringstream c;
    c << provenance(o) << "# convention=" << (raw ? "raw" : "normalized") << "\n"
      << "m,quantity,n=1,n=2,n=3,n=4,n=5,n=6,n=7\n";
    auto block = [&](const char* tag, auto&& get) {
      for (int m = 2; m <= 7; ++m) {
        c << m << "," << tag;
        for (int n = 1; n <= 7; ++n) {
          c << ",";
          if (const StabilityReport* r = cell_at(m, n)) c << fmt("%.6g", get(*r));
        }
        c << "\n";
      }
    };
    block("H", hval);
    block("A0sq", aval);
    c << "# error estimates\n";
    block("H_err", herr);
    block("A0sq_err", aerr);
    write_output(o, c.str());
  } else {
    std::ostringstream h;
    h << "H(m,n,0) and A0(m,n,0)^2, "
      << (raw ? "raw" : "normalized") << " convention\n\n      ";
    for (int n = 1; n <= 7; ++n) h << "   n=" << n << "    ";
    h << "\n";
    for (int m = 2; m <= 7; ++m) {
      h << "m=" << m << " H  ";
      for (int n = 1; n <= 7; ++n) {
        const StabilityReport* r = cell_at(m, n);
        h << (r ? fmt("%9.4f", hval(*r)) : std::string(9, ' ')) << " ";
      }
      h << "\n    A0^2";
      for (int n = 1; n <= 7; ++n) {
        const StabilityReport* r = cell_at(m, n);
        h << (r ? fmt("%9.4f", aval(*r)) : std::string(9, ' ')) << " ";
      }
      h << "\n";
    }
    write_output(o, h.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_scan(const Options& o) {
  const int steps = o.steps;
  const double alpha_tol = o.tol.value_or(1e-4);
  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i)
    grid[i] = steps == 1
                  ? o.s_from
                  : o.s_from + (o.s_to - o.s_from) * double(i) / (steps - 1);
  std::vector<StabilityReport> reps(steps);
  parallel_for(steps, o.jobs, [&](int i) {
    reps[i] = stability_report(o.m, o.n, grid[i], alpha_tol, o.spec);
  });

  const bool raw = o.raw;
  auto disp_margin = [&](const StabilityReport& r) {
    return raw ? r.margin : r.H_normalized - r.A0_normalized;
  };

  // optional bisection of the margin sign change between adjacent grid rows;
  // reports the refined bracket only, never a root
  ordered_json threshold;  // null unless found
  std::ostringstream thuman;
  if (o.bracket_threshold) {
    int flip = -1;
    for (int i = 0; i + 1 < steps; ++i)
      if ((reps[i].margin > 0) != (reps[i + 1].margin > 0)) {
        flip = i;
        break;
      }
    if (flip >= 0) {
      double lo = grid[flip], hi = grid[flip + 1];
      double mlo = disp_margin(reps[flip]), mhi = disp_margin(reps[flip + 1]);
      for (int it = 0; it < 5; ++it) {
        const double mid = 0.5 * (lo + hi);
        StabilityReport rm = stability_report(o.m, o.n, mid, alpha_tol, o.spec);
        if ((rm.margin > 0) == (mlo > 0)) {
          lo = mid;
          mlo = disp_margin(rm);
        } else {
          hi = mid;
          mhi = disp_margin(rm);
        }
      }
      threshold = ordered_json{{"s_lo", lo},
                               {"s_hi", hi},
                               {"margin_lo", mlo},
                               {"margin_hi", mhi}};
      thuman << "margin sign change inside (" << fmt("%.6g", lo) << ", "
             << fmt("%.6g", hi) << "): margin " << fmt("%+.3e", mlo) << " -> "
             << fmt("%+.3e", mhi) << "\n";
    } else {
      thuman << "no margin sign change on the scanned grid\n";
    }
  }

  auto row_json = [&](int i) {
    const auto& r = reps[i];
    const double pref = normalization_factor(r.params);
    const double hscale = raw ? pref : 1.0;
    const double hv = raw ? r.H_value : r.H_normalized;
    const double av = raw ? r.A0_squared : r.A0_normalized;
    const double aerr = 0.5 * (r.diagnostics.alpha_bracket.second -
                               r.diagnostics.alpha_bracket.first);
    return ordered_json{
        {"s", grid[i]},
        {"alpha", ve(r.params.alpha, aerr)},
        {"H", ve(hv, hscale * r.diagnostics.hardy_error)},
        {"A0_squared", ve(av, hscale * r.diagnostics.a0_error)},
        {"margin", ve(hv - av, hscale * (r.diagnostics.hardy_error +
                                         r.diagnostics.a0_error))},
        {"verdict", r.stable ? "stable" : "unstable"}};
  };

  if (o.format == "json") {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < steps; ++i) rows.push_back(row_json(i));
    ordered_json res{{"m", o.m},
                     {"n", o.n},
                     {"convention", raw ? "raw" : "normalized"},
                     {"rows", rows}};
    if (o.bracket_threshold) res["threshold"] = threshold;
    emit_json(o, res);
  } else if (o.format == "csv") {
    std::ostringstream c;
    c << provenance(o) << "# convention=" << (raw ? "raw" : "normalized") << "\n"
      << "s,alpha,alpha_err,H,H_err,A0sq,A0sq_err,margin,margin_err,verdict\n";
    for (int i = 0; i < steps; ++i) {
      ordered_json r = row_json(i);
      c << fmt("%.10g", grid[i]) << ","
        << fmt("%.10g", r["alpha"]["value"].get<double>()) << ","
        << fmt("%.3g", r["alpha"]["error"].get<double>()) << ","
        << fmt("%.10g", r["H"]["value"].get<double>()) << ","
        << fmt("%.3g", r["H"]["error"].get<double>()) << ","
        << fmt("%.10g", r["A0_squared"]["value"].get<double>()) << ","
        << fmt("%.3g", r["A0_squared"]["error"].get<double>()) << ","
        << fmt("%.10g", r["margin"]["value"].get<double>()) << ","
        << fmt("%.3g", r["margin"]["error"].get<double>()) << ","
        << r["verdict"].get<std::string>() << "\n";
    }
    if (o.bracket_threshold) c << "# " << thuman.str();
    write_output(o, c.str());
  } else {
    std::ostringstream h;
    h << "scan (m=" << o.m << ", n=" << o.n << "), "
      << (raw ? "raw" : "normalized") << " convention\n"
      << "      s      alpha         H        A0^2      margin   verdict\n";
    for (int i = 0; i < steps; ++i) {
      ordered_json r = row_json(i);
      h << fmt("%7.4f", grid[i]) << "  "
        << fmt("%9.6f", r["alpha"]["value"].get<double>()) << "  "
        << fmt("%9.6f", r["H"]["value"].get<double>()) << "  "
        << fmt("%9.6f", r["A0_squared"]["value"].get<double>()) << "  "
        << fmt("%+9.6f", r["margin"]["value"].get<double>()) << "   "
        << r["verdict"].get<std::string>() << "\n";
    }
    if (o.bracket_threshold) h << thuman.str();
    write_output(o, h.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

ordered_json mc_json(const McEstimate& e, double z) {
  ordered_json j{{"mean", e.mean},
                 {"std_error", e.std_error},
                 {"samples", e.samples},
                 {"seed", e.seed},
                 {"cutoff_radius", std::isinf(e.cutoff_radius)
                                       ? ordered_json()
                                       : ordered_json(e.cutoff_radius)},
                 {"excision_radius", e.excision_radius}};
  j["z_vs_quadrature"] = z;
  return j;
}

int cmd_mc_check(const Options& o) {
  if (!o.alpha) throw InvalidArgument("mc-check: --alpha is required");
  auto P = ConeParams<double>::make(o.m, o.n, o.s, *o.alpha);
  IntegralResult quad = mean_curvature_H(P, o.spec);
  McEstimate sub = mc_mean_curvature(P, o.samples, o.seed,
                                     McEstimator::halfspace_subtracted, -1, o.jobs);
  McEstimate pla = mc_mean_curvature(P, o.samples, o.seed,
                                     McEstimator::plain_excised, -1, o.jobs);
  const double zs = (sub.mean - quad.value) / sub.std_error;
  const double zp = (pla.mean - quad.value) / pla.std_error;

  if (o.format == "json") {
    emit_json(o, ordered_json{{"m", o.m},
                              {"n", o.n},
                              {"s", o.s},
                              {"alpha", *o.alpha},
                              {"quadrature", ve(quad.value, quad.error_estimate)},
                              {"subtracted", mc_json(sub, zs)},
                              {"plain_excised", mc_json(pla, zp)}});
  } else if (o.format == "csv") {
    std::ostringstream c;
    c << provenance(o)
      << "route,value,error,samples,seed,cutoff_radius,excision_radius,z\n"
      << "quadrature," << fmt("%.10g", quad.value) << ","
      << fmt("%.3g", quad.error_estimate) << ",,,,,\n"
      << "subtracted," << fmt("%.10g", sub.mean) << ","
      << fmt("%.3g", sub.std_error) << "," << sub.samples << "," << sub.seed
      << ",inf," << fmt("%.3g", sub.excision_radius) << "," << fmt("%.2f", zs)
      << "\n"
      << "plain_excised," << fmt("%.10g", pla.mean) << ","
      << fmt("%.3g", pla.std_error) << "," << pla.samples << "," << pla.seed
      << ",inf," << fmt("%.3g", pla.excision_radius) << "," << fmt("%.2f", zp)
      << "\n";
    write_output(o, c.str());
  } else {
    std::ostringstream h;
    h << "curvature cross-check (m=" << o.m << ", n=" << o.n << ", s=" << o.s
      << ", alpha=" << fmt("%.6g", *o.alpha) << ")\n"
      << "  quadrature     " << fmt("%+.6f", quad.value) << " (+- "
      << fmt("%.1e", quad.error_estimate) << ")\n"
      << "  mc subtracted  " << fmt("%+.6f", sub.mean) << " (+- "
      << fmt("%.1e", sub.std_error) << ")  z=" << fmt("%+.2f", zs) << "\n"
      << "  mc plain       " << fmt("%+.6f", pla.mean) << " (+- "
      << fmt("%.1e", pla.std_error) << ")  z=" << fmt("%+.2f", zp) << "\n";
    write_output(o, h.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_jacobi_probe(const Options& o) {
  if (!o.alpha) throw InvalidArgument("jacobi-probe: --alpha is required");
  auto P = ConeParams<double>::make(o.m, o.n, o.s, *o.alpha);
  const double beta = o.beta.value_or(0.5 * (P.N() - 2 - P.s));
  JacobiProbe probe = jacobi_probe(P, beta, o.spec);
  const double gap = probe.pv_term - probe.predicted;
  const double gap_err = probe.pv_error + probe.predicted_error;

  if (o.format == "json") {
    emit_json(o, ordered_json{{"m", o.m},
                              {"n", o.n},
                              {"s", o.s},
                              {"alpha", *o.alpha},
                              {"beta", beta},
                              {"pv_term", ve(probe.pv_term, probe.pv_error)},
                              {"predicted", ve(probe.predicted, probe.predicted_error)},
                              {"gap", ve(gap, gap_err)}});
  } else if (o.format == "csv") {
    std::ostringstream c;
    c << provenance(o) << "quantity,value,error\n"
      << "pv_term," << fmt("%.12g", probe.pv_term) << ","
      << fmt("%.3g", probe.pv_error) << "\n"
      << "predicted," << fmt("%.12g", probe.predicted) << ","
      << fmt("%.3g", probe.predicted_error) << "\n"
      << "gap," << fmt("%.3g", gap) << "," << fmt("%.3g", gap_err) << "\n";
    write_output(o, c.str());
  } else {
    std::ostringstream h;
    h << "jacobi probe (m=" << o.m << ", n=" << o.n << ", s=" << o.s
      << ", alpha=" << fmt("%.6g", *o.alpha) << ", beta=" << fmt("%.6g", beta)
      << ")\n"
      << "  pv route   " << fmt("%+.8f", probe.pv_term) << " (+- "
      << fmt("%.1e", probe.pv_error) << ")\n"
      << "  predicted  " << fmt("%+.8f", probe.predicted) << " (+- "
      << fmt("%.1e", probe.predicted_error) << ")\n"
      << "  gap        " << fmt("%+.2e", gap) << "  vs combined "
      << fmt("%.2e", gap_err) << "\n";
    write_output(o, h.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_self_check(const Options& o) {
  struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Check> checks;
  auto run = [&](const std::string& name, auto&& body) {
    Check c;
    c.name = name;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    checks.push_back(std::move(c));
  };

  run("symmetric-aperture", [&](Check& c) {
    ApertureSolution sol = solve_alpha(5, 5, 0.3);
    c.pass = sol.params.alpha == 1.0 &&
             sol.method == SolveMethod::closed_form_symmetry;
    c.detail = "alpha(5,5,0.3) = " + fmt("%.12g", sol.params.alpha);
  });
  run("limit-aperture-anchor", [&](Check& c) {
    const double a = alpha0(2, 1).params.alpha;
    const double gap = std::abs(a - 1.0 / std::sqrt(3.0));
    c.pass = gap < 1e-8;
    c.detail = "alpha0(2,1) off closed form by " + fmt("%.2e", gap);
  });
  run("symmetric-curvature-zero", [&](Check& c) {
    IntegralResult h = mean_curvature_H(ConeParams<double>::make(3, 3, 0.3, 1.0), o.spec);
    c.pass = std::abs(h.value) <= 6 * h.error_estimate;
    c.detail = "H(3,3,0.3,1) = " + fmt("%.2e", h.value) + " vs 6err " +
               fmt("%.2e", 6 * h.error_estimate);
  });
  run("jacobi-two-route", [&](Check& c) {
    JacobiProbe p = jacobi_probe(ConeParams<double>::make(3, 3, 0.2, 1.0), 1.9, o.spec);
    const double gap = std::abs(p.pv_term - p.predicted);
    const double tol = 6 * (p.pv_error + p.predicted_error);
    c.pass = gap <= tol;
    c.detail = "gap " + fmt("%.2e", gap) + " vs " + fmt("%.2e", tol);
  });
  run("mc-curvature", [&](Check& c) {
    auto P = ConeParams<double>::make(4, 3, 0.3, 0.85);
    IntegralResult quad = mean_curvature_H(P, o.spec);
    McEstimate mc = mc_mean_curvature(P, o.samples, o.seed,
                                      McEstimator::halfspace_subtracted, -1, o.jobs);
    const double gap = std::abs(mc.mean - quad.value);
    const double tol = 6 * (mc.std_error + quad.error_estimate);
    c.pass = gap <= tol;
    c.detail = "gap " + fmt("%.2e", gap) + " vs " + fmt("%.2e", tol);
  });
  run("mc-surface", [&](Check& c) {
    auto P = ConeParams<double>::make(2, 2, 0.2, 1.0);
    const double a0r = a0_squared(P, true, o.spec).value;
    McEstimate mc = mc_surface_integral(P, McIntegrand::normal_alignment, 0,
                                        o.samples, o.seed, o.jobs);
    const double gap = std::abs(mc.mean - a0r);
    const double tol = 6 * mc.std_error;
    c.pass = gap <= tol;
    c.detail = "gap " + fmt("%.2e", gap) + " vs " + fmt("%.2e", tol);
  });

  bool all = true;
  for (const auto& c : checks) all = all && c.pass;

  if (o.format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& c : checks)
      arr.push_back(ordered_json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    emit_json(o, ordered_json{{"checks", arr}, {"passed", all}});
  } else if (o.format == "csv") {
    std::ostringstream c;
    c << provenance(o) << "name,pass,detail\n";
    for (const auto& ck : checks)
      c << ck.name << "," << (ck.pass ? "true" : "false") << "," << ck.detail
        << "\n";
    write_output(o, c.str());
  } else {
    std::ostringstream h;
    for (const auto& ck : checks)
      h << (ck.pass ? "PASS" : "FAIL") << "  " << ck.name << "  (" << ck.detail
        << ")\n";
    h << (all ? "self-check passed\n" : "self-check FAILED\n");
    write_output(o, h.str());
  }
  return all ? 0 : kExitInconsistency;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"nonlocal Lawson cone calculator"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* c) {
    c->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"json", "csv", "human"}));
    c->add_option("--out", o.out, "write output to PATH instead of stdout");
    c->add_option("--jobs", o.jobs, "worker threads for independent cells/batches")
        ->check(CLI::Range(1, 256));
  };
  auto add_mn = [&](CLI::App* c) {
    c->add_option("--m", o.m, "first factor dimension")->required()->check(CLI::Range(1, 64));
    c->add_option("--n", o.n, "second factor dimension")->required()->check(CLI::Range(1, 64));
  };

  CLI::App* alpha = app.add_subcommand("alpha", "aperture zeroing the curvature (s=0 routes to the limit aperture)");
  add_mn(alpha);
  alpha->add_option("--s", o.s, "fractional order")->required()->check(CLI::Range(0.0, 0.95));
  alpha->add_option("--tol", o.tol, "aperture tolerance (default 1e-5; 1e-10 at s=0)");
  add_common(alpha);

  CLI::App* alpha0c = app.add_subcommand("alpha0", "limit aperture at s = 0");
  add_mn(alpha0c);
  alpha0c->add_option("--tol", o.tol, "aperture tolerance (default 1e-10)");
  add_common(alpha0c);

  CLI::App* stab = app.add_subcommand("stability", "full stability report");
  add_mn(stab);
  stab->add_option("--s", o.s, "fractional order")->required()->check(CLI::Range(0.0, 0.95));
  stab->add_option("--alpha", o.alpha, "use this aperture instead of solving");
  stab->add_option("--tol", o.tol, "aperture tolerance when solving (default 1e-5)");
  stab->add_flag("--raw", o.raw, "report raw values in csv output");
  add_common(stab);

  CLI::App* t1 = app.add_subcommand("table1", "H and A0^2 over m in [2,7], n in [1,m] at s = 0");
  t1->add_flag("--raw", o.raw, "disable normalization");
  add_common(t1);

  CLI::App* scan = app.add_subcommand("scan", "stability rows over an s grid");
  add_mn(scan);
  scan->add_option("--s-from", o.s_from, "first s")->required()->check(CLI::Range(0.0, 0.95));
  scan->add_option("--s-to", o.s_to, "last s")->required()->check(CLI::Range(0.0, 0.95));
  scan->add_option("--steps", o.steps, "number of grid points")->required()->check(CLI::Range(1, 1000));
  scan->add_option("--tol", o.tol, "aperture tolerance per row (default 1e-4)");
  scan->add_flag("--bracket-threshold", o.bracket_threshold,
                 "bisect the margin sign change between adjacent rows");
  scan->add_flag("--raw", o.raw, "disable normalization");
  add_common(scan);

  CLI::App* mcc = app.add_subcommand("mc-check", "Monte Carlo curvature vs quadrature");
  add_mn(mcc);
  mcc->add_option("--s", o.s, "fractional order")->required()->check(CLI::Range(0.01, 0.95));
  mcc->add_option("--alpha", o.alpha, "aperture")->required();
  mcc->add_option("--samples", o.samples, "sample count (default 1e6)")->check(CLI::Range(10000LL, 1000000000LL));
  mcc->add_option("--seed", o.seed, "RNG seed (default 0)");
  add_common(mcc);

  CLI::App* jp = app.add_subcommand("jacobi-probe", "two-route check of the Hardy identity");
  add_mn(jp);
  jp->add_option("--s", o.s, "fractional order")->required()->check(CLI::Range(0.0, 0.95));
  jp->add_option("--alpha", o.alpha, "aperture")->required();
  jp->add_option("--beta", o.beta, "test exponent (default midpoint (N-2-s)/2)");
  jp->add_option("--tol", o.tol, "quadrature absolute tolerance override");
  add_common(jp);

  CLI::App* sc = app.add_subcommand("self-check", "internal consistency battery (exit 4 on failure)");
  sc->add_option("--samples", o.samples, "MC sample count (default 1e6)")->check(CLI::Range(10000LL, 1000000000LL));
  sc->add_option("--seed", o.seed, "RNG seed (default 0)");
  add_common(sc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidArgs;
  }

  try {
    o.spec = QuadSpec::outer();
    o.spec.abs_tol = env_double("NLCONE_QUAD_ABS_TOL", o.spec.abs_tol);
    o.spec.rel_tol = env_double("NLCONE_QUAD_REL_TOL", o.spec.rel_tol);
    if (o.tol && (app.got_subcommand(jp)))
      o.spec.abs_tol = *o.tol;  // flags win over environment

    if (app.got_subcommand(alpha)) return cmd_aperture(o, false);
    if (app.got_subcommand(alpha0c)) return cmd_aperture(o, true);
    if (app.got_subcommand(stab)) return cmd_stability(o);
    if (app.got_subcommand(t1)) return cmd_table1(o);
    if (app.got_subcommand(scan)) return cmd_scan(o);
    if (app.got_subcommand(mcc)) return cmd_mc_check(o);
    if (app.got_subcommand(jp)) return cmd_jacobi_probe(o);
    if (app.got_subcommand(sc)) return cmd_self_check(o);
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return kExitInvalidArgs;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const Inconsistency& e) {
    std::cerr << "inconsistency: " << e.what() << "\n";
    return kExitInconsistency;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  }
  return 0;
}
