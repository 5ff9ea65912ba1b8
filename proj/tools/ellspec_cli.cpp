// Copyright 2026 The ellspec Authors
// SPDX-License-Identifier: Apache-2.0

// ellspec command-line tool. Every run writes its outputs plus manifest.json
// (resolved parameters, seed, version) into --out-dir; `replay` re-runs a
// manifest and reproduces the outputs byte for byte.
//
// Exit codes: 0 success, 1 numerical failure, 2 input error, 3 internal error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ellspec/acceptance.hpp"
#include "ellspec/bessel.hpp"
#include "ellspec/dyson.hpp"
#include "ellspec/ensemble.hpp"
#include "ellspec/geometry.hpp"
#include "ellspec/io.hpp"
#include "ellspec/kernel.hpp"
#include "ellspec/montecarlo.hpp"
#include "ellspec/quadrature.hpp"

namespace fs = std::filesystem;
using namespace ellspec;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int threads = 0;
};

struct RunOutcome {
  std::vector<std::string> outputs;
  int exit_code = 0;
};

using Runner = std::function<RunOutcome(const Json&, const Globals&)>;

// ---------------------------------------------------------------------------
// Parameter helpers.

cplx parse_complex(const std::string& s) {
  const auto comma = s.find(',');
  try {
    std::size_t used = 0;
    if (comma == std::string::npos) {
      const double re = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return re;
    }
    const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
    const double re = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(s);
    const double im = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(s);
    return {re, im};
  } catch (const std::exception&) {
    throw InputError("expected RE or RE,IM, got '" + s + "'");
  }
}

Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_param(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw InputError("malformed complex parameter");
}

const Json& require(const Json& params, const char* key) {
  if (!params.contains(key)) throw InputError(std::string("missing parameter '") + key + "'");
  return params[key];
}

// Profile from an embedded document or from (rho, n).
CorrelationProfile profile_param(const Json& params) {
  if (params.contains("profile")) return profile_from_json(params["profile"]);
  const int n = require(params, "n").get<int>();
  if (n < 1) throw InputError("--n must be positive");
  return constant_profiles(n, complex_param(require(params, "rho")));
}

std::vector<double> time_grid(const Json& params) {
  const double tmin = require(params, "tmin").get<double>(), tmax = require(params, "tmax").get<double>();
  const int steps = require(params, "tsteps").get<int>();
  if (!(tmin >= 0.0) || !(tmax >= tmin) || steps < 1) throw InputError("need 0 <= tmin <= tmax and tsteps >= 1");
  std::vector<double> ts;
  for (int k = 0; k < steps; ++k) ts.push_back(steps == 1 ? tmin : tmin + (tmax - tmin) * k / (steps - 1));
  return ts;
}

std::string out_path(const Globals& g, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? name : (fs::path(g.out_dir) / p).string();
}

double coupling_for_profile(const Json& params, const CorrelationProfile& p) {
  const Json& g = require(params, "g");
  if (g.is_string() && g.get<std::string>() == "critical") {
    cplx rho;
    if (is_constant_profile(p, &rho)) return critical_g(rho);
    return 1.0 / find_zeta_star(p);
  }
  const double v = g.get<double>();
  if (!(v > 0.0)) throw InputError("--g must be positive");
  return v;
}

// ---------------------------------------------------------------------------
// Subcommands. Each takes resolved parameters and writes its outputs.

RunOutcome run_sample(const Json& params, const Globals& g) {
  SampledMatrix x;
  if (params.contains("profile")) {
    x = sample_elliptic_type(profile_from_json(params["profile"]), g.seed);
  } else {
    EllipticParams ep;
    ep.n = require(params, "n").get<int>();
    ep.rho = complex_param(require(params, "rho"));
    ep.gaussian = params.value("distribution", "gaussian") == "gaussian";
    x = sample_elliptic(ep, g.seed);
  }
  const std::string out = require(params, "out").get<std::string>();
  save_elxm(out_path(g, out), x.x);
  std::cout << "sampled " << x.x.rows() << "x" << x.x.cols() << " " << x.profile_tag << " matrix -> " << out << "\n";
  return {{out}, 0};
}

RunOutcome run_validate(const Json& params, const Globals& g) {
  const CorrelationProfile p = profile_param(params);
  const ValidationReport r = validate_profile(p, params.value("power", 1));
  const Json j{{"n", p.n()},
               {"rho_hat", r.rho_hat},
               {"rho_bound", p.rho_bound},
               {"primitivity_power", r.primitivity_power},
               {"c0_s", r.c0_s},
               {"c0_ss", r.c0_ss},
               {"nonneg_s", r.nonneg_s},
               {"symmetric_t", r.symmetric_t},
               {"nonneg_t", r.nonneg_t},
               {"pass_non_hermitian", r.pass_non_hermitian},
               {"within_rho_bound", r.within_rho_bound},
               {"pass_primitivity", r.pass_primitivity},
               {"holder_checked", r.holder_checked},
               {"ok", r.ok()}};
  const std::string out = require(params, "out").get<std::string>();
  write_text_file(out_path(g, out), j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return {{out}, r.ok() ? 0 : 2};
}

RunOutcome run_dyson(const Json& params, const Globals& g) {
  const CorrelationProfile p = profile_param(params);
  Json arr = Json::array();
  for (const Json& z : require(params, "zeta")) {
    const PseudoResolvent pr = solve_b(complex_param(z), p);
    arr.push_back(pseudo_resolvent_to_json(pr));
    std::cout << "zeta = " << pr.zeta << ": delta = " << pr.delta << ", residual = " << pr.residual
              << ", <b> = " << avg(pr.b) << "\n";
  }
  const std::string out = require(params, "out").get<std::string>();
  write_text_file(out_path(g, out), (arr.size() == 1 ? arr[0] : arr).dump(2) + "\n");
  return {{out}, 0};
}

RunOutcome run_pseudospectrum(const Json& params, const Globals& g) {
  const CorrelationProfile p = profile_param(params);
  const double level = params.value("level", 0.01);
  const int res = params.value("resolution", 129);
  const SpectralDomain d = trace_level_set(p, level, res, g.threads);
  const std::string out = require(params, "out").get<std::string>();
  const std::string raster_out = require(params, "raster_out").get<std::string>();
  CsvWriter bc({"re", "im"});
  for (const auto& loop : d.components) {
    for (cplx z : loop) bc.row({z.real(), z.imag()});
  }
  bc.save(out_path(g, out));
  // Same grid as the traced level set.
  double extent;
  if (std::isfinite(d.zeta_star)) {
    extent = d.zeta_star + 1.0;
  } else {
    extent = std::sqrt(spectral_radius_nonneg(p.s, 1e-10)) * (1.0 + validate_profile(p, 1).rho_hat) + 1.0;
  }
  const DeltaRaster r = raster_delta(p, extent, res, g.threads);
  CsvWriter rc({"re", "im", "delta"});
  for (std::size_t j = 0; j < r.ys.size(); ++j)
    for (std::size_t i = 0; i < r.xs.size(); ++i)
      rc.row({r.xs[i], r.ys[j], r.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  rc.save(out_path(g, raster_out));
  std::cout << "level " << level << ": " << d.components.size() << " component(s), " << d.boundary.size()
            << " boundary points";
  if (std::isfinite(d.zeta_star)) std::cout << ", zeta* = " << d.zeta_star;
  std::cout << ", failed cells " << d.failed_cells << "\n";
  return {{out, raster_out}, 0};
}

RunOutcome run_kernel(const Json& params, const Globals& g) {
  const CorrelationProfile p = profile_param(params);
  const Json& z1 = require(params, "zeta1");
  const Json& z2 = require(params, "zeta2");
  if (z1.size() != z2.size()) throw InputError("--zeta1 and --zeta2 must be given the same number of times");
  CsvWriter csv({"re1", "im1", "re2", "im2", "reK", "imK", "min_sing"});
  for (std::size_t k = 0; k < z1.size(); ++k) {
    const KernelEval e = kernel_general(complex_param(z1[k]), complex_param(z2[k]), p);
    csv.row({e.zeta1.real(), e.zeta1.imag(), e.zeta2.real(), e.zeta2.imag(), e.value.real(), e.value.imag(), e.min_sing});
  }
  const std::string out = require(params, "out").get<std::string>();
  csv.save(out_path(g, out));
  std::cout << "evaluated K at " << z1.size() << " pair(s) -> " << out << "\n";
  return {{out}, 0};
}

RunOutcome run_decay(const Json& params, const Globals& g) {
  const CorrelationProfile p = profile_param(params);
  const double coupling = coupling_for_profile(params, p);
  DecayConfig cfg;
  cfg.threads = g.threads;
  cfg.epsilon = params.value("epsilon", 0.05);
  const DecayCurve dc = decay_curve(p, coupling, time_grid(params), cfg);
  CsvWriter csv({"t", "deterministic", "quad_err", "asymptotic"});
  for (std::size_t j = 0; j < dc.times.size(); ++j)
    csv.row({dc.times[j], dc.deterministic[j], dc.quad_err[j], dc.asymptotic[j]});
  const std::string out = require(params, "out").get<std::string>();
  csv.save(out_path(g, out));
  std::cout << "g = " << coupling << ", zeta* = " << dc.zeta_star << ", A = " << dc.a_coeff << ", contour "
            << dc.contour_kind << ", " << dc.nodes_used << " nodes" << (dc.converged ? "" : " (not converged)") << "\n";
  for (const auto& w : dc.warnings) std::cerr << "warning: " << w << "\n";
  return {{out}, dc.converged ? 0 : 1};
}

RunOutcome run_elliptic_decay(const Json& params, const Globals& g) {
  const cplx rho = complex_param(require(params, "rho"));
  const Json& gj = require(params, "g");
  const double coupling = gj.is_string() ? critical_g(rho) : gj.get<double>();
  CsvWriter csv({"t", "series", "asymptotic", "neg_tail_bound"});
  for (double t : time_grid(params)) {
    const BesselSeriesResult s = decay_series(rho, coupling, t);
    const double asym = t > 0.0 ? decay_asymptotic(rho, coupling, t) : std::numeric_limits<double>::quiet_NaN();
    const double tail = t > 0.0 ? std::exp(-2.0 * t) * negative_tail_bound(rho, coupling, t)
                                : std::numeric_limits<double>::quiet_NaN();
    csv.row({t, s.value, asym, tail});
  }
  const std::string out = require(params, "out").get<std::string>();
  csv.save(out_path(g, out));
  std::cout << "rho = " << rho << ", g = " << coupling << " -> " << out << "\n";
  return {{out}, 0};
}

RunOutcome run_montecarlo(const Json& params, const Globals& g) {
  McStudy st;
  if (params.contains("profile")) {
    st.profile = profile_from_json(params["profile"]);
    st.n = static_cast<int>(st.profile->n());
    st.g = coupling_for_profile(params, *st.profile);
  } else {
    const cplx rho = complex_param(require(params, "rho"));
    st.n = require(params, "n").get<int>();
    st.elliptic = EllipticParams{st.n, rho, params.value("distribution", "gaussian") == "gaussian"};
    const Json& gj = require(params, "g");
    st.g = gj.is_string() ? critical_g(rho) : gj.get<double>();
  }
  st.times = time_grid(params);
  st.replicas = require(params, "replicas").get<int>();
  st.base_seed = g.seed;
  st.threads = g.threads;
  st.keep_spectra = params.contains("spectrum_out");
  const McResult r = run_study(st);
  CsvWriter csv({"t", "mc_mean", "mc_stderr", "reference", "z"});
  for (std::size_t j = 0; j < r.times.size(); ++j) csv.row({r.times[j], r.mean[j], r.stderr_[j], r.reference[j], r.z[j]});
  const std::string out = require(params, "out").get<std::string>();
  csv.save(out_path(g, out));
  RunOutcome oc{{out}, 0};
  if (st.keep_spectra) {
    CsvWriter sc({"replica", "re", "im"});
    for (std::size_t k = 0; k < r.spectra.size(); ++k)
      for (cplx z : r.spectra[k]) sc.row({static_cast<double>(k), z.real(), z.imag()});
    const std::string so = params["spectrum_out"].get<std::string>();
    sc.save(out_path(g, so));
    oc.outputs.push_back(so);
  }
  std::cout << "N = " << st.n << ", " << st.replicas << " replicas, g = " << st.g << ", reference " << r.reference_kind
            << ", Parlett fallbacks " << r.parlett_fallbacks << "\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return oc;
}

RunOutcome run_verify(const Json& params, const Globals& g) {
  AcceptanceOptions opt;
  const std::string tier = params.value("tier", "quick");
  if (tier != "quick" && tier != "full") throw InputError("--tier must be quick or full");
  opt.tier = tier == "full" ? Tier::Full : Tier::Quick;
  opt.threads = g.threads;
  if (params.contains("acceptance_seed")) opt.seed = params["acceptance_seed"].get<std::uint64_t>();
  CsvWriter csv({"criterion", "passed"});
  std::optional<CriterionResult> first_fail;
  run_acceptance(opt, [&](const CriterionResult& r) {
    std::cout << format_result(r) << std::endl;
    csv.row({static_cast<double>(r.id), r.passed ? 1.0 : 0.0});
    if (!r.passed && !first_fail) first_fail = r;
  });
  const std::string out = require(params, "out").get<std::string>();
  csv.save(out_path(g, out));
  if (first_fail) {
    std::cout << "first failing criterion: " << first_fail->id << " " << first_fail->name << "\n";
    return {{out}, 1};
  }
  std::cout << "all criteria passed\n";
  return {{out}, 0};
}

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> m{
      {"sample", run_sample},         {"validate", run_validate},
      {"dyson", run_dyson},           {"pseudospectrum", run_pseudospectrum},
      {"kernel", run_kernel},         {"decay", run_decay},
      {"elliptic-decay", run_elliptic_decay}, {"montecarlo", run_montecarlo},
      {"verify", run_verify}};
  return m;
}

int execute(const std::string& sub, const Json& params, const Globals& g) {
  fs::create_directories(g.out_dir);
  const RunOutcome oc = runners().at(sub)(params, g);
  write_text_file((fs::path(g.out_dir) / "manifest.json").string(),
                  make_manifest(sub, params, g.seed, oc.outputs).dump(2) + "\n");
  return oc.exit_code;
}

// ---------------------------------------------------------------------------
// Flag wiring.

struct ProfileFlags {
  std::string profile, rho;
  int n = 0;
};

void add_profile_flags(CLI::App* c, ProfileFlags& f, bool need_n_for_rho = true) {
  auto* pf = c->add_option("--profile", f.profile, "Profile JSON file");
  auto* rf = c->add_option("--rho", f.rho, "Constant-profile correlation RE[,IM]");
  pf->excludes(rf);
  if (need_n_for_rho) c->add_option("--n", f.n, "Matrix size for --rho");
}

void put_profile(Json& params, const ProfileFlags& f) {
  if (!f.profile.empty()) {
    params["profile"] = profile_to_json(load_profile(f.profile));
    return;
  }
  if (f.rho.empty()) throw InputError("one of --profile or --rho is required");
  params["rho"] = complex_json(parse_complex(f.rho));
  if (f.n < 1) throw InputError("--n must be given and positive with --rho");
  params["n"] = f.n;
}

struct GridFlags {
  double tmin = 0.0, tmax = 10.0;
  int tsteps = 21;
  double g = 0.0;
  bool critical = false;
};

void add_grid_flags(CLI::App* c, GridFlags& f) {
  auto* go = c->add_option("--g", f.g, "Coupling g");
  auto* co = c->add_flag("--critical", f.critical, "Use the critical coupling g = 1/zeta*");
  go->excludes(co);
  c->add_option("--tmin", f.tmin, "First time")->capture_default_str();
  c->add_option("--tmax", f.tmax, "Last time")->capture_default_str();
  c->add_option("--tsteps", f.tsteps, "Number of equally spaced times")->capture_default_str();
}

void put_grid(Json& params, const GridFlags& f) {
  if (f.critical) {
    params["g"] = "critical";
  } else {
    if (!(f.g > 0.0)) throw InputError("one of --g (positive) or --critical is required");
    params["g"] = f.g;
  }
  params["tmin"] = f.tmin;
  params["tmax"] = f.tmax;
  params["tsteps"] = f.tsteps;
}

int classify(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const InputError& x) {
    std::cerr << "input error: " << x.what() << "\n";
    return 2;
  } catch (const NumericalError& x) {
    std::cerr << "numerical failure: " << x.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& x) {
    std::cerr << "input error: " << x.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& x) {
    std::cerr << "input error: " << x.what() << "\n";
    return 2;
  } catch (const std::exception& x) {
    std::cerr << "internal error: " << x.what() << "\n";
    return 3;
  } catch (...) {
    std::cerr << "internal error\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ellspec: spectral theory of elliptic-type random matrices"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = logical cores)")->capture_default_str();
  app.set_version_flag("--version", kVersion);

  // sample
  ProfileFlags sample_p;
  std::string sample_out = "sample.elxm", sample_dist = "gaussian";
  auto* sample = app.add_subcommand("sample", "Draw a matrix and write it as ELXM binary");
  add_profile_flags(sample, sample_p);
  sample->add_option("--distribution", sample_dist, "gaussian | bernoulli (elliptic only)")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));
  sample->add_option("--out", sample_out)->capture_default_str();

  // validate
  ProfileFlags val_p;
  int val_power = 1;
  std::string val_out = "validation.json";
  auto* validate = app.add_subcommand("validate", "Check profile assumptions");
  add_profile_flags(validate, val_p);
  validate->add_option("--power", val_power, "Primitivity power L")->capture_default_str();
  validate->add_option("--out", val_out)->capture_default_str();

  // dyson
  ProfileFlags dy_p;
  std::vector<std::string> dy_z;
  std::string dy_out = "dyson.json";
  auto* dyson = app.add_subcommand("dyson", "Solve the Dyson equation for b(zeta)");
  add_profile_flags(dyson, dy_p);
  dyson->add_option("--zeta", dy_z, "Spectral parameter RE,IM (repeatable)")->required();
  dyson->add_option("--out", dy_out)->capture_default_str();

  // pseudospectrum
  ProfileFlags ps_p;
  double ps_level = 0.01;
  int ps_res = 129;
  std::string ps_out = "boundary.csv", ps_raster = "raster.csv";
  auto* pseudo = app.add_subcommand("pseudospectrum", "Trace a level set of the stability gap");
  add_profile_flags(pseudo, ps_p);
  pseudo->add_option("--level", ps_level)->capture_default_str();
  pseudo->add_option("--resolution", ps_res)->capture_default_str();
  pseudo->add_option("--out", ps_out)->capture_default_str();
  pseudo->add_option("--raster-out", ps_raster)->capture_default_str();

  // kernel
  ProfileFlags k_p;
  std::vector<std::string> k_z1, k_z2;
  std::string k_out = "kernel.csv";
  auto* kernel = app.add_subcommand("kernel", "Evaluate K(zeta1, zeta2)");
  add_profile_flags(kernel, k_p);
  kernel->add_option("--zeta1", k_z1, "RE,IM (repeatable)")->required();
  kernel->add_option("--zeta2", k_z2, "RE,IM (repeatable)")->required();
  kernel->add_option("--out", k_out)->capture_default_str();

  // decay
  ProfileFlags d_p;
  GridFlags d_g;
  double d_eps = 0.05;
  std::string d_out = "decay.csv";
  auto* decay = app.add_subcommand("decay", "Deterministic decay curve by contour quadrature");
  add_profile_flags(decay, d_p);
  add_grid_flags(decay, d_g);
  decay->add_option("--epsilon", d_eps, "Contour dilation")->capture_default_str();
  decay->add_option("--out", d_out)->capture_default_str();

  // elliptic-decay
  std::string ed_rho;
  GridFlags ed_g;
  std::string ed_out = "elliptic_decay.csv";
  auto* edecay = app.add_subcommand("elliptic-decay", "Bessel-series decay for the elliptic ensemble");
  edecay->add_option("--rho", ed_rho, "RE[,IM]")->required();
  add_grid_flags(edecay, ed_g);
  edecay->add_option("--out", ed_out)->capture_default_str();

  // montecarlo
  ProfileFlags mc_p;
  GridFlags mc_g;
  int mc_reps = 20;
  std::string mc_out = "montecarlo.csv", mc_spec, mc_dist = "gaussian";
  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo estimate of the decay curve");
  add_profile_flags(mc, mc_p);
  add_grid_flags(mc, mc_g);
  mc->add_option("--replicas", mc_reps)->capture_default_str();
  mc->add_option("--distribution", mc_dist, "gaussian | bernoulli (elliptic only)")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));
  mc->add_option("--out", mc_out)->capture_default_str();
  mc->add_option("--spectrum-out", mc_spec, "Optional eigenvalue CSV");

  // verify
  std::string v_tier = "quick", v_out = "verify.csv";
  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
  verify->add_option("--tier", v_tier)->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
  verify->add_option("--out", v_out)->capture_default_str();

  // replay
  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run a manifest.json");
  replay->add_option("manifest", manifest_path, "Manifest file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Json params = Json::object();
    std::string sub;
    if (*sample) {
      sub = "sample";
      put_profile(params, sample_p);
      params["distribution"] = sample_dist;
      params["out"] = sample_out;
    } else if (*validate) {
      sub = "validate";
      put_profile(params, val_p);
      params["power"] = val_power;
      params["out"] = val_out;
    } else if (*dyson) {
      sub = "dyson";
      put_profile(params, dy_p);
      params["zeta"] = Json::array();
      for (const auto& z : dy_z) params["zeta"].push_back(complex_json(parse_complex(z)));
      params["out"] = dy_out;
    } else if (*pseudo) {
      sub = "pseudospectrum";
      put_profile(params, ps_p);
      params["level"] = ps_level;
      params["resolution"] = ps_res;
      params["out"] = ps_out;
      params["raster_out"] = ps_raster;
    } else if (*kernel) {
      sub = "kernel";
      put_profile(params, k_p);
      params["zeta1"] = Json::array();
      params["zeta2"] = Json::array();
      for (const auto& z : k_z1) params["zeta1"].push_back(complex_json(parse_complex(z)));
      for (const auto& z : k_z2) params["zeta2"].push_back(complex_json(parse_complex(z)));
      params["out"] = k_out;
    } else if (*decay) {
      sub = "decay";
      put_profile(params, d_p);
      put_grid(params, d_g);
      params["epsilon"] = d_eps;
      params["out"] = d_out;
    } else if (*edecay) {
      sub = "elliptic-decay";
      params["rho"] = complex_json(parse_complex(ed_rho));
      put_grid(params, ed_g);
      params["out"] = ed_out;
    } else if (*mc) {
      sub = "montecarlo";
      put_profile(params, mc_p);
      put_grid(params, mc_g);
      params["replicas"] = mc_reps;
      params["distribution"] = mc_dist;
      params["out"] = mc_out;
      if (!mc_spec.empty()) params["spectrum_out"] = mc_spec;
    } else if (*verify) {
      sub = "verify";
      params["tier"] = v_tier;
      params["out"] = v_out;
    } else if (*replay) {
      const Json m = parse_json_text(read_text_file(manifest_path), manifest_path);
      sub = require(m, "subcommand").get<std::string>();
      if (!runners().count(sub)) throw InputError("manifest names an unknown subcommand '" + sub + "'");
      params = require(m, "parameters");
      g.seed = require(m, "seed").get<std::uint64_t>();
    }
    return execute(sub, params, g);
  } catch (...) {
    return classify(std::current_exception());
  }
}
