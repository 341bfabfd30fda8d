#pragma once

#include "cldiv/cldiv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace cldiv::cli {

using nlohmann::json;

inline json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

inline json vec(const Vector& v, const std::vector<std::string>& names) {
  json o = json::object();
  for (Index i = 0; i < v.size(); ++i) o[names[i]] = number(v[i]);
  return o;
}

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv("CLDIV_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Usage, "CLDIV_SEED is not an unsigned integer");
    }
  }
  return 20240531ULL;
}

// "rho=0.2,mu1=0" style assignments, possibly spread over several flags.
inline std::vector<std::pair<Index, double>> parse_assignments(const std::vector<std::string>& items,
                                                               const std::vector<std::string>& names) {
  std::vector<std::pair<Index, double>> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      auto eq = part.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::Usage, "expected name=value, got '" + part + "'");
      std::string key = part.substr(0, eq);
      auto it = std::find(names.begin(), names.end(), key);
      if (it == names.end()) throw Error(ErrorCode::Usage, "unknown parameter '" + key + "'");
      Index idx = static_cast<Index>(it - names.begin());
      for (const auto& p : out)
        if (p.first == idx) throw Error(ErrorCode::Usage, "parameter '" + key + "' given twice");
      out.emplace_back(idx, parse_number(part.substr(eq + 1)));
    }
  }
  return out;
}

inline Normal4Variability parse_variability(const std::string& s) {
  if (s == "exact") return Normal4Variability::Exact;
  if (s == "published") return Normal4Variability::Published;
  throw Error(ErrorCode::Usage, "variability must be exact or published");
}

struct TestArgs {
  std::string model = "normal4";
  std::vector<std::string> null;
  std::string stat = "cr:0";
  double alpha = 0.05;
  std::string data;
  bool header = false;
  Index sim_n = 0;
  std::vector<std::string> truth;
  std::uint64_t seed = 0;
  std::string variability = "exact";
  std::string out;
};

inline int cmd_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
  ModelOptions mo;
  mo.variability = parse_variability(a.variability);
  auto model = make_model(a.model, mo);
  auto names = model->param_names();
  const Index p = model->param_dim();

  if (a.data.empty() == (a.sim_n == 0)) throw Error(ErrorCode::Usage, "give exactly one of --data or --simulate-n");
  Sample s;
  if (!a.data.empty()) {
    s = read_sample(a.data, model->obs_dim(), a.header);
  } else {
    Vector truth = Vector::Zero(p);
    for (auto [i, v] : parse_assignments(a.truth, names)) truth[i] = v;
    s = model->sample(truth, a.sim_n, a.seed);
  }

  auto fixed = parse_assignments(a.null, names);
  if (fixed.empty()) throw Error(ErrorCode::Usage, "--null needs at least one name=value");
  bool simple = static_cast<Index>(fixed.size()) == p;
  std::vector<Index> idx;
  std::vector<double> vals;
  for (auto [i, v] : fixed) {
    idx.push_back(i);
    vals.push_back(v);
  }

  TestOptions opt;
  opt.alpha = a.alpha;
  opt.divergence.seed = a.seed;
  StatSpec st = parse_stat(a.stat);
  TestOutcome res;
  NullHypothesis null;
  if (simple) {
    Vector t0(p);
    for (std::size_t k = 0; k < idx.size(); ++k) t0[idx[k]] = vals[k];
    null = t0;
  } else {
    null = fix_coordinates(p, idx, vals);
  }
  switch (st.kind) {
    case StatSpec::Kind::Clrt:
      if (simple) throw Error(ErrorCode::Usage, "clrt needs a composite null (leave some parameters free)");
      res = clrt(*model, s, std::get<ConstraintSpec>(null), opt);
      break;
    case StatSpec::Kind::CressieRead:
      res = hphi_test(*model, s, null, HFunction::identity(), PhiFamily::cressie_read(st.param), opt);
      break;
    case StatSpec::Kind::Renyi:
      if (st.param == 1.0 || st.param == 0.0)
        res = hphi_test(*model, s, null, HFunction::identity(), PhiFamily::cressie_read(st.param - 1.0), opt);
      else
        res = hphi_test(*model, s, null, HFunction::renyi(st.param), PhiFamily::cressie_read(st.param - 1.0), opt);
      break;
  }
  res.label = st.name();

  json j;
  j["model"] = model->name();
  j["statistic_name"] = res.label;
  j["null"] = simple ? "simple" : "composite";
  j["n"] = s.size();
  j["alpha"] = a.alpha;
  j["variability"] = a.variability;
  j["estimates"] = {{"theta_hat", vec(res.theta_hat, names)}, {"theta_tilde", vec(res.theta_tilde, names)}};
  j["statistic"] = number(res.statistic);
  std::vector<double> ev(res.spectrum.eigenvalues.data(), res.spectrum.eigenvalues.data() + res.spectrum.eigenvalues.size());
  j["spectrum"] = {{"eigenvalues", ev}, {"k", res.spectrum.k}};
  j["critical_value"] = number(res.critical_value);
  j["p_value"] = res.p_value;
  if (res.adjusted) {
    const auto& ad = *res.adjusted;
    j["adjusted"] = {{"t1", number(ad.t1)}, {"t2", number(ad.t2)}, {"t3", number(ad.t3)}, {"t4", number(ad.t4)},
                     {"nu", ad.nu},         {"a", ad.a},           {"b", ad.b},           {"dof3", ad.dof3},
                     {"r", ad.r},           {"p1", ad.p1},         {"p2", ad.p2},         {"p3", ad.p3},
                     {"p4", ad.p4}};
  }
  j["decision"] = res.reject ? "reject" : "accept";
  if (res.domain_violation) j["domain_violation"] = true;
  if (res.statistic == kInf) j["note"] = "infinite statistic: outside the divergence's admissibility band, p_value set to 0";

  std::string text = j.dump(2);
  if (a.out.empty()) {
    out << text << '\n';
  } else {
    std::ofstream f(a.out);
    if (!f) throw Error(ErrorCode::InvalidData, "cannot write " + a.out);
    f << text << '\n';
  }
  (void)err;
  return res.reject && res.statistic == kInf ? 2 : 0;
}

struct SimulateArgs {
  int table = 0;
  Index reps = 10000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out;
  std::string critical = "fixed";
  std::string variability = "exact";
  std::vector<std::string> stats;
  Index n = 0;
  double rho0 = 0.0;
  double rho = kInf;
  double alpha = 0.05;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  TableOptions o;
  o.reps = a.reps;
  o.seed = a.seed;
  o.workers = a.workers;
  o.alpha = a.alpha;
  o.variability = parse_variability(a.variability);
  if (a.critical == "fixed") o.critical = CriticalMode::FixedChiSq1;
  else if (a.critical == "spectrum") o.critical = CriticalMode::AsymptoticSpectrum;
  else throw Error(ErrorCode::Usage, "critical must be fixed or spectrum");

  SimTable t;
  if (a.table != 0) {
    t = run_table(a.table, o);
  } else {
    if (a.n < 2 || a.stats.empty()) throw Error(ErrorCode::Usage, "give --table, or --n, --rho0 and --stat for one cell");
    SimConfig cfg;
    for (const auto& s : a.stats) cfg.statistics.push_back(parse_stat(s));
    cfg.rho0 = a.rho0;
    cfg.rho_true = std::isfinite(a.rho) ? a.rho : a.rho0;
    cfg.n = a.n;
    cfg.reps = a.reps;
    cfg.alpha = a.alpha;
    cfg.seed = cell_seed(a.seed, a.n, cfg.rho0, cfg.rho_true);
    cfg.critical = o.critical;
    cfg.variability = o.variability;
    cfg.workers = a.workers;
    auto cell = estimate_rate(cfg);
    bool level = cfg.rho_true == cfg.rho0;
    for (const auto& r : cell.rates)
      t.rows.push_back({r.stat, cfg.n, cfg.rho0, cfg.rho_true, r.rate, r.se,
                        level ? std::optional<bool>(r.rate > 0.0 && r.rate < 1.0 && dale_screen(r.rate, a.alpha)) : std::nullopt, std::nullopt});
  }

  if (a.out.empty()) {
    write_csv(out, t);
  } else {
    std::ofstream f(a.out);
    if (!f) throw Error(ErrorCode::InvalidData, "cannot write " + a.out);
    write_csv(f, t);
  }
  std::size_t screened = 0, failed = 0;
  double max_se = 0.0;
  for (const auto& r : t.rows) {
    max_se = std::max(max_se, r.se);
    if (r.dale_pass) {
      ++screened;
      if (!*r.dale_pass) ++failed;
    }
  }
  err << "rows: " << t.rows.size() << ", reps per cell: " << a.reps << ", largest SE: " << format_g6(max_se);
  if (screened) err << ", outside Dale band: " << failed << " of " << screened;
  err << '\n';
  return 0;
}

struct PlanArgs {
  double divergence = kInf;
  double sigma2 = kInf;
  double critical = kInf;
  double power = kInf;
  double n = kInf;
  double phi2 = 1.0;
};

inline int cmd_plan(const PlanArgs& a, std::ostream& out, std::ostream&) {
  if (!std::isfinite(a.divergence) || !std::isfinite(a.sigma2) || !std::isfinite(a.critical))
    throw Error(ErrorCode::Usage, "plan needs --divergence, --sigma2 and --critical");
  if (std::isfinite(a.power) == std::isfinite(a.n)) throw Error(ErrorCode::Usage, "give exactly one of --power or --n");
  if (!(a.divergence > 0.0))
    throw Error(ErrorCode::DegenerateAlternative, "the divergence at the alternative must be positive");
  json j;
  j["divergence"] = a.divergence;
  j["sigma2"] = a.sigma2;
  j["critical"] = a.critical;
  if (std::isfinite(a.power)) {
    long long n = sample_size(a.divergence, a.sigma2, a.critical, a.power);
    j["target_power"] = a.power;
    j["n"] = n;
    out << j.dump(2) << '\n' << "n = " << n << '\n';
  } else {
    double pw = power_approx_composite(a.divergence, a.sigma2, a.n, a.critical, a.phi2);
    j["n"] = a.n;
    j["power"] = pw;
    out << j.dump(2) << '\n';
  }
  return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Composite likelihood divergence tests"};
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "test a null hypothesis on data");
  test->add_option("--model", ta.model, "model name")->capture_default_str();
  test->add_option("--null", ta.null, "fixed parameters, e.g. rho=0.2")->required();
  test->add_option("--stat", ta.stat, "cr:<lambda>, renyi:<r> or clrt")->capture_default_str();
  test->add_option("--alpha", ta.alpha, "significance level")->capture_default_str();
  test->add_option("--data", ta.data, "CSV file, one observation per row");
  test->add_flag("--header", ta.header, "skip the first line of the CSV");
  test->add_option("--simulate-n", ta.sim_n, "draw this many observations instead of reading data");
  test->add_option("--truth", ta.truth, "parameters for --simulate-n");
  test->add_option("--seed", ta.seed, "seed (default from CLDIV_SEED)");
  test->add_option("--variability", ta.variability, "exact or published J for normal4")->capture_default_str();
  test->add_option("--out", ta.out, "write the JSON report here");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo level and power tables");
  sim->add_option("--table", sa.table, "table 1-4");
  sim->add_option("--reps", sa.reps, "replications per cell")->capture_default_str();
  sim->add_option("--seed", sa.seed, "seed (default from CLDIV_SEED)");
  sim->add_option("--workers", sa.workers, "threads")->capture_default_str();
  sim->add_option("--out", sa.out, "CSV output path");
  sim->add_option("--critical", sa.critical, "fixed (chi2_1) or spectrum")->capture_default_str();
  sim->add_option("--variability", sa.variability, "exact or published J")->capture_default_str();
  sim->add_option("--stat", sa.stats, "statistics for a single cell");
  sim->add_option("--n", sa.n, "sample size for a single cell");
  sim->add_option("--rho0", sa.rho0, "null rho for a single cell");
  sim->add_option("--rho", sa.rho, "true rho for a single cell (default rho0)");
  sim->add_option("--alpha", sa.alpha, "nominal level")->capture_default_str();

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "approximate power or required sample size");
  plan->add_option("--divergence", pa.divergence, "divergence at the alternative");
  plan->add_option("--sigma2", pa.sigma2, "asymptotic variance");
  plan->add_option("--critical", pa.critical, "critical value");
  plan->add_option("--power", pa.power, "target power");
  plan->add_option("--n", pa.n, "sample size for a power approximation");
  plan->add_option("--phi2", pa.phi2, "phi''(1)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (test->parsed()) {
      if (test->count("--seed") == 0) ta.seed = default_seed();
      return cmd_test(ta, out, err);
    }
    if (sim->parsed()) {
      if (sim->count("--seed") == 0) sa.seed = default_seed();
      return cmd_simulate(sa, out, err);
    }
    if (plan->parsed()) return cmd_plan(pa, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace cldiv::cli
