#pragma once

#include "cldiv/asymptotics.hpp"
#include "cldiv/normal4.hpp"
#include "cldiv/rng.hpp"
#include "cldiv/weighted_chisq.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cstdio>
#include <ostream>
#include <thread>

namespace cldiv {

struct StatSpec {
  enum class Kind { CressieRead, Renyi, Clrt };
  Kind kind = Kind::Clrt;
  double param = 0.0;

  static StatSpec cressie_read(double lambda) { return {Kind::CressieRead, lambda}; }
  static StatSpec renyi(double r) { return {Kind::Renyi, r}; }
  static StatSpec clrt() { return {Kind::Clrt, 0.0}; }

  std::string family() const {
    switch (kind) {
      case Kind::CressieRead: return "cr";
      case Kind::Renyi: return "renyi";
      case Kind::Clrt: return "clrt";
    }
    return "";
  }
  std::string name() const {
    if (kind == Kind::Clrt) return "clrt";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s:%.6g", family().c_str(), param);
    return buf;
  }
};

// Accepts "a", "a/b" or decimal forms.
inline double parse_number(const std::string& s) {
  auto slash = s.find('/');
  try {
    std::size_t pos = 0;
    if (slash == std::string::npos) {
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    }
    std::string a = s.substr(0, slash), b = s.substr(slash + 1);
    std::size_t pa = 0, pb = 0;
    double num = std::stod(a, &pa), den = std::stod(b, &pb);
    if (pa != a.size() || pb != b.size() || den == 0.0) throw std::invalid_argument(s);
    return num / den;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Usage, "cannot parse number '" + s + "'");
  }
}

inline StatSpec parse_stat(const std::string& s) {
  if (s == "clrt") return StatSpec::clrt();
  auto colon = s.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Usage, "statistic must be cr:<lambda>, renyi:<r> or clrt");
  std::string fam = s.substr(0, colon);
  double v = parse_number(s.substr(colon + 1));
  if (fam == "cr") return StatSpec::cressie_read(v);
  if (fam == "renyi") return StatSpec::renyi(v);
  throw Error(ErrorCode::Usage, "unknown statistic family '" + fam + "'");
}

enum class CriticalMode { FixedChiSq1, AsymptoticSpectrum };

struct SimConfig {
  std::vector<StatSpec> statistics;
  double rho0 = 0.0;
  double rho_true = 0.0;
  Index n = 100;
  Index reps = 10000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  CriticalMode critical = CriticalMode::FixedChiSq1;
  Normal4Variability variability = Normal4Variability::Exact;
  unsigned workers = 1;
  double failure_budget = 0.001;
  std::optional<double> critical_value;  // overrides the critical mode when set
};

struct RateResult {
  StatSpec stat;
  double rate = 0.0;
  double se = 0.0;
  Index rejections = 0;
  double critical_value = 0.0;
};

struct CellResult {
  std::vector<RateResult> rates;
  Index reps_used = 0;
  Index failures = 0;
  Index roots_outside_sampling_range = 0;
};

namespace detail {

inline double sim_statistic(const StatSpec& st, const normal4::Moments& m, double rho0, double rho_hat) {
  switch (st.kind) {
    case StatSpec::Kind::CressieRead: return normal4::cressie_read_stat(m.n, rho0, rho_hat, st.param);
    case StatSpec::Kind::Renyi: return normal4::renyi_stat(m.n, rho0, rho_hat, st.param);
    case StatSpec::Kind::Clrt: return normal4::clrt_stat(m, rho0, rho_hat);
  }
  return 0.0;
}

template <class Rng>
normal4::Moments draw_moments(const Eigen::Matrix4d& l, Index n, Rng& rng) {
  std::normal_distribution<double> z;
  double s1[4] = {0, 0, 0, 0}, s2[4] = {0, 0, 0, 0}, s12 = 0.0, s34 = 0.0;
  Eigen::Vector4d zz;
  for (Index i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) zz[j] = z(rng);
    Eigen::Vector4d y = l * zz;
    for (int j = 0; j < 4; ++j) {
      s1[j] += y[j];
      s2[j] += y[j] * y[j];
    }
    s12 += y[0] * y[1];
    s34 += y[2] * y[3];
  }
  normal4::Moments m;
  double dn = static_cast<double>(n);
  m.n = dn;
  double mean[4];
  for (int j = 0; j < 4; ++j) {
    mean[j] = s1[j] / dn;
    m.v2[j] = s2[j] / dn - mean[j] * mean[j];
  }
  m.v12 = s12 / dn - mean[0] * mean[1];
  m.v34 = s34 / dn - mean[2] * mean[3];
  return m;
}

}  // namespace detail

inline double critical_value_for(const StatSpec&, const SimConfig& cfg) {
  if (cfg.critical_value) return *cfg.critical_value;
  if (cfg.critical == CriticalMode::FixedChiSq1)
    return boost::math::quantile(boost::math::chi_squared(1.0), 1.0 - cfg.alpha);
  // The plug-in spectrum at theta_tilde depends on rho0 only.
  Normal4Model model(cfg.variability);
  Vector t = Vector::Zero(5);
  t[4] = cfg.rho0;
  Matrix h = *model.sensitivity(t), j = *model.variability(t);
  Matrix g = Matrix::Zero(5, 1);
  g(4, 0) = 1.0;
  auto b = constrained_blocks(h, g);
  auto sp = composite_null_spectrum(*model.composite_information(t), g, b.Q, godambe(h, j));
  return weighted_chisq_quantile(sp.weights(), 1.0 - cfg.alpha);
}

// Rejection rates of each statistic over shared replications.
inline CellResult estimate_rate(const SimConfig& cfg) {
  if (cfg.statistics.empty()) throw Error(ErrorCode::InvalidParameter, "no statistics requested");
  if (cfg.reps < 1 || cfg.n < 2) throw Error(ErrorCode::InvalidParameter, "need reps >= 1 and n >= 2");
  normal4::check_rho(cfg.rho0);
  const Eigen::Matrix4d l = normal4::sampling_factor(cfg.rho_true);

  const std::size_t ns = cfg.statistics.size();
  std::vector<double> crit(ns);
  for (std::size_t k = 0; k < ns; ++k) crit[k] = critical_value_for(cfg.statistics[k], cfg);

  // 1 = reject, 0 = accept, per replication and statistic; -1 marks a failed replication.
  std::vector<signed char> outcome(static_cast<std::size_t>(cfg.reps) * ns, 0);
  std::vector<signed char> outside(static_cast<std::size_t>(cfg.reps), 0);
  auto work = [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      auto rng = substream(cfg.seed, static_cast<std::uint64_t>(i));
      auto m = detail::draw_moments(l, cfg.n, rng);
      signed char* row = &outcome[static_cast<std::size_t>(i) * ns];
      try {
        auto est = normal4::rho_hat(m);
        outside[i] = est.outside_sampling_range;
        for (std::size_t k = 0; k < ns; ++k)
          row[k] = detail::sim_statistic(cfg.statistics[k], m, cfg.rho0, est.rho) > crit[k] ? 1 : 0;
      } catch (const Error&) {
        for (std::size_t k = 0; k < ns; ++k) row[k] = -1;
      }
    }
  };
  unsigned workers = std::max(1u, cfg.workers);
  if (workers == 1) {
    work(0, cfg.reps);
  } else {
    std::vector<std::thread> pool;
    Index chunk = (cfg.reps + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      Index b = std::min<Index>(cfg.reps, w * chunk), e = std::min<Index>(cfg.reps, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }

  CellResult res;
  for (Index i = 0; i < cfg.reps; ++i) {
    if (outcome[static_cast<std::size_t>(i) * ns] < 0) ++res.failures;
    res.roots_outside_sampling_range += outside[i];
  }
  if (static_cast<double>(res.failures) > cfg.failure_budget * static_cast<double>(cfg.reps))
    throw Error(ErrorCode::NoConvergence, "too many failed replications");
  res.reps_used = cfg.reps - res.failures;
  for (std::size_t k = 0; k < ns; ++k) {
    RateResult r;
    r.stat = cfg.statistics[k];
    r.critical_value = crit[k];
    for (Index i = 0; i < cfg.reps; ++i)
      if (outcome[static_cast<std::size_t>(i) * ns + k] == 1) ++r.rejections;
    double nr = static_cast<double>(res.reps_used);
    r.rate = nr > 0 ? r.rejections / nr : 0.0;
    r.se = nr > 0 ? std::sqrt(r.rate * (1.0 - r.rate) / nr) : 0.0;
    res.rates.push_back(r);
  }
  return res;
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Logit-scale screen on an empirical level.
inline bool dale_screen(double rate, double alpha, double eps = 0.45) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1)");
  if (!(rate > 0.0 && rate < 1.0)) throw Error(ErrorCode::DegenerateRate, "rate must lie strictly inside (0, 1)");
  return std::abs(logit(1.0 - rate) - logit(1.0 - alpha)) <= eps;
}

// Excess power over the CLRT after subtracting each test's empirical level.
inline double relative_efficiency(double power, double level, double power_clrt, double level_clrt) {
  double base = power_clrt - level_clrt;
  if (!(base > 0.0)) throw Error(ErrorCode::DegenerateBaseline, "CLRT power does not exceed its level");
  return ((power - level) - base) / base;
}

struct SimRow {
  StatSpec stat;
  Index n = 0;
  double rho0 = 0.0;
  double rho_true = 0.0;
  double rate = 0.0;
  double se = 0.0;
  std::optional<bool> dale_pass;
  std::optional<double> rel_eff;
};

struct SimTable {
  int id = 0;
  std::vector<SimRow> rows;

  const SimRow* find(const std::string& stat, Index n, double rho0, double rho_true) const {
    for (const auto& r : rows)
      if (r.stat.name() == stat && r.n == n && std::abs(r.rho0 - rho0) < 1e-12 && std::abs(r.rho_true - rho_true) < 1e-12)
        return &r;
    return nullptr;
  }
};

struct TableOptions {
  Index reps = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double alpha = 0.05;
  CriticalMode critical = CriticalMode::FixedChiSq1;
  Normal4Variability variability = Normal4Variability::Exact;
};

inline std::vector<StatSpec> table_statistics() {
  return {StatSpec::clrt(), StatSpec::cressie_read(-1.0), StatSpec::cressie_read(-0.5), StatSpec::cressie_read(0.0),
          StatSpec::cressie_read(2.0 / 3.0), StatSpec::cressie_read(1.0), StatSpec::cressie_read(1.5)};
}

// Each cell gets its own stream, keyed by (n, rho0, rho) so a level cell is the
// same wherever it is computed.
inline std::uint64_t cell_seed(std::uint64_t seed, Index n, double rho0, double rho_true) {
  auto key = [](double x) { return static_cast<std::uint64_t>(std::llround((x + 10.0) * 1e6)); };
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(n));
  h = splitmix64(h ^ key(rho0));
  return splitmix64(h ^ (key(rho_true) << 1));
}

inline CellResult run_cell(const TableOptions& o, Index n, double rho0, double rho_true) {
  SimConfig cfg;
  cfg.statistics = table_statistics();
  cfg.rho0 = rho0;
  cfg.rho_true = rho_true;
  cfg.n = n;
  cfg.reps = o.reps;
  cfg.alpha = o.alpha;
  cfg.seed = cell_seed(o.seed, n, rho0, rho_true);
  cfg.critical = o.critical;
  cfg.variability = o.variability;
  cfg.workers = o.workers;
  return estimate_rate(cfg);
}

inline SimTable run_table(int id, const TableOptions& o = {}) {
  SimTable t;
  t.id = id;
  auto level_rows = [&](const std::vector<Index>& ns, const std::vector<double>& rho0s) {
    for (Index n : ns)
      for (double r0 : rho0s) {
        auto cell = run_cell(o, n, r0, r0);
        for (const auto& r : cell.rates)
          t.rows.push_back({r.stat, n, r0, r0, r.rate, r.se, r.rate > 0.0 && r.rate < 1.0 && dale_screen(r.rate, o.alpha),
                            std::nullopt});
      }
  };
  auto power_rows = [&](double r0, const std::vector<double>& rhos) {
    for (Index n : {100, 200, 300}) {
      auto level = run_cell(o, n, r0, r0);
      for (double rho : rhos) {
        auto cell = run_cell(o, n, r0, rho);
        const auto& lc = level.rates[0];
        const auto& pc = cell.rates[0];
        for (std::size_t k = 0; k < cell.rates.size(); ++k) {
          SimRow row{cell.rates[k].stat, n, r0, rho, cell.rates[k].rate, cell.rates[k].se, std::nullopt, std::nullopt};
          if (cell.rates[k].stat.kind != StatSpec::Kind::Clrt && pc.rate > lc.rate)
            row.rel_eff = relative_efficiency(cell.rates[k].rate, level.rates[k].rate, pc.rate, lc.rate);
          t.rows.push_back(row);
        }
      }
    }
  };
  switch (id) {
    case 1: level_rows({100, 200, 300}, {-0.1, 0.2}); break;
    case 2: level_rows({50, 100, 200, 300}, {0.0}); break;
    case 3: power_rows(-0.1, {-0.2, -0.15, 0.0, 0.1}); break;
    case 4: power_rows(0.2, {0.0, 0.15, 0.25, 0.3}); break;
    default: throw Error(ErrorCode::Usage, "table id must be 1, 2, 3 or 4");
  }
  return t;
}

inline std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const SimTable& t) {
  out << "statistic,lambda_or_r,n,rho0,rho_true,rate,se,dale_pass,rel_eff\n";
  for (const auto& r : t.rows) {
    out << r.stat.family() << ',' << (r.stat.kind == StatSpec::Kind::Clrt ? "" : format_g6(r.stat.param)) << ','
        << r.n << ',' << format_g6(r.rho0) << ',' << format_g6(r.rho_true) << ',' << format_g6(r.rate) << ','
        << format_g6(r.se) << ',' << (r.dale_pass ? (*r.dale_pass ? "true" : "false") : "") << ','
        << (r.rel_eff ? format_g6(*r.rel_eff) : "") << '\n';
  }
}

}  // namespace cldiv
