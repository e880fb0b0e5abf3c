// ivtf: command-line front end.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ivtf/audit.hpp"
#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"
#include "ivtf/mc_oracle.hpp"
#include "ivtf/size_engine.hpp"
#include "ivtf/tf_critical.hpp"
#include "ivtf/worst_case.hpp"

using nlohmann::ordered_json;

namespace {

using namespace ivtf;

constexpr double kCrit2b = 1.96 * 1.96;
constexpr double kF2b = 104.7;
constexpr double kCrit2c = 3.43 * 3.43;
constexpr double kF2c = 10.0;

struct Globals {
  std::string format = "plain";
  bool raw = false;
};

Globals g;

[[noreturn]] void usage(const std::string& msg) { throw Error(ErrorCode::kUsage, msg); }

// Reals print with 4 decimals unless --raw; infinities become strings.
ordered_json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (g.raw) return x;
  const double r = std::round(x * 1e4) / 1e4;
  return r == 0.0 ? 0.0 : r;
}

std::string scalar_text(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "none";
  return v.dump();
}

std::string csv_cell(const ordered_json& v) {
  std::string s = scalar_text(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// A result is a flat object, optionally with a "rows" array of flat objects
// that csv renders as a table.
void emit(const std::string& command, const ordered_json& body) {
  if (g.format == "json") {
    ordered_json j;
    j["command"] = command;
    j["result"] = body;
    std::cout << j.dump(2) << "\n";
    return;
  }
  const bool has_rows = body.contains("rows") && body["rows"].is_array() && !body["rows"].empty();
  if (g.format == "csv") {
    const ordered_json& rows = has_rows ? body["rows"] : ordered_json::array({body});
    std::vector<std::string> keys;
    for (auto it = rows[0].begin(); it != rows[0].end(); ++it) {
      if (!it->is_structured()) keys.push_back(it.key());
    }
    for (std::size_t i = 0; i < keys.size(); ++i) std::cout << (i ? "," : "") << keys[i];
    std::cout << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < keys.size(); ++i) {
        std::cout << (i ? "," : "") << (r.contains(keys[i]) ? csv_cell(r[keys[i]]) : "");
      }
      std::cout << "\n";
    }
    return;
  }
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (it.key() == "rows") continue;
    if (it->is_structured()) {
      std::cout << it.key() << ": " << it->dump() << "\n";
    } else {
      std::cout << it.key() << ": " << scalar_text(*it) << "\n";
    }
  }
  if (has_rows) {
    const auto& rows = body["rows"];
    bool first = true;
    for (auto it = rows[0].begin(); it != rows[0].end(); ++it) {
      std::cout << (first ? "" : "\t") << it.key();
      first = false;
    }
    std::cout << "\n";
    for (const auto& r : rows) {
      first = true;
      for (auto it = r.begin(); it != r.end(); ++it) {
        std::cout << (first ? "" : "\t") << scalar_text(*it);
        first = false;
      }
      std::cout << "\n";
    }
  }
}

std::shared_ptr<const CriticalValueFunction> load_cvf_for(double alpha) {
  const char* dir = std::getenv("TF_CACHE_DIR");
  return std::make_shared<const CriticalValueFunction>(cached_cvf(alpha, dir ? dir : ""));
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) usage("--alpha must lie in (0, 0.5)");
}

// Preset procedures. crit / fbar override the preset constants when given.
Procedure make_procedure(const std::string& name, double alpha, std::optional<double> crit,
                         std::optional<double> fbar) {
  const bool five = std::abs(alpha - 0.05) < 1e-12;
  if (name == "conventional") return ConventionalT{crit.value_or(chi2_1_quantile(alpha))};
  if (name == "ar") return PureAR{crit.value_or(chi2_1_quantile(alpha))};
  if (name == "threshold-2b" || name == "threshold-2c" || name == "hybrid-2b") {
    if (!five && !(crit && fbar)) usage(fmt::format("{} is a 5% preset (alpha = {} given)", name, alpha));
    if (name == "threshold-2b") return ThresholdTF{crit.value_or(kCrit2b), fbar.value_or(kF2b)};
    if (name == "threshold-2c") return ThresholdTF{crit.value_or(kCrit2c), fbar.value_or(kF2c)};
    return HybridAR{crit.value_or(kCrit2b), fbar.value_or(kF2b)};
  }
  if (name == "threshold" || name == "hybrid") {
    if (!crit || !fbar) usage(fmt::format("{} needs --crit and --fbar", name));
    if (name == "threshold") return ThresholdTF{*crit, *fbar};
    return HybridAR{*crit, *fbar};
  }
  if (name == "tf") return TFProcedure{load_cvf_for(alpha)};
  usage(fmt::format("unknown procedure '{}'", name));
}

const std::vector<std::string> kProcedures = {"conventional", "threshold-2b", "threshold-2c", "hybrid-2b",
                                              "threshold", "hybrid", "ar", "tf"};

std::optional<double> opt(CLI::Option* o, double v) {
  return o->count() ? std::optional<double>(v) : std::nullopt;
}

NuisancePoint point_from(CLI::Option* f0_opt, double f0, CLI::Option* ef_opt, double ef, double rho,
                         bool require_one = true) {
  if (f0_opt->count() && ef_opt->count()) usage("give only one of --f0 and --ef");
  if (require_one && !f0_opt->count() && !ef_opt->count()) usage("give one of --f0 and --ef");
  if (!(std::abs(rho) <= 1.0)) usage("--rho must lie in [-1, 1]");
  if (ef_opt->count()) {
    if (!(ef >= 1.0)) usage("--ef must be at least 1");
    return NuisancePoint::from_ef(rho, ef);
  }
  return NuisancePoint{rho, f0};
}

int run(int argc, char** argv) {
  CLI::App app{"Size-correct t-ratio inference with a single instrument"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv", "plain"}));
  app.add_flag("--raw", g.raw, "Full precision instead of 4 decimals");

  // cv
  auto* cv = app.add_subcommand("cv", "tF critical value c(F)");
  double cv_f = 0.0, cv_alpha = 0.05;
  cv->add_option("--f", cv_f, "First-stage F")->required();
  cv->add_option("--alpha", cv_alpha, "Level");

  // test
  auto* test = app.add_subcommand("test", "Decision for a published (t, F)");
  double t_t = 0.0, t_f = 0.0, t_alpha = 0.05;
  std::string t_proc;
  test->add_option("--t", t_t, "t-ratio")->required();
  test->add_option("--f", t_f, "First-stage F")->required();
  test->add_option("--procedure", t_proc, "Procedure")
      ->required()
      ->check(CLI::IsMember({"conventional", "threshold-2b", "threshold-2c", "tf"}));
  test->add_option("--alpha", t_alpha, "Level");

  // ci
  auto* ci = app.add_subcommand("ci", "tF confidence interval");
  double ci_beta = 0.0, ci_se = 1.0, ci_f = 0.0, ci_alpha = 0.05;
  ci->add_option("--beta", ci_beta, "Point estimate")->required();
  ci->add_option("--se", ci_se, "Standard error")->required();
  ci->add_option("--f", ci_f, "First-stage F")->required();
  ci->add_option("--alpha", ci_alpha, "Level");

  // size
  auto* size = app.add_subcommand("size", "Null rejection probability at a nuisance point");
  std::string s_proc;
  double s_rho = 0.0, s_f0 = 0.0, s_ef = 1.0, s_tol = 1e-8, s_alpha = 0.05, s_crit = 0.0, s_fbar = 0.0;
  int s_points = 101;
  bool s_sweep = false;
  size->add_option("--procedure", s_proc, "Procedure")->required()->check(CLI::IsMember(kProcedures));
  auto* s_rho_opt = size->add_option("--rho", s_rho, "Endogeneity correlation");
  auto* s_f0_opt = size->add_option("--f0", s_f0, "Standardized first-stage strength");
  auto* s_ef_opt = size->add_option("--ef", s_ef, "E[F] = 1 + f0^2");
  size->add_option("--tol", s_tol, "Quadrature tolerance");
  size->add_option("--alpha", s_alpha, "Level (conventional, ar, tf)");
  auto* s_crit_opt = size->add_option("--crit", s_crit, "Critical value for t^2");
  auto* s_fbar_opt = size->add_option("--fbar", s_fbar, "F threshold");
  size->add_flag("--sweep", s_sweep, "Profile over rho in [0, 1] at fixed f0");
  size->add_option("--points", s_points, "Sweep points")->check(CLI::Range(2, 100001));

  // solve
  auto* solve = app.add_subcommand("solve", "Solve for a corrected constant");
  std::string m_mode;
  double m_alpha = 0.05, m_crit = 0.0, m_fbar = 0.0;
  solve->add_option("--mode", m_mode, "What to solve for")
      ->required()
      ->check(CLI::IsMember({"threshold-F", "critical-value", "min-EF", "max-rho"}));
  solve->add_option("--alpha", m_alpha, "Level");
  auto* m_crit_opt = solve->add_option("--crit", m_crit, "Critical value for t^2");
  auto* m_fbar_opt = solve->add_option("--fbar", m_fbar, "F threshold");

  // region
  auto* region = app.add_subcommand("region", "Validity grid of the conventional test over (rho, E[F])");
  double r_crit = 0.0, r_alpha = 0.05;
  int r_n = 201;
  region->add_option("--crit", r_crit, "Critical value for t^2")->required();
  region->add_option("--alpha", r_alpha, "Level");
  region->add_option("--n", r_n, "Grid points per axis")->check(CLI::Range(100, 2001));

  // worst
  auto* worst = app.add_subcommand("worst", "Worst-case size over the nuisance space");
  std::string w_proc;
  double w_alpha = 0.05, w_crit = 0.0, w_fbar = 0.0, w_tol = 1e-7;
  worst->add_option("--procedure", w_proc, "Procedure")->required()->check(CLI::IsMember(kProcedures));
  worst->add_option("--alpha", w_alpha, "Level (conventional, ar, tf)");
  auto* w_crit_opt = worst->add_option("--crit", w_crit, "Critical value for t^2");
  auto* w_fbar_opt = worst->add_option("--fbar", w_fbar, "F threshold");
  worst->add_option("--tol", w_tol, "Tolerance");

  // table3
  auto* table3 = app.add_subcommand("table3", "Critical value table for sqrt(F) in [2, 10)");
  double tb_alpha = 0.05;
  std::string tb_out;
  table3->add_option("--alpha", tb_alpha, "Level");
  table3->add_option("--out", tb_out, "CSV path (stdout if omitted)");

  // audit
  auto* audit = app.add_subcommand("audit", "Reclassify a corpus of published (t, F)");
  std::string a_in, a_out;
  bool a_prefer_reported = false;
  double a_alpha = 0.05;
  audit->add_option("--input", a_in, "Corpus CSV")->required();
  audit->add_option("--out", a_out, "JSON path (stdout if omitted)");
  audit->add_flag("--prefer-reported", a_prefer_reported, "Use F_reported over F_derived");
  audit->add_option("--alpha", a_alpha, "Level");

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo rejection rate");
  std::string c_proc;
  double c_rho = 0.0, c_f0 = 0.0, c_ef = 1.0, c_alpha = 0.05, c_crit = 0.0, c_fbar = 0.0;
  std::uint64_t c_n = 1'000'000, c_seed = 0;
  mc->add_option("--procedure", c_proc, "Procedure")->required()->check(CLI::IsMember(kProcedures));
  mc->add_option("--rho", c_rho, "Endogeneity correlation");
  auto* c_f0_opt = mc->add_option("--f0", c_f0, "Standardized first-stage strength");
  auto* c_ef_opt = mc->add_option("--ef", c_ef, "E[F] = 1 + f0^2");
  mc->add_option("--n", c_n, "Draws");
  mc->add_option("--seed", c_seed, "Seed");
  mc->add_option("--alpha", c_alpha, "Level (conventional, ar, tf)");
  auto* c_crit_opt = mc->add_option("--crit", c_crit, "Critical value for t^2");
  auto* c_fbar_opt = mc->add_option("--fbar", c_fbar, "F threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    usage(e.what());
  }

  if (*cv) {
    check_alpha(cv_alpha);
    if (!(cv_f >= 0.0)) usage("--f must be nonnegative");
    const auto cvf = load_cvf_for(cv_alpha);
    const double c = cvf->eval(cv_f);
    ordered_json b;
    b["F"] = num(cv_f);
    b["alpha"] = cv_alpha;
    b["unbounded"] = std::isinf(c);
    b["sqrt_crit"] = std::isinf(c) ? ordered_json("unbounded") : num(std::sqrt(c));
    b["crit"] = std::isinf(c) ? ordered_json("unbounded") : num(c);
    b["sqrt_crit_table"] = std::isinf(c) ? ordered_json("unbounded") : ordered_json(round_up_2dp(std::sqrt(c)));
    emit("cv", b);
  } else if (*test) {
    check_alpha(t_alpha);
    if (!(t_f >= 0.0)) usage("--f must be nonnegative");
    const Procedure proc = make_procedure(t_proc, t_alpha, std::nullopt, std::nullopt);
    const Decision d = decide(proc, t_t, t_f);
    double cutoff = 0.0;
    std::optional<double> f_threshold;
    if (auto* p = std::get_if<ConventionalT>(&proc)) cutoff = p->crit;
    if (auto* p = std::get_if<ThresholdTF>(&proc)) {
      cutoff = p->crit;
      f_threshold = p->f_threshold;
    }
    if (auto* p = std::get_if<TFProcedure>(&proc)) cutoff = p->cvf->eval(t_f);
    ordered_json b;
    b["procedure"] = t_proc;
    b["decision"] = to_string(d);
    b["t"] = num(t_t);
    b["F"] = num(t_f);
    b["crit"] = num(cutoff);
    b["sqrt_crit"] = num(std::sqrt(cutoff));
    b["f_threshold"] = f_threshold ? num(*f_threshold) : ordered_json(nullptr);
    emit("test", b);
  } else if (*ci) {
    check_alpha(ci_alpha);
    if (!(ci_se > 0.0)) usage("--se must be positive");
    if (!(ci_f >= 0.0)) usage("--f must be nonnegative");
    const auto cvf = load_cvf_for(ci_alpha);
    const double adj = tf_adjusted_se(ci_se, ci_f, *cvf);
    const double zq = std::sqrt(cvf->q());
    const double half = zq * adj;
    ordered_json b;
    b["beta"] = num(ci_beta);
    b["se"] = num(ci_se);
    b["F"] = num(ci_f);
    b["adjusted_se"] = num(adj);
    b["factor"] = num(adj / ci_se);
    b["lower"] = num(std::isinf(half) ? -half : ci_beta - half);
    b["upper"] = num(std::isinf(half) ? half : ci_beta + half);
    b["conventional_lower"] = num(ci_beta - zq * ci_se);
    b["conventional_upper"] = num(ci_beta + zq * ci_se);
    b["interval"] = std::isinf(half) ? std::string("(-inf, inf)")
                                     : fmt::format("({:.4f}, {:.4f})", ci_beta - half, ci_beta + half);
    emit("ci", b);
  } else if (*size) {
    check_alpha(s_alpha);
    const Procedure proc = make_procedure(s_proc, s_alpha, opt(s_crit_opt, s_crit), opt(s_fbar_opt, s_fbar));
    if (s_sweep) {
      if (s_f0_opt->count() == s_ef_opt->count()) usage("give exactly one of --f0 and --ef");
      const double f0 = s_ef_opt->count() ? NuisancePoint::from_ef(0.0, s_ef).f0 : s_f0;
      ordered_json rows = ordered_json::array();
      for (int i = 0; i < s_points; ++i) {
        const double rho = static_cast<double>(i) / (s_points - 1);
        const SizeResult r = rejection_prob(proc, {rho, f0}, s_tol);
        rows.push_back({{"rho", num(rho)}, {"f0", num(f0)}, {"prob", num(r.prob)}, {"abs_err", r.abs_err}});
      }
      ordered_json b;
      b["procedure"] = describe(proc);
      b["rows"] = rows;
      emit("size", b);
    } else {
      if (!s_rho_opt->count()) usage("--rho is required without --sweep");
      const NuisancePoint p = point_from(s_f0_opt, s_f0, s_ef_opt, s_ef, s_rho);
      const SizeResult r = rejection_prob(proc, p, s_tol);
      ordered_json b;
      b["procedure"] = describe(proc);
      b["rho"] = num(p.rho);
      b["f0"] = num(p.f0);
      b["ef"] = num(p.ef());
      b["prob"] = num(r.prob);
      b["abs_err"] = r.abs_err;
      emit("size", b);
    }
  } else if (*solve) {
    check_alpha(m_alpha);
    ordered_json b;
    b["mode"] = m_mode;
    b["alpha"] = m_alpha;
    if (m_mode == "critical-value") {
      if (!m_fbar_opt->count()) usage("critical-value needs --fbar");
      const double c = solve_critical_value(m_fbar, m_alpha);
      b["fbar"] = num(m_fbar);
      b["value"] = num(c);
      b["sqrt_value"] = num(std::sqrt(c));
    } else {
      if (!m_crit_opt->count()) usage(fmt::format("{} needs --crit", m_mode));
      if (!(m_crit > 0.0)) usage("--crit must be positive");
      b["crit"] = num(m_crit);
      if (m_mode == "threshold-F") {
        const auto F = solve_threshold_F(m_crit, m_alpha);
        b["value"] = F ? num(*F) : ordered_json("none");
        if (!F) b["certificate"] = "worst-case size stays above alpha for every threshold up to F = 1e6";
      } else {
        const ValidityRegion vr = validity_region(m_crit, m_alpha);
        if (m_mode == "max-rho") {
          b["value"] = num(vr.rho_bar);
        } else {
          b["value"] = vr.ef_bar ? num(*vr.ef_bar) : ordered_json("none");
          if (!vr.ef_bar) b["certificate"] = "size exceeds alpha somewhere on the top grid row E[F] = 400";
        }
      }
    }
    emit("solve", b);
  } else if (*region) {
    check_alpha(r_alpha);
    if (!(r_crit > 0.0)) usage("--crit must be positive");
    const ValidityRegion vr = validity_region(r_crit, r_alpha, GridSpec{r_n, r_n, 1.0, 400.0});
    ordered_json rows = ordered_json::array();
    for (std::size_t j = 0; j < vr.ef.size(); ++j) {
      for (std::size_t i = 0; i < vr.rho.size(); ++i) {
        rows.push_back({{"rho", num(vr.rho[i])}, {"ef", num(vr.ef[j])}, {"size", num(vr.size[j][i])},
                        {"valid", static_cast<bool>(vr.valid[j][i])}});
      }
    }
    ordered_json b;
    b["crit"] = num(r_crit);
    b["alpha"] = r_alpha;
    b["rho_bar"] = num(vr.rho_bar);
    b["ef_bar"] = vr.ef_bar ? num(*vr.ef_bar) : ordered_json("none");
    b["rows"] = rows;
    emit("region", b);
  } else if (*worst) {
    check_alpha(w_alpha);
    const Procedure proc = make_procedure(w_proc, w_alpha, opt(w_crit_opt, w_crit), opt(w_fbar_opt, w_fbar));
    const WorstCase wc = worst_case_size(proc, w_tol);
    ordered_json b;
    b["procedure"] = describe(proc);
    b["max_prob"] = num(wc.max_prob);
    b["arg_rho"] = num(wc.arg_rho);
    b["arg_f0"] = num(wc.arg_f0);
    b["certified_tol"] = wc.certified_tol;
    emit("worst", b);
  } else if (*table3) {
    check_alpha(tb_alpha);
    const auto cvf = load_cvf_for(tb_alpha);
    const Table3 table = emit_table3(*cvf);
    const std::string csv = table3_csv(table);
    if (tb_out.empty() && g.format == "json") {
      ordered_json rows = ordered_json::array();
      for (int tenth = 0; tenth < 10; ++tenth) {
        ordered_json r;
        r["sqrtF_decimal"] = fmt::format("0.{}", tenth);
        for (int whole = 2; whole <= 9; ++whole) r[std::to_string(whole)] = num(table.at(whole, tenth));
        rows.push_back(r);
      }
      ordered_json b;
      b["alpha"] = tb_alpha;
      b["f_tilde"] = num(cvf->f_tilde());
      b["rows"] = rows;
      emit("table3", b);
    } else if (tb_out.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(tb_out);
      if (!out || !(out << csv)) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", tb_out));
      ordered_json b;
      b["out"] = tb_out;
      b["alpha"] = tb_alpha;
      b["f_tilde"] = num(cvf->f_tilde());
      emit("table3", b);
    }
  } else if (*audit) {
    check_alpha(a_alpha);
    if (std::abs(a_alpha - 0.05) > 1e-12) usage("the audit presets are 5% rules");
    auto records = load_corpus_csv(a_in, a_prefer_reported);
    const auto procs = default_audit_procedures(load_cvf_for(a_alpha));
    const std::string json = audit_json(classify_corpus(std::move(records), procs));
    if (a_out.empty()) {
      std::cout << json;
    } else {
      std::ofstream out(a_out);
      if (!out || !(out << json)) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", a_out));
      ordered_json b;
      b["out"] = a_out;
      emit("audit", b);
    }
  } else if (*mc) {
    check_alpha(c_alpha);
    const Procedure proc = make_procedure(c_proc, c_alpha, opt(c_crit_opt, c_crit), opt(c_fbar_opt, c_fbar));
    const NuisancePoint p = point_from(c_f0_opt, c_f0, c_ef_opt, c_ef, c_rho, false);
    const McEstimate e = mc_rejection(proc, McConfig{c_n, c_seed, p});
    ordered_json b;
    b["procedure"] = describe(proc);
    b["rho"] = num(p.rho);
    b["f0"] = num(p.f0);
    b["n"] = e.n_draws;
    b["seed"] = c_seed;
    b["estimate"] = num(e.estimate);
    b["mc_se"] = e.mc_se;
    b["rejections"] = e.rejections;
    emit("mc", b);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    ordered_json j;
    j["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    std::cout.flush();
    std::cerr << j.dump() << "\n";
    return e.code() == ErrorCode::kUsage ? 2 : 1;
  } catch (const std::exception& e) {
    ordered_json j;
    j["error"] = {{"code", "internal"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
}
