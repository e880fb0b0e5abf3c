#include "ivtf/audit.hpp"

#include <algorithm>
#include <boost/tokenizer.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include <fmt/format.h>

#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"

namespace ivtf {

namespace {

constexpr const char* kHeader[] = {"spec_id", "paper_id", "t", "F_derived", "F_reported", "weight"};
constexpr double kRuleOfThumbF = 10.0;
constexpr double kConventionalCrit = 1.96 * 1.96;

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(s[i])) ++i;
  return s.substr(i);
}

std::optional<double> parse_cell(const std::string& cell, std::size_t line, const char* column) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCode::kSchema, fmt::format("line {}: column {} is not a number: '{}'", line, column, cell));
  }
  return v;
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

}  // namespace

std::vector<SpecRecord> parse_corpus_csv(std::istream& in, bool prefer_reported) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<SpecRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    try {
      Tokenizer tok(line);
      for (const auto& c : tok) cells.push_back(trim(c));
    } catch (const boost::escaped_list_error& e) {
      throw Error(ErrorCode::kSchema, fmt::format("line {}: {}", line_no, e.what()));
    }
    if (!header_seen) {
      if (cells.size() != std::size(kHeader) || !std::equal(cells.begin(), cells.end(), std::begin(kHeader))) {
        throw Error(ErrorCode::kSchema, "header must be spec_id,paper_id,t,F_derived,F_reported,weight");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != std::size(kHeader)) {
      throw Error(ErrorCode::kSchema, fmt::format("line {}: expected 6 fields, found {}", line_no, cells.size()));
    }
    SpecRecord r;
    r.spec_id = cells[0];
    r.paper_id = cells[1];
    if (r.spec_id.empty() || r.paper_id.empty()) {
      throw Error(ErrorCode::kSchema, fmt::format("line {}: spec_id and paper_id are required", line_no));
    }
    r.t = parse_cell(cells[2], line_no, "t");
    const auto derived = parse_cell(cells[3], line_no, "F_derived");
    const auto reported = parse_cell(cells[4], line_no, "F_reported");
    r.F = prefer_reported ? (reported ? reported : derived) : (derived ? derived : reported);
    r.weight = parse_cell(cells[5], line_no, "weight");
    if (r.F && *r.F < 0.0) throw Error(ErrorCode::kSchema, fmt::format("line {}: negative F", line_no));
    if (r.weight && !(*r.weight > 0.0)) {
      throw Error(ErrorCode::kSchema, fmt::format("line {}: weight must be positive", line_no));
    }
    out.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorCode::kSchema, "missing header");
  fill_default_weights(out);
  return out;
}

std::vector<SpecRecord> load_corpus_csv(const std::string& path, bool prefer_reported) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", path));
  return parse_corpus_csv(in, prefer_reported);
}

void fill_default_weights(std::vector<SpecRecord>& records) {
  std::map<std::string, std::size_t> per_paper;
  for (const auto& r : records) ++per_paper[r.paper_id];
  for (auto& r : records) {
    if (!r.weight) r.weight = 1.0 / static_cast<double>(per_paper[r.paper_id]);
  }
}

const char* to_string(Decision d) noexcept {
  switch (d) {
    case Decision::kReject: return "reject";
    case Decision::kAccept: return "accept";
    case Decision::kIndeterminate: return "indeterminate";
  }
  return "indeterminate";
}

Decision decide(const Procedure& proc, std::optional<double> t, std::optional<double> F) {
  if (!t || !F) return Decision::kIndeterminate;
  const double t2 = *t * *t;
  const double f = *F;
  auto verdict = [](bool reject) { return reject ? Decision::kReject : Decision::kAccept; };
  return std::visit(
      [&](const auto& p) -> Decision {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConventionalT>) {
          return verdict(t2 > p.crit);
        } else if constexpr (std::is_same_v<T, ThresholdTF>) {
          return verdict(t2 > p.crit && f > p.f_threshold);
        } else if constexpr (std::is_same_v<T, TFProcedure>) {
          return verdict(t2 > p.cvf->eval(f));
        } else {
          return Decision::kIndeterminate;
        }
      },
      proc);
}

std::vector<NamedProcedure> default_audit_procedures(std::shared_ptr<const CriticalValueFunction> cvf) {
  if (!cvf) throw Error(ErrorCode::kDomain, "audit needs a critical value function");
  std::vector<NamedProcedure> out;
  out.push_back({"conventional", ConventionalT{cvf->q()}, kRuleOfThumbF});
  out.push_back({"threshold-2b", ThresholdTF{1.96 * 1.96, 104.7}, 104.7});
  out.push_back({"threshold-2c", ThresholdTF{3.43 * 3.43, 10.0}, 10.0});
  out.push_back({"tf", TFProcedure{cvf}, cvf->f_tilde()});
  return out;
}

AuditReport classify_corpus(std::vector<SpecRecord> records, const std::vector<NamedProcedure>& procs) {
  fill_default_weights(records);
  std::sort(records.begin(), records.end(), [](const SpecRecord& a, const SpecRecord& b) {
    return std::tie(a.spec_id, a.paper_id) < std::tie(b.spec_id, b.paper_id);
  });

  AuditReport rep;
  rep.n_records = records.size();
  rep.caveat =
      "Published first-stage F statistics may test hypotheses other than the single-instrument first stage; "
      "such records cannot be detected and are classified as given.";
  double base_w = 0.0;
  std::vector<char> complete(records.size(), 0), in_base(records.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    rep.spec_ids.push_back(r.spec_id);
    if (r.t && r.F) {
      complete[i] = 1;
      ++rep.n_complete;
      if (*r.t * *r.t > kConventionalCrit && *r.F > kRuleOfThumbF) {
        in_base[i] = 1;
        base_w += *r.weight;
      }
    }
  }
  if (rep.n_complete == 0) throw Error(ErrorCode::kEmptyCorpus, "no record has both t and F");

  rep.decisions.assign(records.size(), std::vector<Decision>(procs.size(), Decision::kIndeterminate));
  for (std::size_t k = 0; k < procs.size(); ++k) {
    validate(procs[k].proc);
    ProcedureAudit pa;
    pa.name = procs[k].name;
    pa.rule = describe(procs[k].proc);
    pa.f_split = procs[k].f_split;
    std::array<std::array<double, 2>, 2> w{};
    double reclass_w = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const Decision d = decide(procs[k].proc, r.t, r.F);
      rep.decisions[i][k] = d;
      if (!complete[i] || d == Decision::kIndeterminate) {
        if (complete[i]) ++pa.indeterminate;
        continue;
      }
      const int row = d == Decision::kReject ? 0 : 1;
      const int col = *r.F > pa.f_split ? 0 : 1;
      ++pa.table.counts[row][col];
      w[row][col] += *r.weight;
      if (in_base[i]) {
        ++pa.reclass_base;
        if (d == Decision::kAccept) {
          ++pa.reclassified;
          reclass_w += *r.weight;
        }
      }
    }
    const double n_cls = static_cast<double>(rep.n_complete - pa.indeterminate);
    double w_cls = 0.0;
    for (const auto& row : w) w_cls += row[0] + row[1];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        pa.table.shares[a][b] = n_cls > 0 ? static_cast<double>(pa.table.counts[a][b]) / n_cls : 0.0;
        pa.table.weighted_shares[a][b] = w_cls > 0 ? w[a][b] / w_cls : 0.0;
      }
    }
    if (pa.reclass_base > 0) {
      pa.reclass_share = static_cast<double>(pa.reclassified) / static_cast<double>(pa.reclass_base);
      pa.reclass_weighted_share = reclass_w / base_w;
    }
    rep.procedures.push_back(std::move(pa));
  }
  return rep;
}

std::string audit_json(const AuditReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["format"] = "ivtf-audit";
  j["version"] = 1;
  j["caveat"] = report.caveat;
  j["n_records"] = report.n_records;
  j["n_complete"] = report.n_complete;
  static constexpr const char* kCell[2][2] = {{"significant_above", "significant_below"},
                                              {"insignificant_above", "insignificant_below"}};
  ordered_json procs = ordered_json::object();
  for (const auto& p : report.procedures) {
    ordered_json o;
    o["rule"] = p.rule;
    o["f_split"] = p.f_split;
    ordered_json counts, shares, wshares;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        counts[kCell[a][b]] = p.table.counts[a][b];
        shares[kCell[a][b]] = round6(p.table.shares[a][b]);
        wshares[kCell[a][b]] = round6(p.table.weighted_shares[a][b]);
      }
    }
    o["counts"] = counts;
    o["shares"] = shares;
    o["weighted_shares"] = wshares;
    o["indeterminate"] = p.indeterminate;
    o["reclassification"] = {{"base", p.reclass_base},
                             {"count", p.reclassified},
                             {"share", round6(p.reclass_share)},
                             {"weighted_share", round6(p.reclass_weighted_share)}};
    procs[p.name] = o;
  }
  j["procedures"] = procs;
  ordered_json recs = ordered_json::array();
  for (std::size_t i = 0; i < report.spec_ids.size(); ++i) {
    ordered_json d = ordered_json::object();
    for (std::size_t k = 0; k < report.procedures.size(); ++k) {
      d[report.procedures[k].name] = to_string(report.decisions[i][k]);
    }
    recs.push_back({{"spec_id", report.spec_ids[i]}, {"decisions", d}});
  }
  j["records"] = recs;
  return j.dump(2) + "\n";
}

}  // namespace ivtf
