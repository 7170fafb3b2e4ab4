#include "strata/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "strata/error.hpp"

namespace strata {

namespace fs = std::filesystem;
using nlohmann::json;

CohortRule parse_cohort_rule(const std::string& name) {
  if (name == "none") return CohortRule::none;
  if (name == "numeric") return CohortRule::numeric;
  if (name == "label") return CohortRule::label;
  throw InvalidArgument("unknown cohort rule '" + name + "'");
}

std::string to_string(CohortRule rule) {
  switch (rule) {
    case CohortRule::none: return "none";
    case CohortRule::numeric: return "numeric";
    case CohortRule::label: return "label";
  }
  return "unknown";
}

Band resolve_band(const RunConfig& config, std::size_t p, std::size_t k_max) {
  if (p < 2) throw DataError("point cloud needs at least 2 points");
  const Band def = default_band(p);
  Band band{config.k_lo.value_or(def.k_lo), config.k_hi.value_or(def.k_hi)};
  if (config.k_lo && !config.k_hi && band.k_hi <= band.k_lo)
    band.k_hi = std::min(p - 1, std::max(band.k_lo + 2, def.k_hi));
  if (!config.k_lo && !config.k_hi && band.k_hi <= band.k_lo)
    throw DataError("input has " + std::to_string(p) + " points, too few for the default band (ranks " +
                    std::to_string(band.k_lo) + " and up); pass --kmin/--kmax-regress");
  validate_band(band);
  if (band.k_hi > p - 1)
    throw DataError("band [" + std::to_string(band.k_lo) + ", " + std::to_string(band.k_hi) +
                    "] needs at least " + std::to_string(band.k_hi + 1) + " points, input has " +
                    std::to_string(p));
  if (band.k_hi > k_max)
    throw InvalidArgument("band k_hi " + std::to_string(band.k_hi) + " exceeds k_max " +
                          std::to_string(k_max));
  return band;
}

std::vector<std::size_t> choose_anchors(std::size_t p, std::optional<std::size_t> count,
                                        std::uint64_t seed) {
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (!count || *count >= p) return all;
  if (*count == 0) throw InvalidArgument("anchor count must be >= 1");
  // partial Fisher-Yates so the result does not depend on the library's std::sample
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < *count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(*count);
  std::sort(all.begin(), all.end());
  return all;
}

namespace {

struct Inputs {
  PointCloud cloud;
  std::optional<std::vector<std::string>> vocab;
};

Inputs load_inputs(const RunConfig& config) {
  if (!fs::exists(config.input)) throw DataError("input not found: " + config.input.string());
  PointCloud cloud = load_matrix(config.input, config.format);
  std::optional<std::vector<std::string>> vocab;
  if (config.vocab) {
    if (!fs::exists(*config.vocab)) throw DataError("vocabulary not found: " + config.vocab->string());
    vocab = load_vocab(*config.vocab);
    if (vocab->size() != cloud.size())
      throw DataError("vocabulary has " + std::to_string(vocab->size()) + " lines but the matrix has " +
                      std::to_string(cloud.size()) + " rows");
  }
  if (config.cohorts != CohortRule::none && !vocab)
    throw InvalidArgument("cohort rule '" + to_string(config.cohorts) + "' needs --vocab");
  return {std::move(cloud), std::move(vocab)};
}

std::size_t resolve_kmax(const RunConfig& config, std::size_t p, std::size_t min_needed) {
  if (p < 2) throw DataError("point cloud needs at least 2 points");
  if (config.k_max) return resolve_k_max(config.k_max, p);
  return std::min(p - 1, std::max<std::size_t>(2048, min_needed));
}

std::string cohort_of(const RunConfig& config, const std::optional<std::vector<std::string>>& vocab,
                      std::size_t anchor) {
  switch (config.cohorts) {
    case CohortRule::none: return "all";
    case CohortRule::numeric: return to_string(classify_token((*vocab)[anchor]));
    case CohortRule::label: return (*vocab)[anchor];
  }
  return "all";
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json quartiles_json(const CohortSummary& s) {
  return {{"count", s.count},
          {"q1", number(s.quartiles.q1)},
          {"q2", number(s.quartiles.q2)},
          {"q3", number(s.quartiles.q3)}};
}

std::string csv_field(const std::string& s) {
  const std::string e = escape_token(s);
  if (e.find_first_of(",\"") == std::string::npos && !e.empty()) return e;
  std::string out = "\"";
  for (char c : e) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

json estimate_json(const GeometryEstimate& e) {
  return {{"n_hat", number(e.n_hat)},
          {"log_k_hat", number(e.log_k_hat)},
          {"k_prime", number(e.k_prime)},
          {"sigma", number(e.sigma)},
          {"ric_hat", number(e.ric_hat)},
          {"rms_residual", number(e.rms_residual)},
          {"usable_rows", e.usable_rows},
          {"duplicates", e.duplicates},
          {"degenerate", e.degenerate}};
}

}  // namespace

AnalysisReport analyze(const RunConfig& config) {
  Inputs in = load_inputs(config);
  const std::size_t p = in.cloud.size();
  const std::size_t k_max = resolve_kmax(config, p, config.k_hi.value_or(0));
  const Band band = resolve_band(config, p, k_max);

  CloudOptions opts;
  opts.estimator.band = band;
  opts.estimator.ricci_window = config.ricci_window;
  opts.estimator.volume_per_point = config.volume_per_point;
  opts.k_max = k_max;
  opts.anchors = choose_anchors(p, config.anchor_count, config.seed);
  opts.workers = std::max(1u, config.workers);

  CloudAnalysis ca = analyze_cloud(in.cloud, config.metric, opts);

  AnalysisReport rep;
  rep.config = config;
  rep.p = p;
  rep.dim = in.cloud.dim();
  rep.band = ca.band;
  rep.k_max = ca.k_max;
  rep.records.reserve(ca.points.size());

  std::vector<std::string> order;
  std::map<std::string, std::array<std::vector<double>, 3>> values;
  std::map<std::string, std::size_t> anchors_in;
  if (config.cohorts == CohortRule::numeric) order = {"numeric", "non-numeric"};
  else if (config.cohorts == CohortRule::none) order = {"all"};

  for (auto& pa : ca.points) {
    AnchorRecord r;
    r.analysis = pa;
    const std::size_t a = pa.estimate.anchor;
    if (in.vocab) r.token = (*in.vocab)[a];
    r.cohort = cohort_of(config, in.vocab, a);
    if (std::find(order.begin(), order.end(), r.cohort) == order.end()) order.push_back(r.cohort);
    ++anchors_in[r.cohort];
    if (!pa.estimate.degenerate) {
      auto& v = values[r.cohort];
      v[0].push_back(pa.estimate.n_hat);
      v[1].push_back(pa.estimate.k_prime);
      v[2].push_back(pa.estimate.ric_hat);
    }
    rep.records.push_back(std::move(r));
  }

  static const char* kParams[3] = {"dimension", "scaling", "ricci"};
  for (const auto& label : order) {
    CohortReport c;
    c.label = label;
    c.anchors = anchors_in[label];
    for (int i = 0; i < 3; ++i) c.parameters.push_back({kParams[i], summarize(label, values[label][i])});
    rep.cohorts.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      for (int k = 0; k < 3; ++k) {
        std::vector<double> a, b;
        for (double v : values[order[i]][k])
          if (std::isfinite(v)) a.push_back(v);
        for (double v : values[order[j]][k])
          if (std::isfinite(v)) b.push_back(v);
        if (a.empty() || b.empty()) continue;
        rep.ks_tests.push_back({order[i], order[j], kParams[k], ks_two_sample(a, b)});
      }
    }
  }
  return rep;
}

json config_json(const RunConfig& c) {
  auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
  return {{"input", c.input.string()},
          {"format", c.format ? to_string(*c.format) : "auto"},
          {"vocab", c.vocab ? json(c.vocab->string()) : json(nullptr)},
          {"metric", c.metric.name()},
          {"radius", c.metric.radius},
          {"k_lo", opt(c.k_lo)},
          {"k_hi", opt(c.k_hi)},
          {"k_max", opt(c.k_max)},
          {"anchors", opt(c.anchor_count)},
          {"seed", c.seed},
          {"cohorts", to_string(c.cohorts)},
          {"out", c.out_dir.string()},
          {"workers", c.workers},
          {"ricci_window", to_string(c.ricci_window)},
          {"volume_per_point", c.volume_per_point},
          {"write_curves", c.write_curves}};
}

json report_json(const AnalysisReport& rep) {
  json records = json::array();
  for (const auto& r : rep.records) {
    const auto& e = r.analysis.estimate;
    json flags = json::array();
    if (e.degenerate) flags.push_back("degenerate");
    if (e.duplicates > 0) flags.push_back("duplicates");
    json j = estimate_json(e);
    j["anchor"] = e.anchor;
    j["token"] = r.token ? json(*r.token) : json(nullptr);
    j["cohort"] = r.cohort;
    j["flags"] = flags;
    j["knees"] = r.analysis.knees;
    j["gaps"] = r.analysis.gaps;
    j["concavity"] = r.analysis.concavity;
    records.push_back(std::move(j));
  }
  json cohorts = json::array();
  for (const auto& c : rep.cohorts) {
    json params = json::object();
    for (const auto& p : c.parameters) params[p.parameter] = quartiles_json(p.summary);
    cohorts.push_back({{"label", c.label}, {"anchors", c.anchors}, {"parameters", params}});
  }
  json ks = json::array();
  for (const auto& k : rep.ks_tests)
    ks.push_back({{"cohort_a", k.cohort_a},
                  {"cohort_b", k.cohort_b},
                  {"parameter", k.parameter},
                  {"statistic", k.result.statistic},
                  {"p_value", k.result.p_value}});
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"config", config_json(rep.config)},
          {"input", {{"p", rep.p}, {"D", rep.dim}}},
          {"band", {{"k_lo", rep.band.k_lo}, {"k_hi", rep.band.k_hi}}},
          {"k_max", rep.k_max},
          {"records", records},
          {"cohorts", cohorts},
          {"ks_tests", ks}};
}

void write_records_csv(const fs::path& path, const AnalysisReport& rep) {
  auto out = open_out(path);
  out << "anchor,token,cohort,n_hat,log_k_hat,k_prime,sigma,ric_hat,rms_residual,usable_rows,"
         "duplicates,degenerate,knees,gaps,concavity\n";
  for (const auto& r : rep.records) {
    const auto& e = r.analysis.estimate;
    out << e.anchor << ',' << (r.token ? csv_field(*r.token) : std::string()) << ','
        << csv_field(r.cohort) << ',' << format_double(e.n_hat) << ','
        << format_double(e.log_k_hat) << ',' << format_double(e.k_prime) << ','
        << format_double(e.sigma) << ',' << format_double(e.ric_hat) << ','
        << format_double(e.rms_residual) << ',' << e.usable_rows << ',' << e.duplicates << ','
        << (e.degenerate ? 1 : 0) << ',' << r.analysis.knees << ',' << r.analysis.gaps << ','
        << r.analysis.concavity << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

void write_curve_csv(const fs::path& path, const NeighborRadii& radii, double volume_per_point) {
  auto out = open_out(path);
  out << "k,r,log_r,log_v\n";
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double r = radii.radii[i];
    if (r <= 0) continue;
    const std::size_t k = i + 1;
    out << k << ',' << format_double(r) << ',' << format_double(std::log(r)) << ','
        << format_double(std::log(volume_per_point * static_cast<double>(k))) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

AnalysisReport run_analyze(const RunConfig& config) {
  AnalysisReport rep = analyze(config);
  fs::create_directories(config.out_dir);
  {
    auto out = open_out(config.out_dir / "report.json");
    out << report_json(rep).dump(2) << '\n';
  }
  write_records_csv(config.out_dir / "anchors.csv", rep);
  if (config.write_curves) {
    std::vector<std::string> specs;
    for (const auto& r : rep.records) specs.push_back(std::to_string(r.analysis.estimate.anchor));
    RunConfig c = config;
    c.vocab.reset();  // specs are indices
    c.cohorts = CohortRule::none;
    c.k_lo = rep.band.k_lo;
    c.k_hi = rep.band.k_hi;
    c.k_max = rep.k_max;
    run_curve(c, specs);
  }
  return rep;
}

std::vector<std::size_t> resolve_anchors(const std::vector<std::string>& specs,
                                         const std::vector<std::string>* vocab, std::size_t p) {
  std::vector<std::size_t> out;
  out.reserve(specs.size());
  for (const auto& s : specs) {
    if (vocab) {
      const auto it = std::find(vocab->begin(), vocab->end(), s);
      if (it != vocab->end()) {
        out.push_back(static_cast<std::size_t>(it - vocab->begin()));
        continue;
      }
    }
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw InvalidArgument("unknown anchor token '" + s + "'");
    if (idx >= p)
      throw InvalidArgument("anchor index " + s + " out of range for " + std::to_string(p) + " points");
    out.push_back(idx);
  }
  return out;
}

std::vector<CurveOutput> run_curve(const RunConfig& config, const std::vector<std::string>& anchors) {
  if (anchors.empty()) throw InvalidArgument("curve needs at least one anchor");
  RunConfig c = config;
  c.cohorts = CohortRule::none;
  Inputs in = load_inputs(c);
  const std::size_t p = in.cloud.size();
  const std::size_t k_max = resolve_kmax(config, p, config.k_hi.value_or(0));
  const Band band = resolve_band(config, p, k_max);
  const auto idx = resolve_anchors(anchors, in.vocab ? &*in.vocab : nullptr, p);

  RadiiOptions ro;
  ro.k_max = k_max;
  ro.workers = std::max(1u, config.workers);
  const auto radii = sorted_radii_for(in.cloud, config.metric, idx, ro);

  const fs::path dir = config.out_dir / "curves";
  fs::create_directories(dir);
  std::vector<CurveOutput> outputs;
  json diag = json::array();
  for (const auto& nr : radii) {
    CurveOutput o;
    o.anchor = nr.anchor;
    if (in.vocab) o.token = (*in.vocab)[nr.anchor];
    o.csv = dir / ("anchor_" + std::to_string(nr.anchor) + ".csv");
    write_curve_csv(o.csv, nr, config.volume_per_point);
    o.estimate = analyze_point(nr, band, config.ricci_window, config.volume_per_point);
    try {
      o.diagnostics = diagnose_curve(build_curve(nr, config.volume_per_point), band);
    } catch (const DegenerateFit&) {
    }
    json knees = json::array();
    for (const auto& k : o.diagnostics.knees)
      knees.push_back({{"log_r", k.log_r}, {"slope_before", k.slope_before}, {"slope_after", k.slope_after}});
    json gaps = json::array();
    for (const auto& g : o.diagnostics.gaps) gaps.push_back({{"r_start", g.r_start}, {"r_end", g.r_end}});
    diag.push_back({{"anchor", o.anchor},
                    {"token", o.token ? json(*o.token) : json(nullptr)},
                    {"csv", o.csv.filename().string()},
                    {"estimate", estimate_json(o.estimate)},
                    {"knees", knees},
                    {"gaps", gaps},
                    {"concavity",
                     {{"sign", o.diagnostics.concavity.sign},
                      {"coefficient", o.diagnostics.concavity.coefficient}}}});
    outputs.push_back(std::move(o));
  }
  auto out = open_out(dir / "diagnostics.json");
  out << json({{"tool", kToolName},
               {"version", kToolVersion},
               {"band", {{"k_lo", band.k_lo}, {"k_hi", band.k_hi}}},
               {"k_max", k_max},
               {"anchors", diag}})
             .dump(2)
      << '\n';
  return outputs;
}

}  // namespace strata
