#include <CLI11.hpp>
#include <array>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strata/error.hpp"
#include "strata/matrix_io.hpp"
#include "strata/report.hpp"
#include "strata/stats.hpp"
#include "strata/synthetic.hpp"
#include "strata/validation.hpp"

using namespace strata;
namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kValidation = 3;

struct InputFlags {
  std::string input;
  std::string format;
  std::string vocab;
  std::string metric = "euclidean";
  double radius = 1.0;
  std::optional<std::size_t> kmin, kmax_regress, kmax;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out = "strata_out";
  std::string ricci_window = "tail";
  double volume_per_point = 1.0;
};

void add_input_flags(CLI::App* cmd, InputFlags& f) {
  cmd->add_option("--input", f.input, "Matrix file (.csv, .npy, or PCLOUD01 binary)")->required();
  cmd->add_option("--format", f.format, "Override format detection: csv, binary, npy");
  cmd->add_option("--vocab", f.vocab, "Token file, one line per matrix row");
  cmd->add_option("--metric", f.metric, "euclidean, circle-arclength or sphere-greatcircle")
      ->capture_default_str();
  cmd->add_option("--radius", f.radius, "Radius for the intrinsic metrics")->capture_default_str();
  cmd->add_option("--kmin", f.kmin, "First neighbour rank of the regression band (default 10)");
  cmd->add_option("--kmax-regress", f.kmax_regress,
                  "Last neighbour rank of the regression band (default min(p-1, 1000, p/20))");
  cmd->add_option("--kmax", f.kmax, "Neighbours computed per anchor (default min(p-1, 2048))");
  cmd->add_option("--seed", f.seed, "Seed for anchor subsampling")->capture_default_str();
  cmd->add_option("--workers", f.workers, "Worker threads (0: all cores)")->capture_default_str();
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--ricci-window", f.ricci_window, "Curvature rows: tail, band or extended")
      ->capture_default_str();
  cmd->add_option("--volume-per-point", f.volume_per_point,
                  "Monte-Carlo volume per point; 1 leaves it out of log K")
      ->capture_default_str();
}

RunConfig to_config(const InputFlags& f) {
  RunConfig c;
  c.input = f.input;
  if (!f.format.empty()) c.format = parse_format(f.format);
  if (!f.vocab.empty()) c.vocab = fs::path(f.vocab);
  c.metric = parse_metric(f.metric, f.radius);
  c.k_lo = f.kmin;
  c.k_hi = f.kmax_regress;
  c.k_max = f.kmax;
  c.seed = f.seed;
  c.workers = f.workers == 0 ? default_workers() : f.workers;
  c.out_dir = f.out;
  c.ricci_window = parse_ricci_window(f.ricci_window);
  if (!(f.volume_per_point > 0)) throw InvalidArgument("--volume-per-point must be > 0");
  c.volume_per_point = f.volume_per_point;
  return c;
}

std::string q(const CohortSummary& s) {
  return format_double(s.quartiles.q1) + " " + format_double(s.quartiles.q2) + " " +
         format_double(s.quartiles.q3);
}

void print_cohorts(const std::vector<CohortReport>& cohorts, const std::vector<KsReport>& ks) {
  std::cout << "cohort\tanchors\tparameter\tQ1 Q2 Q3\n";
  for (const auto& c : cohorts)
    for (const auto& p : c.parameters)
      std::cout << c.label << '\t' << c.anchors << '\t' << p.parameter << '\t' << q(p.summary) << '\n';
  for (const auto& k : ks)
    std::cout << "KS " << k.parameter << ' ' << k.cohort_a << " vs " << k.cohort_b
              << ": D=" << format_double(k.result.statistic) << " p=" << format_double(k.result.p_value)
              << '\n';
}

int run_stats(const std::string& vocab_path, const std::string& report_path) {
  if (vocab_path.empty() && report_path.empty())
    throw InvalidArgument("stats needs --vocab and/or --report");
  if (!vocab_path.empty()) {
    if (!fs::exists(vocab_path)) throw DataError("vocabulary not found: " + vocab_path);
    const auto tokens = load_vocab(vocab_path);
    std::size_t numeric = 0;
    for (const auto& t : tokens)
      if (classify_token(t) == TokenClass::numeric) ++numeric;
    std::cout << "tokens\t" << tokens.size() << "\nnumeric\t" << numeric << "\nnon-numeric\t"
              << tokens.size() - numeric << '\n';
  }
  if (!report_path.empty()) {
    std::ifstream in(report_path);
    if (!in) throw DataError("cannot open " + report_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed report: ") + e.what());
    }
    // recompute from the records so the numbers do not depend on the writer
    std::map<std::string, std::array<std::vector<double>, 3>> values;
    std::vector<std::string> order;
    std::map<std::string, std::size_t> anchors;
    try {
      for (const auto& r : j.at("records")) {
        const std::string c = r.at("cohort").get<std::string>();
        if (!anchors.count(c)) order.push_back(c);
        ++anchors[c];
        if (r.at("degenerate").get<bool>()) continue;
        const char* keys[3] = {"n_hat", "k_prime", "ric_hat"};
        for (int i = 0; i < 3; ++i)
          if (!r.at(keys[i]).is_null()) values[c][i].push_back(r.at(keys[i]).get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed report: ") + e.what());
    }
    static const char* kParams[3] = {"dimension", "scaling", "ricci"};
    std::vector<CohortReport> cohorts;
    std::vector<KsReport> ks;
    for (const auto& c : order) {
      CohortReport cr{c, anchors[c], {}};
      for (int i = 0; i < 3; ++i) cr.parameters.push_back({kParams[i], summarize(c, values[c][i])});
      cohorts.push_back(std::move(cr));
    }
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t b = a + 1; b < order.size(); ++b)
        for (int i = 0; i < 3; ++i)
          if (!values[order[a]][i].empty() && !values[order[b]][i].empty())
            ks.push_back({order[a], order[b], kParams[i],
                          ks_two_sample(values[order[a]][i], values[order[b]][i])});
    print_cohorts(cohorts, ks);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local dimension, scaling and curvature of point clouds from volume growth"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  InputFlags af;
  std::optional<std::size_t> anchor_count;
  std::string cohort = "none";
  bool curves = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Estimate geometry at every anchor");
  add_input_flags(analyze_cmd, af);
  analyze_cmd->add_option("--anchors", anchor_count, "Analyze a seeded sample of this many anchors");
  analyze_cmd->add_option("--cohort", cohort, "Cohort rule: none, numeric or label")->capture_default_str();
  analyze_cmd->add_flag("--curves", curves, "Also write per-anchor volume curves");

  std::string manifold = "circle", gen_metric = "euclidean", gen_out, gen_format;
  double gen_radius = 1.0;
  std::size_t gen_samples = 2000;
  std::uint64_t gen_seed = 0;
  std::vector<double> weights;
  auto* gen_cmd = app.add_subcommand("generate", "Sample a known space");
  gen_cmd->add_option("--manifold", manifold, "circle, sphere, disk or stratified")->capture_default_str();
  gen_cmd->add_option("--metric", gen_metric, "Metric the samples are meant for (checked for compatibility)")
      ->capture_default_str();
  gen_cmd->add_option("--radius", gen_radius, "R for circle, sphere and disk")->capture_default_str();
  gen_cmd->add_option("--samples", gen_samples, "Number of points")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--weights", weights, "Stratified circle,disk,ball weights")->delimiter(',')->expected(3);
  gen_cmd->add_option("--out", gen_out, "Output matrix path")->required();
  gen_cmd->add_option("--format", gen_format, "csv, binary or npy (default: from extension)");

  ValidationOptions vo;
  vo.seed = 1;
  std::vector<std::string> checks;
  std::string val_json, emb, emb_vocab;
  unsigned val_workers = 0;
  auto* val_cmd = app.add_subcommand("validate", "Run the known-space validation suite");
  val_cmd->add_option("--seed", vo.seed, "Base seed")->capture_default_str();
  val_cmd->add_option("--workers", val_workers, "Worker threads (0: all cores)")->capture_default_str();
  val_cmd->add_option("--check", checks, "Run only these checks (repeatable)");
  val_cmd->add_option("--out", val_json, "Write a JSON summary here");
  val_cmd->add_option("--embeddings", emb, "Token embedding matrix for the real-embedding check");
  val_cmd->add_option("--vocab", emb_vocab, "Vocabulary for --embeddings");

  InputFlags cf;
  std::vector<std::string> curve_anchors;
  auto* curve_cmd = app.add_subcommand("curve", "Write volume-versus-radius curves for chosen anchors");
  add_input_flags(curve_cmd, cf);
  curve_cmd->add_option("--anchors", curve_anchors, "Point indices or vocabulary tokens")
      ->required()
      ->delimiter(',');

  std::string stats_vocab, stats_report;
  auto* stats_cmd = app.add_subcommand("stats", "Token classes and cohort statistics");
  stats_cmd->add_option("--vocab", stats_vocab, "Count numeric / non-numeric tokens");
  stats_cmd->add_option("--report", stats_report, "Quartiles and KS tests from a report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*analyze_cmd) {
      RunConfig c = to_config(af);
      c.anchor_count = anchor_count;
      c.cohorts = parse_cohort_rule(cohort);
      c.write_curves = curves;
      const AnalysisReport rep = run_analyze(c);
      std::cout << "p=" << rep.p << " D=" << rep.dim << " band=[" << rep.band.k_lo << ", " << rep.band.k_hi
                << "] k_max=" << rep.k_max << " anchors=" << rep.records.size() << '\n';
      print_cohorts(rep.cohorts, rep.ks_tests);
      std::cout << "wrote " << (c.out_dir / "report.json").string() << " and "
                << (c.out_dir / "anchors.csv").string() << '\n';
      return 0;
    }
    if (*gen_cmd) {
      ManifoldSpec spec;
      spec.kind = parse_manifold(manifold);
      spec.radius = gen_radius;
      spec.metric = parse_metric(gen_metric, gen_radius);
      spec.sample_count = gen_samples;
      spec.seed = gen_seed;
      if (!weights.empty()) {
        spec.circle_weight = weights[0];
        spec.disk_weight = weights[1];
        spec.ball_weight = weights[2];
      }
      const PointCloud cloud = sample(spec);
      const fs::path out = gen_out;
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      save_matrix(out, cloud, gen_format.empty() ? std::nullopt : std::optional(parse_format(gen_format)));
      std::cout << "wrote " << cloud.size() << " x " << cloud.dim() << " to " << out.string() << '\n';
      if (cloud.has_labels()) {
        const fs::path lab = out.string() + ".labels.txt";
        std::ofstream lf(lab);
        for (const auto& l : cloud.labels()) lf << escape_token(l) << '\n';
        std::cout << "wrote labels to " << lab.string() << '\n';
      }
      return 0;
    }
    if (*val_cmd) {
      vo.workers = val_workers;
      if (!emb.empty()) vo.embeddings = fs::path(emb);
      if (!emb_vocab.empty()) vo.vocab = fs::path(emb_vocab);
      const auto results = run_validation(vo, checks);
      for (const auto& r : results) std::cout << format_result_line(r) << std::endl;
      const bool ok = all_gating_passed(results);
      const auto summary = validation_json(results, vo);
      if (!val_json.empty()) {
        std::ofstream out(val_json);
        out << summary.dump(2) << '\n';
      }
      std::cout << "summary " << nlohmann::json({{"passed", ok}, {"checks", results.size()}}).dump() << '\n';
      return ok ? 0 : kValidation;
    }
    if (*curve_cmd) {
      const RunConfig c = to_config(cf);
      const auto outs = run_curve(c, curve_anchors);
      for (const auto& o : outs)
        std::cout << "anchor " << o.anchor << ": " << o.csv.string() << " knees=" << o.diagnostics.knees.size()
                  << " gaps=" << o.diagnostics.gaps.size() << '\n';
      std::cout << "wrote " << (c.out_dir / "curves" / "diagnostics.json").string() << '\n';
      return 0;
    }
    if (*stats_cmd) return run_stats(stats_vocab, stats_report);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
