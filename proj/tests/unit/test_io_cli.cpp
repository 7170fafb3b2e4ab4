#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "strata/error.hpp"
#include "strata/matrix_io.hpp"
#include "strata/report.hpp"
#include "strata/synthetic.hpp"
#include "strata/validation.hpp"

using namespace strata;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory per test case, removed afterwards.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("strata_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI with stdout/stderr captured to files; returns the exit code.
int run_cli(const std::string& args, const Scratch& s, std::string* err = nullptr) {
  const fs::path out = s / "cli_stdout.txt", e = s / "cli_stderr.txt";
  const std::string cmd = std::string(STRATA_CLI) + " " + args + " >" + out.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  if (err) *err = read_bytes(e);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool bit_equal(const PointCloud& a, const PointCloud& b) {
  return a.size() == b.size() && a.dim() == b.dim() &&
         std::memcmp(a.coords().data(), b.coords().data(), a.coords().size() * sizeof(double)) == 0;
}

PointCloud random_cloud(std::size_t p, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 100);
  std::vector<double> xs(p * d);
  for (auto& x : xs) x = g(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
  return PointCloud(std::move(xs), d);
}

fs::path write_circle(const Scratch& s, std::size_t n, std::uint64_t seed,
                      const std::string& name = "circle.csv") {
  ManifoldSpec spec;
  spec.kind = ManifoldKind::circle;
  spec.sample_count = n;
  spec.seed = seed;
  const fs::path p = s / name;
  save_matrix(p, sample(spec));
  return p;
}

// Points on a line whose distances from the origin follow k = r up to
// rank 100 and k = 100 (r / 100)^3 beyond: one knee at log r = log 100.
fs::path write_knee_fixture(const Scratch& s) {
  std::ostringstream csv;
  csv << "0\n";
  for (int k = 1; k <= 999; ++k) {
    const double r = k <= 100 ? k : 100.0 * std::cbrt(k / 100.0);
    csv << format_double(r) << '\n';
  }
  const fs::path p = s / "knee.csv";
  write_text(p, csv.str());
  return p;
}

}  // namespace

TEST_CASE("CSV 3x2") {
  Scratch s;
  write_text(s / "a.csv", "0,0\n1,0\n0,1\n");
  const auto c = load_matrix(s / "a.csv");
  CHECK(c.size() == 3);
  CHECK(c.dim() == 2);
  CHECK(c.row(1)[0] == 1.0);
  CHECK(c.row(2)[1] == 1.0);
}

TEST_CASE("CSV header, comments, blank lines and CRLF") {
  Scratch s;
  write_text(s / "h.csv", "x,y\r\n# a comment\r\n1.5, -2\r\n\r\n3e-2,4\r\n");
  const auto c = load_matrix(s / "h.csv");
  REQUIRE(c.size() == 2);
  CHECK(c.row(0)[1] == -2.0);
  CHECK(c.row(1)[0] == 0.03);
}

TEST_CASE("CSV errors name the row") {
  Scratch s;
  write_text(s / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(load_matrix(s / "ragged.csv"), DataError);
  write_text(s / "nan.csv", "1,2\n3,4\nnan,5\n");
  try {
    load_matrix(s / "nan.csv");
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  write_text(s / "inf.csv", "1,inf\n3,4\n");
  CHECK_THROWS_AS(load_matrix(s / "inf.csv"), DataError);
  write_text(s / "junk.csv", "1,2\n3,4x\n");
  CHECK_THROWS_AS(load_matrix(s / "junk.csv"), DataError);
  CHECK_THROWS_AS(load_matrix(s / "missing.csv"), DataError);
}

TEST_CASE("format detection by extension") {
  CHECK(detect_format("a.csv") == MatrixFormat::csv);
  CHECK(detect_format("a.txt") == MatrixFormat::csv);
  CHECK(detect_format("a.npy") == MatrixFormat::npy);
  CHECK(detect_format("a.bin") == MatrixFormat::binary);
  CHECK(parse_format("npy") == MatrixFormat::npy);
  CHECK_THROWS_AS(parse_format("parquet"), InvalidArgument);
}

TEST_CASE("binary round trip is bit-identical") {
  Scratch s;
  const auto c = random_cloud(57, 9, 51);
  save_matrix(s / "c.bin", c);
  CHECK(bit_equal(load_matrix(s / "c.bin"), c));
}

TEST_CASE("binary layout: magic, little-endian header length, JSON header, payload") {
  Scratch s;
  const PointCloud c({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, 3);
  save_matrix(s / "c.bin", c, MatrixFormat::binary, ElementType::f32);
  const std::string bytes = read_bytes(s / "c.bin");
  REQUIRE(bytes.size() > 12);
  CHECK(bytes.substr(0, 8) == "PCLOUD01");
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t len = u[8] | (u[9] << 8) | (u[10] << 16) | (static_cast<std::uint32_t>(u[11]) << 24);
  const json header = json::parse(bytes.substr(12, len));
  CHECK(header["p"] == 2);
  CHECK(header["D"] == 3);
  CHECK(header["dtype"] == "f32");
  CHECK(header["order"] == "row");
  CHECK(bytes.size() == 12 + len + 6 * 4);
  float last = 0;
  std::memcpy(&last, bytes.data() + bytes.size() - 4, 4);
  CHECK(last == 6.0f);
  CHECK(bit_equal(load_matrix(s / "c.bin"), c));
}

TEST_CASE("binary header errors") {
  Scratch s;
  write_text(s / "bad.bin", "PCLOUD02\x02\x00\x00\x00{}");
  CHECK_THROWS_AS(load_matrix(s / "bad.bin"), DataError);
  std::string h = R"({"p":2,"D":2,"dtype":"f64","order":"row"})";
  std::string bytes = "PCLOUD01";
  bytes.push_back(static_cast<char>(h.size()));
  bytes += std::string(3, '\0') + h + std::string(8, '\0');  // payload too short
  write_text(s / "short.bin", bytes);
  CHECK_THROWS_AS(load_matrix(s / "short.bin"), DataError);
}

TEST_CASE("npy fixture written by numpy: 5x4 little-endian f4") {
  const auto c = load_matrix(fs::path(STRATA_TEST_DATA) / "fixture_5x4_f32.npy");
  REQUIRE(c.size() == 5);
  REQUIRE(c.dim() == 4);
  // numpy: (arange(20, dtype=float32).reshape(5, 4) * 0.1 - 0.7), values as doubles
  const double expect[5][4] = {
      {-0.699999988079071, -0.5999999642372131, -0.5, -0.3999999761581421},
      {-0.29999998211860657, -0.19999998807907104, -0.09999996423721313, 0.0},
      {0.10000002384185791, 0.20000004768371582, 0.30000001192092896, 0.40000003576278687},
      {0.5000000596046448, 0.6000000834465027, 0.699999988079071, 0.800000011920929},
      {0.9000000357627869, 1.0, 1.1000001430511475, 1.2000000476837158}};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) CHECK(c.row(i)[j] == expect[i][j]);
}

TEST_CASE("npy round trip for both element types") {
  Scratch s;
  const auto c = random_cloud(13, 5, 52);
  save_matrix(s / "c.npy", c);
  CHECK(bit_equal(load_matrix(s / "c.npy"), c));
  const PointCloud small({0.5, -1.25, 3.0, 8.0}, 2);
  save_matrix(s / "f.npy", small, std::nullopt, ElementType::f32);
  CHECK(bit_equal(load_matrix(s / "f.npy"), small));
  const std::string bytes = read_bytes(s / "f.npy");
  CHECK(bytes.substr(1, 5) == "NUMPY");
  CHECK(bytes.find("'descr': '<f4'") != std::string::npos);
  CHECK((10 + static_cast<unsigned char>(bytes[8])) % 64 == 0);
}

TEST_CASE("npy rejects Fortran order and other dtypes") {
  Scratch s;
  auto npy = [](const std::string& dict) {
    std::string h = dict;
    while ((10 + h.size() + 1) % 64) h.push_back(' ');
    h.push_back('\n');
    std::string out = "\x93NUMPY\x01";
    out.push_back('\0');
    out.push_back(static_cast<char>(h.size() & 0xff));
    out.push_back(static_cast<char>(h.size() >> 8));
    return out + h + std::string(32, '\0');
  };
  write_text(s / "f.npy", npy("{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }"));
  CHECK_THROWS_AS(load_matrix(s / "f.npy"), DataError);
  write_text(s / "i.npy", npy("{'descr': '<i4', 'fortran_order': False, 'shape': (2, 2), }"));
  CHECK_THROWS_AS(load_matrix(s / "i.npy"), DataError);
  write_text(s / "ok.npy", npy("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }"));
  CHECK(load_matrix(s / "ok.npy").size() == 2);
}

TEST_CASE("CSV floats use shortest round-trip text and reload bitwise") {
  Scratch s;
  const auto c = random_cloud(40, 6, 53);
  save_matrix(s / "c.csv", c);
  CHECK(bit_equal(load_matrix(s / "c.csv"), c));
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("vocabulary: lines, escapes, leading space") {
  Scratch s;
  write_text(s / "two.txt", "hello\nworld\n");
  CHECK(load_vocab(s / "two.txt") == std::vector<std::string>{"hello", "world"});
  write_text(s / "esc.txt", "\\u0020the\nback\\\\slash\n\\u00e9\n\\ud83d\\ude00\r\n");
  const auto v = load_vocab(s / "esc.txt");
  REQUIRE(v.size() == 4);
  CHECK(v[0] == " the");
  CHECK(v[1] == "back\\slash");
  CHECK(v[2] == "\xc3\xa9");
  CHECK(v[3] == "\xf0\x9f\x98\x80");
  write_text(s / "bad.txt", "ok\nbad\\q\n");
  CHECK_THROWS_AS(load_vocab(s / "bad.txt"), DataError);
  write_text(s / "lone.txt", "\\ud83d\n");
  CHECK_THROWS_AS(load_vocab(s / "lone.txt"), DataError);
}

TEST_CASE("escape_token round trips through unescape_token") {
  for (const std::string t : {" lead", "tab\there", "a\\b", "\x7f", "plain", "", "new\nline"})
    CHECK(unescape_token(escape_token(t)) == t);
  CHECK(escape_token(" x") == "\\u0020x");
}

TEST_CASE("vocabulary length must match the cloud") {
  Scratch s;
  const auto m = write_circle(s, 50, 1);
  write_text(s / "v.txt", "a\nb\n");
  RunConfig c;
  c.input = m;
  c.vocab = s / "v.txt";
  c.out_dir = s / "out";
  CHECK_THROWS_AS(analyze(c), DataError);
}

TEST_CASE("run_analyze on a circle: IQR of dimension contains 1") {
  Scratch s;
  RunConfig c;
  c.input = write_circle(s, 2000, 2);
  c.metric = Metric::euclidean();
  c.anchor_count = 500;
  c.seed = 9;
  c.out_dir = s / "out";
  const auto rep = run_analyze(c);
  CHECK(rep.records.size() == 500);
  REQUIRE(rep.cohorts.size() == 1);
  const auto& dim = rep.cohorts[0].parameters[0];
  CHECK(dim.parameter == "dimension");
  CHECK(dim.summary.quartiles.q1 <= 1.0);
  CHECK(dim.summary.quartiles.q3 >= 1.0);
  CHECK(fs::exists(c.out_dir / "report.json"));
  const auto j = json::parse(read_bytes(c.out_dir / "report.json"));
  CHECK(j["records"].size() == 500);
  CHECK(j["band"]["k_hi"] == 100);
  // every emitted estimate satisfies K' = exp(log K + sigma^2 / 2)
  for (const auto& r : rep.records) {
    const auto& e = r.analysis.estimate;
    if (!e.degenerate) CHECK(e.k_prime == doctest::Approx(std::exp(e.log_k_hat + e.sigma * e.sigma / 2)));
  }
}

TEST_CASE("rerunning with the same seed gives byte-identical CSV") {
  Scratch s;
  RunConfig c;
  c.input = write_circle(s, 600, 3);
  c.anchor_count = 100;
  c.seed = 4;
  c.out_dir = s / "a";
  run_analyze(c);
  c.out_dir = s / "b";
  c.workers = 3;
  run_analyze(c);
  const auto a = read_bytes(s / "a" / "anchors.csv");
  CHECK(!a.empty());
  CHECK(a == read_bytes(s / "b" / "anchors.csv"));
  c.seed = 5;
  c.out_dir = s / "c";
  run_analyze(c);
  CHECK(a != read_bytes(s / "c" / "anchors.csv"));
}

TEST_CASE("anchor sampling") {
  const auto all = choose_anchors(10, std::nullopt, 1);
  CHECK(all.size() == 10);
  const auto some = choose_anchors(1000, 50, 7);
  CHECK(some.size() == 50);
  CHECK(std::is_sorted(some.begin(), some.end()));
  CHECK(std::adjacent_find(some.begin(), some.end()) == some.end());
  CHECK(some == choose_anchors(1000, 50, 7));
  CHECK_THROWS_AS(choose_anchors(10, 0, 1), InvalidArgument);
}

TEST_CASE("band resolution") {
  RunConfig c;
  CHECK(resolve_band(c, 2000, 2048).k_hi == 100);
  c.k_lo = 5;
  c.k_hi = 40;
  CHECK(resolve_band(c, 2000, 2048).k_lo == 5);
  CHECK_THROWS_AS(resolve_band(c, 2000, 30), InvalidArgument);
  CHECK_THROWS_AS(resolve_band(c, 20, 19), DataError);
  RunConfig d;
  CHECK_THROWS_AS(resolve_band(d, 2, 1), DataError);
}

TEST_CASE("numeric cohorts and KS tests") {
  Scratch s;
  const auto m = write_circle(s, 300, 6);
  std::string vocab;
  for (int i = 0; i < 300; ++i) vocab += (i % 3 ? std::string("word") : std::to_string(i)) + "\n";
  write_text(s / "v.txt", vocab);
  RunConfig c;
  c.input = m;
  c.vocab = s / "v.txt";
  c.cohorts = CohortRule::numeric;
  c.out_dir = s / "out";
  const auto rep = run_analyze(c);
  REQUIRE(rep.cohorts.size() == 2);
  std::size_t total = 0;
  for (const auto& co : rep.cohorts) total += co.anchors;
  CHECK(total == 300);
  CHECK(rep.ks_tests.size() == 3);
  for (const auto& k : rep.ks_tests) {
    CHECK(k.result.statistic >= 0);
    CHECK(k.result.p_value <= 1);
  }
  CHECK(rep.records[0].token == std::optional<std::string>("0"));
  CHECK(rep.records[0].cohort == "numeric");
  CHECK(rep.records[1].cohort == "non-numeric");
}

TEST_CASE("run_curve: one CSV per anchor and a diagnostics file") {
  Scratch s;
  RunConfig c;
  c.input = write_circle(s, 400, 7);
  c.out_dir = s / "out";
  const auto outs = run_curve(c, {"0", "5", "17"});
  REQUIRE(outs.size() == 3);
  for (const auto& o : outs) CHECK(fs::exists(o.csv));
  CHECK(fs::exists(c.out_dir / "curves" / "anchor_17.csv"));
  const auto d = json::parse(read_bytes(c.out_dir / "curves" / "diagnostics.json"));
  CHECK(d["anchors"].size() == 3);
  const auto csv = read_bytes(c.out_dir / "curves" / "anchor_0.csv");
  CHECK(csv.rfind("k,r,log_r,log_v\n", 0) == 0);
  CHECK_THROWS_AS(run_curve(c, {"nosuchtoken"}), InvalidArgument);
}

TEST_CASE("run_curve: tied radii appear as repeated r") {
  Scratch s;
  // anchor 0 at the origin with pairs of points at equal distance
  std::string csv = "0,0\n";
  for (int k = 1; k <= 20; ++k) csv += std::to_string(k) + ",0\n-" + std::to_string(k) + ",0\n";
  write_text(s / "tied.csv", csv);
  RunConfig c;
  c.input = s / "tied.csv";
  c.k_lo = 2;
  c.k_hi = 30;
  c.out_dir = s / "out";
  const auto outs = run_curve(c, {"0"});
  std::istringstream in(read_bytes(outs[0].csv));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> r;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    r.push_back(line.substr(a + 1, b - a - 1));
  }
  REQUIRE(r.size() == 40);
  CHECK(r[0] == r[1]);
  CHECK(r[0] == "1");
  CHECK(r[38] == r[39]);
}

TEST_CASE("run_curve: the knee fixture reports one knee") {
  Scratch s;
  RunConfig c;
  c.input = write_knee_fixture(s);
  c.out_dir = s / "out";
  const auto outs = run_curve(c, {"0"});
  const auto d = json::parse(read_bytes(c.out_dir / "curves" / "diagnostics.json"));
  const auto& knees = d["anchors"][0]["knees"];
  REQUIRE(knees.size() == 1);
  CHECK(knees[0]["log_r"].get<double>() == doctest::Approx(std::log(100.0)).epsilon(0.02));
  CHECK(knees[0]["slope_before"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(knees[0]["slope_after"].get<double>() == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("anchor resolution prefers tokens, then indices") {
  const std::vector<std::string> vocab{"a", "7", "b"};
  CHECK(resolve_anchors({"b", "7", "0"}, &vocab, 3) == std::vector<std::size_t>{2, 1, 0});
  CHECK_THROWS_AS(resolve_anchors({"5"}, &vocab, 3), InvalidArgument);
  CHECK_THROWS_AS(resolve_anchors({"zz"}, nullptr, 3), InvalidArgument);
}

TEST_CASE("CLI: 2-point input exits with a data error") {
  Scratch s;
  write_text(s / "two.csv", "0,0\n1,1\n");
  std::string err;
  const int rc = run_cli("analyze --input " + (s / "two.csv").string() + " --out " + (s / "o").string(), s, &err);
  CHECK(rc == 2);
  CHECK(err.find("error:") != std::string::npos);
}

TEST_CASE("CLI exit codes") {
  Scratch s;
  CHECK(run_cli("--help", s) == 0);
  CHECK(run_cli("analyze --no-such-flag", s) == 1);
  CHECK(run_cli("", s) == 1);
  CHECK(run_cli("analyze --input " + (s / "missing.csv").string(), s) == 2);
  const auto m = write_circle(s, 200, 8);
  CHECK(run_cli("analyze --input " + m.string() + " --kmin 50 --kmax-regress 20 --out " + (s / "o").string(), s) == 1);
  CHECK(run_cli("analyze --input " + m.string() + " --metric taxicab", s) == 1);
  CHECK(run_cli("analyze --input " + m.string() + " --out " + (s / "ok").string(), s) == 0);
  CHECK(fs::exists(s / "ok" / "anchors.csv"));
}

TEST_CASE("CLI generate writes a loadable cloud and stratum labels") {
  Scratch s;
  const auto out = s / "strat.npy";
  CHECK(run_cli("generate --manifold stratified --samples 300 --seed 2 --out " + out.string(), s) == 0);
  const auto c = load_matrix(out);
  CHECK(c.size() == 300);
  CHECK(c.dim() == 3);
  CHECK(load_vocab(out.string() + ".labels.txt").size() == 300);
  CHECK(run_cli("generate --manifold torus --out " + (s / "x.csv").string(), s) == 1);
}

TEST_CASE("CLI validate with a single-check filter") {
  Scratch s;
  const auto json_out = s / "v.json";
  CHECK(run_cli("validate --check estimator-oracles --out " + json_out.string(), s) == 0);
  const auto j = json::parse(read_bytes(json_out));
  REQUIRE(j["checks"].size() == 1);
  CHECK(j["checks"][0]["name"] == "estimator-oracles");
  CHECK(run_cli("validate --check no-such-check", s) == 1);
}

TEST_CASE("CLI stats counts token classes") {
  Scratch s;
  write_text(s / "v.txt", "a\n1\nb2\n\\u0020c\n");
  CHECK(run_cli("stats --vocab " + (s / "v.txt").string(), s) == 0);
  const auto out = read_bytes(s / "cli_stdout.txt");
  CHECK(out.find("numeric") != std::string::npos);
  CHECK(out.find('2') != std::string::npos);
}

TEST_CASE("validation API: filter and skipped check") {
  ValidationOptions o;
  const auto r = run_validation(o, {"real-embeddings"});
  REQUIRE(r.size() == 1);
  CHECK(r[0].status == CheckStatus::skip);
  CHECK_FALSE(r[0].gating);
  CHECK(all_gating_passed(r));
  CHECK(format_result_line(r[0]).rfind("criterion 8 real-embeddings: SKIP", 0) == 0);
  CHECK_THROWS_AS(run_validation(o, {"bogus"}), InvalidArgument);
}
