#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "qbn_cli_test";
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const std::string& args) {
  const fs::path out_path = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string(QBN_CLI_PATH) + " " + args + " > " + out_path.string() + " 2> " +
                          (scratch_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

fs::path write_dataset() {
  const fs::path path = scratch_dir() / "data.csv";
  std::ofstream out(path);
  out << "a,b,c\n";
  // Deterministic little table with visible dependence of c on a.
  const int rows[20][3] = {{0, 0, 0}, {0, 1, 0}, {1, 0, 1}, {1, 1, 1}, {0, 0, 0}, {1, 0, 1}, {0, 1, 0},
                           {1, 1, 1}, {0, 0, 1}, {1, 0, 1}, {0, 1, 0}, {1, 1, 0}, {0, 0, 0}, {1, 1, 1},
                           {0, 1, 0}, {1, 0, 1}, {0, 0, 0}, {1, 1, 1}, {1, 0, 1}, {0, 1, 0}};
  for (const auto& row : rows) out << row[0] << "," << row[1] << "," << row[2] << "\n";
  return path;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char ch : s)
    if (ch == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("enumerate dags text and JSON") {
  const CliResult text = run_cli("enumerate dags --n 3");
  CHECK(text.exit_code == 0);
  CHECK(count_lines(text.out) == 8);
  CHECK(text.out.find("G_0") != std::string::npos);
  CHECK(text.out.find("G_7") != std::string::npos);

  const CliResult json = run_cli("enumerate dags --n 3 --json");
  REQUIRE(json.exit_code == 0);
  const Json j = Json::parse(json.out);
  CHECK(j.at("count") == 8);
  CHECK(j.at("graphs")[7].at("parents") == Json::parse("[[],[0],[0,1]]"));
}

TEST_CASE("enumerate bound violations exit with a domain error") {
  CHECK(run_cli("enumerate dags --n 9").exit_code == 1);
}

TEST_CASE("usage problems exit with code 2") {
  CHECK(run_cli("enumerate dags").exit_code == 2);          // missing --n
  CHECK(run_cli("frobnicate").exit_code == 2);              // unknown subcommand
  CHECK(run_cli("posterior --model ordered").exit_code == 2);  // missing --data
}

TEST_CASE("enumerate combinations matches the table") {
  const CliResult r = run_cli("enumerate combinations --n 5 --k 3");
  CHECK(r.exit_code == 0);
  CHECK(count_lines(r.out) == 10);
  CHECK(r.out.rfind("0 1 2\n", 0) == 0);
  CHECK(r.out.find("2 3 4") != std::string::npos);
}

TEST_CASE("enumerate fcg and sym") {
  const CliResult fcg = run_cli("enumerate fcg --sigma 0,2,1 --json");
  REQUIRE(fcg.exit_code == 0);
  CHECK(Json::parse(fcg.out).at("graph").at("parents") == Json::parse("[[],[0,2],[0]]"));

  const CliResult sym = run_cli(R"(enumerate sym --graph '{"n":3,"parents":[[],[0],[0]]}' --json)");
  REQUIRE(sym.exit_code == 0);
  const Json j = Json::parse(sym.out);
  CHECK(j.at("count") == 2);
  CHECK(j.at("orders") == Json::parse("[[0,1,2],[0,2,1]]"));
}

TEST_CASE("score emits the evidence table") {
  const fs::path data = write_dataset();
  const CliResult full = run_cli("score --data " + data.string());
  REQUIRE(full.exit_code == 0);
  CHECK(Json::parse(full.out).at("entries").size() == 12);

  const CliResult narrow = run_cli("score --data " + data.string() + " --lmax 1");
  REQUIRE(narrow.exit_code == 0);
  const Json j = Json::parse(narrow.out);
  CHECK(j.at("entries").size() == 9);
  CHECK(j.at("config").at("lmax") == 1);

  const fs::path bad = scratch_dir() / "bad.csv";
  std::ofstream(bad) << "a,b\n0,1\n0\n";
  CHECK(run_cli("score --data " + bad.string()).exit_code == 1);
}

TEST_CASE("posterior models agree under the delta potential") {
  const fs::path data = write_dataset();
  const CliResult ordered =
      run_cli("posterior --data " + data.string() + " --model ordered --phi delta-id --feature edge:0-2");
  const CliResult unordered =
      run_cli("posterior --data " + data.string() + " --model unordered --feature edge:0-2");
  REQUIRE(ordered.exit_code == 0);
  REQUIRE(unordered.exit_code == 0);
  const double a = Json::parse(ordered.out).at("feature_value").get<double>();
  const double b = Json::parse(unordered.out).at("feature_value").get<double>();
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
  CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("per-graph posterior sums to one") {
  const fs::path data = write_dataset();
  const CliResult r = run_cli("posterior --data " + data.string() + " --model unordered --per-graph");
  REQUIRE(r.exit_code == 0);
  const Json j = Json::parse(r.out);
  REQUIRE(j.at("per_graph").size() == 8);
  double total = 0.0;
  for (const auto& e : j.at("per_graph")) total += e.at("posterior").get<double>();
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("estimate agrees with posterior and dumps circuits") {
  const fs::path data = write_dataset();
  const fs::path circuit = scratch_dir() / "circuit.json";
  const CliResult est = run_cli("estimate --data " + data.string() + " --feature edge:0-2 --emit-circuit " +
                                circuit.string());
  REQUIRE(est.exit_code == 0);
  const Json j = Json::parse(est.out);
  CHECK(j.at("discrepancy").get<double>() < 1e-8);
  CHECK(j.at("config").at("mode") == "exact");

  const CliResult sim = run_cli("simulate --circuit " + circuit.string() + " --qubits 16,17 --shots 1000 --seed 4");
  REQUIRE(sim.exit_code == 0);
  const Json s = Json::parse(sim.out);
  CHECK(std::abs(s.at("norm").get<double>() - 1.0) < 1e-10);
  CHECK(s.contains("histogram"));

  const fs::path dump = scratch_dir() / "state";
  const CliResult dumped = run_cli("simulate --circuit " + circuit.string() + " --dump-state " + dump.string());
  REQUIRE(dumped.exit_code == 0);
  std::ifstream header(dump.string() + ".json");
  REQUIRE(header.good());
  const Json h = Json::parse(header);
  CHECK(h.at("qubit_count") == 18);
  CHECK(fs::file_size(dump.string() + ".bin") == (std::uintmax_t{1} << 18) * 16);
}

TEST_CASE("sampled estimates carry an interval") {
  const fs::path data = write_dataset();
  const CliResult r = run_cli("estimate --data " + data.string() +
                              " --feature edge:0-2 --mode sampled --shots 20000 --seed 9");
  REQUIRE(r.exit_code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j.at("sampled_lo").get<double>() <= j.at("sampled_posterior").get<double>());
  CHECK(j.at("sampled_posterior").get<double>() <= j.at("sampled_hi").get<double>());
  CHECK(j.at("seed") == 9);
}

TEST_CASE("reports are reproducible byte for byte") {
  const fs::path data = write_dataset();
  const fs::path out1 = scratch_dir() / "r1.json";
  const fs::path out2 = scratch_dir() / "r2.json";
  const std::string cmd = "estimate --data " + data.string() + " --feature edge:1-2 --mode sampled --seed 3 -o ";
  REQUIRE(run_cli(cmd + out1.string()).exit_code == 0);
  REQUIRE(run_cli(cmd + out2.string()).exit_code == 0);
  std::ifstream a(out1), b(out2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
}

TEST_CASE("report merges result files") {
  const fs::path data = write_dataset();
  const fs::path p1 = scratch_dir() / "m1.json";
  const fs::path p2 = scratch_dir() / "m2.json";
  REQUIRE(run_cli("posterior --data " + data.string() + " --model unordered -o " + p1.string()).exit_code == 0);
  REQUIRE(run_cli("posterior --data " + data.string() + " --model ordered -o " + p2.string()).exit_code == 0);
  const CliResult merged = run_cli("report " + p1.string() + " " + p2.string());
  REQUIRE(merged.exit_code == 0);
  const Json j = Json::parse(merged.out);
  REQUIRE(j.at("results").size() == 2);
  CHECK(j.at("results")[0].at("payload").at("model") == "unordered");
  CHECK(j.at("results")[1].at("payload").at("model") == "ordered");
}

TEST_CASE("config can widen inferred cardinalities") {
  const fs::path data = write_dataset();
  const fs::path cfg = scratch_dir() / "cards.json";
  std::ofstream(cfg) << R"({"cardinalities": [3, 2, 2]})";
  const CliResult with = run_cli("posterior --data " + data.string() + " --model unordered --config " + cfg.string());
  const CliResult without = run_cli("posterior --data " + data.string() + " --model unordered");
  REQUIRE(with.exit_code == 0);
  REQUIRE(without.exit_code == 0);
  // A wider value range changes the marginal likelihood, so the reports differ.
  CHECK(Json::parse(with.out).at("denominator_log") != Json::parse(without.out).at("denominator_log"));
}

TEST_CASE("a tabulated order potential can mimic the delta potential") {
  const fs::path data = write_dataset();
  const fs::path cfg = scratch_dir() / "phi.json";
  // Weight only the natural conditioning sets: identical to delta-id.
  std::ofstream(cfg) << R"({"phi": "table", "phi_table": [
    {"j": 0, "S": [], "value": 1.0},
    {"j": 1, "S": [0], "value": 1.0},
    {"j": 2, "S": [0, 1], "value": 1.0}]})";
  const CliResult table =
      run_cli("posterior --data " + data.string() + " --model ordered --config " + cfg.string() +
              " --feature edge:0-2");
  const CliResult delta = run_cli("posterior --data " + data.string() +
                                  " --model ordered --phi delta-id --feature edge:0-2");
  REQUIRE(table.exit_code == 0);
  REQUIRE(delta.exit_code == 0);
  const double a = Json::parse(table.out).at("feature_value").get<double>();
  const double b = Json::parse(delta.out).at("feature_value").get<double>();
  CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("config file fills unset options") {
  const fs::path data = write_dataset();
  const fs::path cfg = scratch_dir() / "cfg.json";
  std::ofstream(cfg) << R"({"lmax": 1, "feature": "edge:0-2"})";
  const CliResult r = run_cli("score --data " + data.string() + " --config " + cfg.string());
  REQUIRE(r.exit_code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j.at("entries").size() == 9);
  CHECK(j.at("feature_applied") == true);

  // An explicit flag wins over the config file.
  const CliResult flag = run_cli("score --data " + data.string() + " --config " + cfg.string() + " --feature trivial");
  REQUIRE(flag.exit_code == 0);
  CHECK(Json::parse(flag.out).at("feature_applied") == false);
}
