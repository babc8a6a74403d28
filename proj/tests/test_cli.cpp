#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code;
  std::string output;
};

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("depas_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  std::ostringstream out;
  out << file.rdbuf();
  return out.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path capture = scratch_dir() / ("out" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(DEPAS_CLI_PATH) + " " + args + " >" + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return RunResult{WEXITSTATUS(status), slurp(capture)};
}

fs::path write_trace(const std::string& name, const std::string& body) {
  const fs::path path = scratch_dir() / name;
  std::ofstream file(path);
  file << body;
  return path;
}

std::vector<std::string> data_rows(const std::string& output) {
  std::vector<std::string> rows;
  std::istringstream in(output);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(line);
  }
  return rows;
}

}  // namespace

TEST_CASE("min-n golden values through the CLI") {
  const RunResult run = run_cli("min-n --delta 0.15 --p0 0.99 --method both --format csv");
  REQUIRE(run.exit_code == 0);
  CHECK(run.output.find("chernoff,41,") != std::string::npos);
  CHECK(run.output.find("binomial,30,") != std::string::npos);
  CHECK(run.output.find("# config:") != std::string::npos);

  const RunResult narrow = run_cli("min-n --l0 0.8 --delta 0.05 --p0 0.99 --method both --format csv");
  REQUIRE(narrow.exit_code == 0);
  CHECK(narrow.output.find("chernoff,342,") != std::string::npos);
  CHECK(narrow.output.find("binomial,224,") != std::string::npos);
}

TEST_CASE("min-n rejects an impossible band") {
  CHECK(run_cli("min-n --delta 1.0").exit_code == 2);
  CHECK(run_cli("min-n").exit_code == 2);  // --delta is required
  CHECK(run_cli("min-n --delta 0.1 --format yaml").exit_code == 2);
}

TEST_CASE("min-delta golden values through the CLI") {
  const RunResult run = run_cli("min-delta --n 100 --p0 0.99 --method both --format csv");
  REQUIRE(run.exit_code == 0);
  CHECK(run.output.find("chernoff,0.094,") != std::string::npos);
  CHECK(run.output.find("binomial,0.077,") != std::string::npos);
  const RunResult big = run_cli("min-delta --n 1000 --method chernoff --format csv");
  REQUIRE(big.exit_code == 0);
  CHECK(big.output.find("chernoff,0.030,") != std::string::npos);
}

TEST_CASE("min-delta reports infeasible sizes with exit 3") {
  const RunResult run = run_cli("min-delta --n 5 --p0 0.99");
  CHECK(run.exit_code == 3);
  CHECK(run.output.find("infeasible") != std::string::npos);
}

TEST_CASE("json output is well formed and carries full precision") {
  const RunResult run = run_cli("min-delta --n 100 --method chernoff --format json-like");
  REQUIRE(run.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(run.output);
  CHECK(doc["config"]["n"] == 100);
  CHECK(doc["results"].size() == 1);
  CHECK(doc["results"][0]["delta_star"].get<double>() == 0.094);
  CHECK(doc["results"][0]["delta_star_full"].get<double>() > 0.094);
  CHECK(doc["results"][0].contains("wall_s"));

  const RunResult njson = run_cli("min-n --delta 0.15 --method chernoff --format json");
  REQUIRE(njson.exit_code == 0);
  CHECK(nlohmann::json::parse(njson.output)["results"][0]["n_star"] == 41);
}

TEST_CASE("sweep emits one row per point with both methods") {
  const RunResult run = run_cli("sweep --param delta --from 0.13 --to 0.15 --step 0.01");
  REQUIRE(run.exit_code == 0);
  const std::vector<std::string> rows = data_rows(run.output);
  REQUIRE(rows.size() == 4);  // header + three points
  CHECK(rows[0] == "delta,chernoff_n,binomial_n");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    long long chern = 0, binom = 0;
    double delta = 0.0;
    REQUIRE(std::sscanf(rows[i].c_str(), "%lf,%lld,%lld", &delta, &chern, &binom) == 3);
    CHECK(binom <= chern);
  }
}

TEST_CASE("sweep covers the reference band-width grid") {
  const RunResult run = run_cli("sweep --param delta --from 0.05 --to 0.15 --step 0.005");
  REQUIRE(run.exit_code == 0);
  const std::vector<std::string> rows = data_rows(run.output);
  REQUIRE(rows.size() == 22);  // header + 21 grid points
  CHECK(rows[1].rfind("0.050,342,224", 0) == 0);
  CHECK(rows.back().rfind("0.150,41,30", 0) == 0);
}

TEST_CASE("sweep rejects an empty range") {
  CHECK(run_cli("sweep --param delta --from 0.1 --to 0.05 --step 0.01").exit_code == 2);
  CHECK(run_cli("sweep --param delta --from 0.1 --to 0.15 --step 0").exit_code == 2);
  CHECK(run_cli("sweep --param load --from 0.1 --to 0.15 --step 0.01").exit_code == 2);
}

TEST_CASE("simulate is byte-identical for a fixed seed") {
  const fs::path trace = write_trace("trace.csv", "cycle,workload\n0,8\n10,16\n20,8\n");
  const fs::path out1 = scratch_dir() / "sim1.csv";
  const fs::path out2 = scratch_dir() / "sim2.csv";
  const std::string base = "simulate --trace " + trace.string() +
                           " --n0 10 --l0 0.8 --delta 0.1 --cycles 25 --seed 42 --out ";
  REQUIRE(run_cli(base + out1.string()).exit_code == 0);
  REQUIRE(run_cli(base + out2.string()).exit_code == 0);
  const std::string body = slurp(out1);
  CHECK(body == slurp(out2));
  CHECK(body.find("cycle,n_before,load_before,additions,removals,n_after,load_after,in_interval\n") !=
        std::string::npos);
  CHECK(body.find("# summary:") != std::string::npos);
  CHECK(body.find("seed=42") != std::string::npos);

  // Row bookkeeping: the population change equals additions minus removals.
  std::istringstream in(body);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'c') continue;
    long long cycle, n_before, adds, rems, n_after;
    double load_before, load_after;
    int inside;
    REQUIRE(std::sscanf(line.c_str(), "%lld,%lld,%lf,%lld,%lld,%lld,%lf,%d", &cycle, &n_before,
                        &load_before, &adds, &rems, &n_after, &load_after, &inside) == 8);
    REQUIRE(n_after == n_before + adds - rems);
    ++rows;
  }
  CHECK(rows == 25);
}

TEST_CASE("simulate rejects missing and malformed traces") {
  CHECK(run_cli("simulate --trace /nonexistent.csv --n0 10 --delta 0.1").exit_code == 2);
  const fs::path bad = write_trace("bad.csv", "cycle,workload\n5,8\n2,9\n");
  CHECK(run_cli("simulate --trace " + bad.string() + " --n0 10 --delta 0.1").exit_code == 2);
}

TEST_CASE("verify agrees with the enumerable case") {
  const RunResult run =
      run_cli("verify --n 2 --load 1.2 --l0 0.8 --delta 0.2 --trials 200000 --seed 7");
  REQUIRE(run.exit_code == 0);
  CHECK(run.output.find("exact=0.500000") != std::string::npos);
  CHECK(run.output.find("dominance=PASS agreement=PASS") != std::string::npos);
  CHECK(run.output.find("bound=b1") != std::string::npos);
  CHECK(run.output.find("seed=7") != std::string::npos);
}

TEST_CASE("verify output is deterministic for a fixed seed") {
  const std::string cmd =
      "verify --n 20 --load 1.1 --delta 0.12 --trials 50000 --seed 11 --format csv";
  const RunResult a = run_cli(cmd);
  const RunResult b = run_cli(cmd);
  REQUIRE(a.exit_code == 0);
  CHECK(a.output == b.output);
}

TEST_CASE("verify rejects loads outside the addition regime") {
  CHECK(run_cli("verify --n 2 --load 0.7 --delta 0.2 --trials 100").exit_code == 2);
  CHECK(run_cli("verify --n 2 --load 1.7 --delta 0.2 --trials 100").exit_code == 2);
}

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("min-n --help").exit_code == 0);
  CHECK(run_cli("frobnicate").exit_code == 2);
}
