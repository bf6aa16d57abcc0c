#include "capra/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir = fs::temp_directory_path() / ("capra_cli_test_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(dir); }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

const fs::path& workdir() {
  static const TempDir t;
  return t.dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CAPRA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("eval biconjugate writes JSON and CSV") {
  const auto out = path("bic.json");
  REQUIRE(run("eval biconjugate --norm l2 --set-function cardinality --d 2 --points '[[0,2],[1,1]]' --out " + out) == 0);
  const auto rows = csv(path("bic.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == "index");
  CHECK(std::stod(rows[1][2]) == doctest::Approx(1).epsilon(1e-9));
  CHECK(std::stod(rows[2][2]) == doctest::Approx(2).epsilon(1e-9));
  const auto j = capra::Json::parse(slurp(out));
  CHECK(j["quantity"] == "biconjugate");
  CHECK(j["records"].size() == 2);
}

TEST_CASE("eval bounds row") {
  const auto out = path("bounds.json");
  REQUIRE(run("eval bounds --norm l2 --set-function cardinality --d 2 --points '[[1,1]]' --out " + out) == 0);
  const auto rows = csv(path("bounds.csv"));
  REQUIRE(rows.size() == 2);
  std::map<std::string, double> r;
  for (std::size_t c = 0; c < rows[0].size(); ++c)
    if (rows[0][c] != "x") r[rows[0][c]] = std::stod(rows[1][c]);
  CHECK(r["lower"] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(r["value"] == 2.0);
  CHECK(r["upper"] == doctest::Approx(2.0));
}

TEST_CASE("configuration errors exit with 2") {
  CHECK(run("eval L0F --norm l2 --set-function cardinality --d 2 --points '[]'") == 2);
  CHECK(run("eval L0F --norm l7x --set-function cardinality --d 2 --points '[[0,1]]'") == 2);
  CHECK(run("eval nonsense --norm l2 --set-function cardinality --d 2 --points '[[0,1]]'") == 2);
  CHECK(run("verify nonsense") == 2);
  CHECK(run("report") == 2);
  CHECK(run("") == 2);
}

TEST_CASE("verify exit codes") {
  CHECK(run("verify theorem1 --norm l2 --d 3 --trials 50 --out " + path("t1.json")) == 0);
  const auto j = capra::Json::parse(slurp(path("t1.json")));
  CHECK(j["passed"] == true);
  CHECK(run("verify theorem1 --norm linf --d 2 --trials 100 --out " + path("linf.json")) == 1);
  const auto k = capra::Json::parse(slurp(path("linf.json")));
  CHECK(k["passed"] == false);
  CHECK_FALSE(k["reports"][0]["witnesses"].empty());
  CHECK(run("verify appendixB --norm l1.5 --d 4 --trials 200") == 0);
}

TEST_CASE("report merges runs and samples a ray") {
  for (int s : {1, 2, 3})
    REQUIRE(run("verify subdiff --trials 20 --seed " + std::to_string(s) + " --out " + path("s" + std::to_string(s) + ".json")) == 0);
  const auto table = path("table.txt");
  REQUIRE(run("report " + path("s1.json") + " " + path("s2.json") + " " + path("s3.json") + " --out " + table) == 0);
  const auto text = slurp(table);
  CHECK(text.find("subdiff") != std::string::npos);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 4);

  REQUIRE(run("report --ray '[1,1]' --scale 0.1:2 --steps 20 --norm l2 --set-function cardinality --out " + path("ray.json")) == 0);
  const auto rows = csv(path("ray.csv"));
  REQUIRE(rows.size() == 21);
  CHECK(std::stod(rows[1][2]) == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(rows[20][2] == "inf");
}

TEST_CASE("identical configurations give identical JSON apart from the timestamp") {
  REQUIRE(run("verify theorem1 --trials 40 --seed 7 --out " + path("a.json")) == 0);
  REQUIRE(run("verify theorem1 --trials 40 --seed 7 --threads 3 --out " + path("b.json")) == 0);
  auto a = capra::Json::parse(slurp(path("a.json")));
  auto b = capra::Json::parse(slurp(path("b.json")));
  for (auto* j : {&a, &b})
    for (auto& r : (*j)["reports"]) r.erase("timestamp");
  a["reports"][0]["inputs"].erase("threads");
  b["reports"][0]["inputs"].erase("threads");
  CHECK(a == b);
}
