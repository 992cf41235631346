#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <doctest.h>

#include "bhm/accum.hpp"
#include "bhm/spline.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("bhm-cli-" + std::to_string(::getpid()) + "-" +
                                       std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
  static inline int counter = 0;
};

struct Result {
  int code;
  std::string out, err;
};

Result bhm_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = bhm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> table(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    for (double v; ls >> v;) row.push_back(v);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("sample, fit, eval and compare") {
  Scratch s;
  REQUIRE(bhm_run({"sample", "--dist", "cubic", "--n", "10000", "--seed", "1", "--k", "10", "-o",
                   s / "h.dat"}).code == 0);
  const auto fit = bhm_run({"fit", s / "h.dat", "-o", s / "f.json"});
  CHECK(fit.code == 0);
  CHECK(fit.err.find("accepted") != std::string::npos);
  CHECK(bhm::load_spline(s / "f.json").model.size() == 1);

  const auto eval = bhm_run({"eval", s / "f.json", "--points", "10"});
  REQUIRE(eval.code == 0);
  CHECK(eval.out.rfind("# x\tf\tsigma\n", 0) == 0);
  const auto rows = table(eval.out);
  REQUIRE(rows.size() == 10);
  CHECK(rows.front()[0] == 1.0);
  CHECK(rows.back()[0] == 2.8);
  for (const auto& r : rows) CHECK(r[2] > 0);

  const auto cmp = bhm_run({"compare", s / "f.json", "--dist", "cubic", "--points", "50"});
  REQUIRE(cmp.code == 0);
  for (const auto& r : table(cmp.out)) CHECK(std::abs(r[1]) < 5 * r[2]);
}

TEST_CASE("eval at breakpoints and error methods") {
  Scratch s;
  REQUIRE(bhm_run({"sample", "--dist", "exp", "--n", "20000", "--k", "7", "--parts", "10", "-o",
                   s / "p"}).code == 0);
  std::vector<std::string> merge{"merge"};
  for (int i = 0; i < 10; ++i) merge.push_back(s / ("p.00" + std::to_string(i)));
  merge.insert(merge.end(), {"-o", s / "all.dat"});
  REQUIRE(bhm_run(merge).code == 0);
  REQUIRE(bhm_run({"fit", s / "all.dat", "-o", s / "f.json"}).code == 0);

  const auto model = bhm::load_spline(s / "f.json").model;
  // A 19-point grid on [1, 2.8] lands on 1.9.
  const auto eval = bhm_run({"eval", s / "f.json", "--points", "19"});
  REQUIRE(eval.code == 0);
  for (const auto& r : table(eval.out)) CHECK(r[1] == doctest::Approx(model(r[0])));

  std::vector<std::string> boot{"errors", s / "f.json", "--errors", "bootstrap", "--points", "5",
                                "--replicas", "20", "--parts"};
  for (int i = 0; i < 10; ++i) boot.push_back(s / ("p.00" + std::to_string(i)));
  const auto b = bhm_run(boot);
  REQUIRE(b.code == 0);
  CHECK(b.out.rfind("# x\tsigma_bootstrap\n", 0) == 0);
  CHECK(table(b.out).size() == 5);

  CHECK(bhm_run({"errors", s / "f.json", "--errors", "bootstrap"}).code == 1);
}

TEST_CASE("merging an empty histogram changes nothing") {
  Scratch s;
  REQUIRE(bhm_run({"sample", "--dist", "quartic", "--n", "3000", "--k", "5", "-o", s / "a"}).code == 0);
  REQUIRE(bhm_run({"sample", "--dist", "quartic", "--n", "0", "--k", "5", "-o", s / "b"}).code == 0);
  REQUIRE(bhm_run({"merge", s / "a", s / "b", "-o", s / "c"}).code == 0);
  const auto a = bhm::load_histogram(s / "a"), c = bhm::load_histogram(s / "c");
  CHECK(a.total() == c.total());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.bin(i) == c.bin(i));
}

TEST_CASE("data consistent with zero") {
  Scratch s;
  REQUIRE(bhm_run({"sample", "--dist", "signtoy", "--n", "100000", "--k", "8", "-o", s / "z"}).code == 0);
  const auto z = bhm_run({"check-zero", s / "z"});
  CHECK(z.code == 2);
  CHECK(z.out == "consistent-with-zero\n");

  CHECK(bhm_run({"fit", s / "z", "-o", s / "f.json"}).code == 2);
  CHECK_FALSE(fs::exists(s / "f.json"));
  CHECK(bhm_run({"fit", s / "z", "-o", s / "f.json", "--force"}).code != 2);
  CHECK(fs::exists(s / "f.json"));

  REQUIRE(bhm_run({"sample", "--dist", "cubic", "--n", "1000", "--k", "4", "-o", s / "c"}).code == 0);
  const auto c = bhm_run({"check-zero", s / "c"});
  CHECK(c.code == 0);
  CHECK(c.out.rfind("inconsistent-with-zero condition=", 0) == 0);
}

TEST_CASE("unacceptable fits are still written") {
  Scratch s;
  REQUIRE(bhm_run({"sample", "--dist", "cosine", "--n", "1000000", "--k", "4", "-o", s / "h"}).code == 0);
  const auto r = bhm_run({"fit", s / "h", "-o", s / "f.json", "--order", "1", "--t-max", "2"});
  CHECK(r.code == 3);
  CHECK(r.err.find("NOT accepted") != std::string::npos);
  CHECK(fs::exists(s / "f.json"));
}

TEST_CASE("transformed sampling") {
  Scratch s;
  REQUIRE(bhm_run({"sample", "--dist", "divergent", "--n", "100000", "--k", "9", "--transform",
                   "arctan", "--weight-power", "0.5", "-o", s / "h"}).code == 0);
  REQUIRE(bhm_run({"fit", s / "h", "-o", s / "f.json"}).code == 0);
  CHECK(bhm_run({"eval", s / "f.json", "--transform", "arctan", "--weight-power", "0.5"}).code == 1);
  const auto cmp = bhm_run({"compare", s / "f.json", "--dist", "divergent", "--transform", "arctan",
                            "--weight-power", "0.5", "--from", "0.01", "--to", "100", "--log",
                            "--points", "20"});
  REQUIRE(cmp.code == 0);
  for (const auto& r : table(cmp.out)) CHECK(std::abs(r[1]) < 5 * r[2]);
}

TEST_CASE("usage errors") {
  CHECK(bhm_run({}).code == 1);
  CHECK(bhm_run({"fit", "--bogus"}).code == 1);
  CHECK(bhm_run({"sample", "--dist", "nope", "--n", "10", "-o", "/dev/null"}).code == 1);
  CHECK(bhm_run({"fit", "/nonexistent/file", "-o", "/dev/null"}).code == 1);
  CHECK(bhm_run({"--help"}).code == 0);
}
