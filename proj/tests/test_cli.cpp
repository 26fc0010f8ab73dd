#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = fraudsel::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fraudsel_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("help and usage errors") {
  const Result help = call({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);
  CHECK(call({}).code == fraudsel::cli::kConfigError);
  CHECK(call({"frobnicate"}).code == fraudsel::cli::kConfigError);
  CHECK(call({"simulate", "/nonexistent/study.json"}).code == fraudsel::cli::kConfigError);
}

TEST_CASE("generate writes a labelled CSV") {
  const fs::path dir = scratch("generate");
  std::ofstream(dir / "dgp.json") << R"({"p": 3, "predictor": {"type": "linear", "n_nonzero": 2}})";
  const Result r = call({"generate", (dir / "dgp.json").string(), "-n", "40", "--out-dir", dir.string(),
                         "--output", "d.csv"});
  REQUIRE(r.code == 0);
  const std::string text = slurp(dir / "d.csv");
  CHECK(text.rfind("y,x1,x2,x3\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 41);

  std::ofstream(dir / "bad.json") << R"({"p": 3, "p0": 2})";
  CHECK(call({"generate", (dir / "bad.json").string(), "--out-dir", dir.string()}).code ==
        fraudsel::cli::kConfigError);
}

TEST_CASE("stand-in select and evaluate workflow") {
  const fs::path dir = scratch("workflow");
  const std::string d = dir.string();
  REQUIRE(call({"standin", "--periods", "4", "--rows-per-period", "150", "--out-dir", d, "--seed", "3"}).code == 0);
  REQUIRE(fs::exists(dir / "standin.csv"));
  REQUIRE(fs::exists(dir / "standin_select.json"));

  const Result sel = call({"select", (dir / "standin_select.json").string(), (dir / "standin.csv").string(),
                           "--out-dir", d, "--model", "model.json"});
  REQUIRE_MESSAGE(sel.code == 0, sel.err);
  REQUIRE(fs::exists(dir / "model.json"));

  const Result eva = call({"evaluate", (dir / "model.json").string(), (dir / "standin.csv").string(),
                           "--k-grid", "10,30", "--out-dir", d});
  REQUIRE_MESSAGE(eva.code == 0, eva.err);
  const std::string csv = slurp(dir / "evaluation.csv");
  CHECK(csv.rfind("k,tau,selected_tau,tuning,false_positives,fraud_loss\n10,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  const Result too_big = call({"evaluate", (dir / "model.json").string(), (dir / "standin.csv").string(),
                               "--k-grid", "151", "--out-dir", d});
  CHECK(too_big.code == fraudsel::cli::kConfigError);
  CHECK(too_big.err.find("k=151") != std::string::npos);

  std::ofstream(dir / "broken.csv") << "period,y\n4,7\n";
  CHECK(call({"evaluate", (dir / "model.json").string(), (dir / "broken.csv").string(), "--out-dir", d}).code ==
        fraudsel::cli::kDataError);
}
