#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cli.hpp"
#include "report.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace mfbwalk;
using namespace mfbwalk::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string model_path(const std::string &name) {
  const char *root = std::getenv("MFBWALK_SOURCE_DIR");
  return std::string(root ? root : ".") + "/models/" + name;
}

std::vector<std::string> lines(const std::string &s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);)
    v.push_back(l);
  return v;
}

const std::vector<std::string> kSymFlags = {"--p", "0.5", "--q", "0.5", "--p0", "0.25",
                                            "--q0", "0.25", "--s0", "0.25", "--N", "2"};

std::vector<std::string> with(std::vector<std::string> head,
                              const std::vector<std::string> &tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

} // namespace

TEST_CASE("visits as CSV") {
  const Result r = invoke(with({"visits", "--window=-3..3", "--output", "csv"}, kSymFlags));
  REQUIRE(r.code == kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 14);
  CHECK(ls[0] == "quantity,index,closed_form,oracle,delta,tolerance,absorption_mass");
  bool found = false;
  for (const auto &l : ls) {
    if (l.rfind("x,0,", 0) == 0) {
      found = true;
      CHECK(std::stod(l.substr(4)) == doctest::Approx(2.309401).epsilon(1e-6));
    }
  }
  CHECK(found);
}

TEST_CASE("visits as JSON from a model file") {
  const Result r = invoke({"visits", "--model", model_path("cfg-drift.json"), "--window=0..0"});
  REQUIRE(r.code == kExitOk);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("command") == "visits");
  CHECK(j.at("branch") == "DRIFT");
  CHECK(j.at("model").at("N") == 2);
  CHECK(j.at("rows").size() == 1);
}

TEST_CASE("flags override model file fields") {
  const Result r = invoke({"mean-time", "--model", model_path("cfg-drift.json"),
                           "--p", "0.3", "--r", "0.5", "--output", "csv"});
  REQUIRE(r.code == kExitOk);
  const nlohmann::json j = nlohmann::json::parse(
      invoke({"mean-time", "--model", model_path("cfg-drift.json"), "--p", "0.3",
              "--r", "0.5"}).out);
  CHECK(j.at("model").at("p") == 0.3);
}

TEST_CASE("reach and mean-time") {
  const Result reach = invoke(with({"reach", "--from", "0", "--to", "0", "--output", "csv"}, kSymFlags));
  REQUIRE(reach.code == kExitOk);
  CHECK(reach.out.find("0.566987") != std::string::npos);

  const Result mt = invoke(with({"mean-time", "--output", "json"}, kSymFlags));
  REQUIRE(mt.code == kExitOk);
  const nlohmann::json j = nlohmann::json::parse(mt.out);
  CHECK(j.at("rows").at(0).at("closed_form").get<double>() == doctest::Approx(5.0));
}

TEST_CASE("barrier-time reports the printed display") {
  const Result r = invoke({"barrier-time", "--model", model_path("cfg-drift.json"),
                           "--window=-1..1", "--output", "csv"});
  CHECK(r.code == kExitOk);
  CHECK(r.err.find("FormulaDiscrepancy") != std::string::npos);

  const Result strict = invoke({"barrier-time", "--model", model_path("cfg-drift.json"),
                                "--window=-1..1", "--strict-formulas"});
  CHECK(strict.code == kExitDiscrepancy);

  const Result bal = invoke(with({"barrier-time", "--window=0..1"}, kSymFlags));
  CHECK(bal.code == kExitOk);
  CHECK(bal.err.find("NumericExtension") != std::string::npos);
}

TEST_CASE("absorb-dist and simulate") {
  const Result a = invoke(with({"absorb-dist", "--window=-2..2", "--output", "csv"}, kSymFlags));
  CHECK(a.code == kExitOk);
  CHECK(lines(a.out).size() == 7);

  const Result s = invoke(with({"simulate", "--walks", "20000", "--window=-1..1"}, kSymFlags));
  CHECK(s.code == kExitOk);
  const Result s2 = invoke(with({"simulate", "--walks", "20000", "--window=-1..1", "--workers", "4"}, kSymFlags));
  CHECK(s.out == s2.out);
}

TEST_CASE("validation errors exit 2") {
  const Result r = invoke({"visits", "--p", "0.7", "--q", "0.5", "--p0", "0.25",
                           "--q0", "0.25", "--s0", "0.25", "--N", "2"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("p") != std::string::npos);

  const Result n = invoke(with({"visits"}, {"--p", "0.5", "--q", "0.5", "--p0", "0.25",
                                            "--q0", "0.25", "--s0", "0.25", "--N", "0"}));
  CHECK(n.code == kExitValidation);

  const Result start = invoke(with({"barrier-time", "--i0", "1"},
                                   {"--model", model_path("cfg-drift.json")}));
  CHECK(start.code == kExitValidation);
}

TEST_CASE("usage errors exit 64") {
  CHECK(invoke({}).code == kExitUsage);
  CHECK(invoke({"frobnicate"}).code == kExitUsage);
  CHECK(invoke(with({"visits", "--window", "nonsense"}, kSymFlags)).code == kExitUsage);
  CHECK(invoke(with({"visits", "--output", "xml"}, kSymFlags)).code == kExitUsage);
}

TEST_CASE("missing input exits 66") {
  CHECK(invoke({"visits", "--model", "/nonexistent/model.json"}).code == kExitNoInput);
  CHECK(invoke({"verify", "--model", model_path("cfg-sym.json"), "--walks", "1000",
                "--golden", "/nonexistent/golden.json"}).code == kExitNoInput);
}

TEST_CASE("model JSON round trip") {
  const RawParameters raw{0.4, 0.2, 0.4, 0.2, 0.2, 0.4, 0.2, 2, 0};
  const WalkModel m = validate_model(raw);
  const WalkModel back = validate_model(model_from_json(model_to_json(m)));
  CHECK(back == m);
  nlohmann::json bad = model_to_json(m);
  bad["N"] = 2.5;
  CHECK_THROWS_AS(model_from_json(bad), SchemaError);
  bad = model_to_json(m);
  bad.erase("s0");
  CHECK_THROWS_AS(model_from_json(bad), SchemaError);
}

TEST_CASE("verify passes on both reference models") {
  for (const char *name : {"cfg-sym.json", "cfg-drift.json"}) {
    const Result r = invoke({"verify", "--model", model_path(name), "--walks", "100000",
                             "--output", "csv"});
    INFO(name << "\n" << r.out);
    CHECK(r.code == kExitOk);
    CHECK(r.out.find(",false") == std::string::npos);
  }
}

TEST_CASE("golden bless then diff") {
  const std::filesystem::path tmp =
      std::filesystem::temp_directory_path() / "mfbwalk_golden_test.json";
  const std::vector<std::string> base = {"verify", "--model", model_path("cfg-drift.json"),
                                         "--walks", "5000"};
  REQUIRE(invoke(with(base, {"--golden", tmp.string(), "--bless"})).code == kExitOk);
  REQUIRE(std::filesystem::exists(tmp));
  const Result same = invoke(with(base, {"--golden", tmp.string(), "--output", "csv"}));
  CHECK(same.code == kExitOk);
  CHECK(same.out.find("golden:") != std::string::npos);

  // Tamper with one stored value.
  nlohmann::json j;
  {
    std::ifstream in(tmp);
    j = nlohmann::json::parse(in);
  }
  REQUIRE(j.is_array());
  j[0]["value"] = j[0]["value"].get<double>() + 1.0;
  {
    std::ofstream outf(tmp);
    outf << j.dump(2);
  }
  CHECK(invoke(with(base, {"--golden", tmp.string()})).code == kExitDiscrepancy);

  CHECK(invoke(with(base, {"--bless"})).code == kExitUsage);
  std::filesystem::remove(tmp);
}
