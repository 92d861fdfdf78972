#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hierarg/cli.hpp"

using namespace hierarg;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "hierarg");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::vector<std::vector<std::string>> load_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "hierarg_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"nonsense"}).code == 2);
  CHECK(run({"flow", "--bogus"}).code == 2);
  CHECK(run({"flow", "--alpha", "-1"}).code == 2);
  CHECK(run({"flow", "--N", "100"}).code == 2);
  CHECK(run({"flow", "--init", "exp(x)"}).code == 2);
  CHECK(run({"flow", "--init", "cos(x)"}).code == 2);
  CHECK(run({"spectrum", "--branch", "sideways"}).code == 2);
  CHECK(run({"discrete", "--n", "16,8"}).code == 2);
  CHECK(run({"bifurcation", "--alpha-min", "1", "--alpha-max", "0.5"}).code == 2);
  CHECK(run({"flow", "--help"}).code == 0);
  auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(std::string(io::version)) != std::string::npos);
}

TEST_CASE("numerical failures exit with 1") {
  auto r = run({"equilibrium", "--alpha", "3", "--prefix", scratch("noeq").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("error") != std::string::npos);
  CHECK(run({"discrete", "--z", "0.6", "--prefix", scratch("neg").string()}).code == 1);
  CHECK(run({"liapunov", "--init", "2*sin(x)", "--t-end", "0.1", "--prefix", scratch("steep").string()}).code == 1);
}

TEST_CASE("HIERARG_THREADS is validated") {
  ::setenv("HIERARG_THREADS", "zero", 1);
  CHECK(run({"bifurcation", "--steps", "4", "--prefix", scratch("thr").string()}).code == 2);
  ::unsetenv("HIERARG_THREADS");
}

TEST_CASE("spectrum of the trivial branch") {
  const auto prefix = scratch("spec3");
  auto r = run({"spectrum", "--alpha", "3", "--branch", "trivial", "--prefix", prefix.string()});
  REQUIRE(r.code == 0);
  auto j = load_json(prefix.string() + ".json");
  const double expect[] = {1, 10, 25, 46, 73};
  for (int i = 0; i < 5; ++i) CHECK(j["eigenvalues"][i].get<double>() == Approx(expect[i]).margin(1e-3));
  CHECK(j["negative_count"] == 0);
  CHECK(j["config"]["alpha"] == 3.0);
  CHECK(j["code_version"] == std::string(io::version));
}

TEST_CASE("bifurcation sweep") {
  const auto prefix = scratch("bif");
  auto r = run({"bifurcation", "--j", "1", "--alpha-min", "0.1", "--alpha-max", "1.99", "--steps", "50", "--plot-data",
                "--prefix", prefix.string()});
  REQUIRE(r.code == 0);
  auto rows = load_csv(prefix.string() + ".csv");
  REQUIRE(rows.size() == 51);
  CHECK(rows[0] == std::vector<std::string>{"alpha", "w_hat", "inverse_alpha", "gap", "exists"});
  double prev = 1e300;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double w = std::stod(rows[i][1]);
    // ŵ₁ rounds to 1/α for small α; the gap column carries the separation.
    CHECK(std::stod(rows[i][3]) > 0);
    CHECK(w < prev);
    CHECK(rows[i][4] == "1");
    prev = w;
  }
  CHECK(fs::exists(prefix.string() + ".dat"));
  CHECK(slurp(prefix.string() + ".csv").rfind("# hierarg ", 0) == 0);
}

TEST_CASE("outputs are deterministic across thread counts") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ::setenv("HIERARG_THREADS", "1", 1);
  REQUIRE(run({"bifurcation", "--j", "2", "--alpha-min", "0.1", "--alpha-max", "0.6", "--steps", "12", "--prefix", a.string()}).code == 0);
  ::setenv("HIERARG_THREADS", "4", 1);
  REQUIRE(run({"bifurcation", "--j", "2", "--alpha-min", "0.1", "--alpha-max", "0.6", "--steps", "12", "--prefix", b.string()}).code == 0);
  ::unsetenv("HIERARG_THREADS");
  CHECK(slurp(a.string() + ".csv") == slurp(b.string() + ".csv"));
  auto rows = load_csv(a.string() + ".csv");
  CHECK(rows.back()[4] == "0");
}

TEST_CASE("flow converges to the first branch") {
  const auto prefix = scratch("flow");
  auto r = run({"flow", "--alpha", "1", "--init", "0.1*sin(x)", "--t-end", "20", "--stride", "1000", "--prefix", prefix.string()});
  REQUIRE(r.code == 0);
  auto j = load_json(prefix.string() + ".json");
  CHECK(j["converged"] == true);
  CHECK(j["attractor"] == "psi_1_plus");
  CHECK(j["attractor_distance_H1"].get<double>() < 1e-5);
  CHECK(j["config"]["init"] == "0.1*sin(x)");
  auto rows = load_csv(prefix.string() + ".csv");
  CHECK(rows[0] == std::vector<std::string>{"t", "x", "v"});
}

TEST_CASE("flow from an initial potential decays at alpha = 3") {
  const auto prefix = scratch("flow3");
  auto r = run({"flow", "--alpha", "3", "--init-potential", "0.1*(1-cos(x))", "--t-end", "20", "--prefix", prefix.string()});
  REQUIRE(r.code == 0);
  auto j = load_json(prefix.string() + ".json");
  CHECK(j["attractor"] == "zero");
  CHECK(j["decay_rate"].get<double>() == Approx(1.0).epsilon(0.02));
}

TEST_CASE("equilibrium, criterium and liapunov subcommands") {
  const auto eq = scratch("eq");
  REQUIRE(run({"equilibrium", "--alpha", "0.4", "--j", "2", "--plot-data", "--prefix", eq.string()}).code == 0);
  auto j = load_json(eq.string() + ".json");
  CHECK(j["w0"].get<double>() == Approx(2.2466373936394666565).epsilon(1e-12));
  CHECK(j["h2_residual"].get<double>() < 1e-8);
  CHECK(load_csv(eq.string() + ".csv").size() == 258);

  const auto cr = scratch("crit");
  auto r = run({"criterium", "--alpha", "0.4", "--j", "2", "--prefix", cr.string()});
  REQUIRE(r.code == 0);
  CHECK(load_json(cr.string() + ".json")["verdict"] == "unstable");
  CHECK(r.out.find("unstable") != std::string::npos);

  const auto li = scratch("lia");
  REQUIRE(run({"liapunov", "--alpha", "1", "--t-end", "5", "--stride", "250", "--prefix", li.string()}).code == 0);
  auto rows = load_csv(li.string() + ".csv");
  CHECK(rows.size() == 22);
}

TEST_CASE("discrete and phase-portrait subcommands") {
  const auto d = scratch("disc");
  auto r = run({"discrete", "--beta", "12*pi", "--n", "8,16,32", "--prefix", d.string()});
  REQUIRE(r.code == 0);
  auto j = load_json(d.string() + ".json");
  CHECK(j["converging"] == true);
  CHECK(j["alpha"].get<double>() == Approx(3.0));
  CHECK(j["rows"].size() == 3);

  const auto p = scratch("phase");
  REQUIRE(run({"phase-portrait", "--alpha", "1", "--w0", "0.5,1,1.5", "--prefix", p.string()}).code == 0);
  auto pj = load_json(p.string() + ".json");
  CHECK(pj["orbits"][0]["class"] == "closed");
  CHECK(pj["orbits"][1]["class"] == "separatrix");
  CHECK(pj["orbits"][2]["class"] == "unbounded");
}
