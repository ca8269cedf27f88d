#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "toda/pipeline.hpp"
#include "toda/report.hpp"

using namespace toda;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("toda_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config defaults and round trip") {
    const auto c = parse_config("");
    CHECK(c.domain_kind == "disk");
    CHECK(c.k == 1);
    CHECK(c.xi_auto);
    const std::string text = R"(
seed = 42
out = "somewhere"
[domain]
kind = "rectangle"
width = 2
height = 1.5
[problem]
k = 2
rho2 = 0.25
xi = [[0.5, 0.75], [1.5, 0.75]]
[lambda]
start = 0.01
min = 1e-4
shrink = 0.6
residual = [1e-2, 1e-3, 1e-4, 1e-5]
[branch]
refine_check = true
)";
    const auto a = parse_config(text);
    CHECK(a.seed == 42);
    CHECK(a.width == 2.0);
    CHECK(a.xi.size() == 2);
    CHECK(a.residual_lambdas.size() == 4);
    CHECK(a.refine_check);
    const std::string s1 = serialize_config(a);
    const auto b = parse_config(s1);
    CHECK(serialize_config(b) == s1);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(b.xi[1].x() == 1.5);
    CHECK(b.lambda_shrink == 0.6);
    // 17 digits survive the trip
    auto c2 = c;
    c2.rho2 = 0.1 + 0.2;
    CHECK(parse_config(serialize_config(c2)).rho2 == c2.rho2);
    CHECK(config_hash(c2) != config_hash(c));
  }

  TEST_CASE("config errors") {
    auto msg = [](const std::string& t) {
      try {
        parse_config(t);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    CHECK(msg("sed = 1").find("unknown key 'sed'") != std::string::npos);
    CHECK(msg("[problem]\nrho = 1").find("unknown key 'problem.rho'") != std::string::npos);
    CHECK(msg("[problme]\nk = 1").find("unknown key 'problme'") != std::string::npos);
    CHECK(msg("[problem]\nk = \"one\"").find("integer") != std::string::npos);
    CHECK(msg("[problem]\nrho2 = -1").find("nonnegative") != std::string::npos);
    CHECK(msg("[problem]\nk = 0").find("k must") != std::string::npos);
    CHECK(msg("[lambda]\nstart = 1e-3\nmin = 1e-2").find("lambda.min") != std::string::npos);
    CHECK(msg("[lambda]\nresidual = [1e-3, 1e-2, 1e-4, 1e-5]").find("decreasing") != std::string::npos);
    CHECK(msg("[problem]\nk = 2\nxi = [[0.1, 0]]").find("exactly k") != std::string::npos);
    CHECK(msg("[problem]\nxi = [[2.0, 0]]").find("problem.xi") != std::string::npos);
    CHECK(msg("[problem]\nxi = \"center\"").find("auto") != std::string::npos);
    CHECK(msg("[domain]\nkind = \"torus\"").find("domain.kind") != std::string::npos);
    CHECK(msg("seed = [").find("TOML syntax") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/run.toml"), ConfigError);
  }

  TEST_CASE("hashing and formatting") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(fmt17(0.1) == "0.10000000000000001");
    CHECK(fmt17(1.0) == "1");
    CHECK(fmt17(std::nan("")) == "nan");
    CsvWriter w({"a", "b"});
    w.comment("meta");
    w.add(1.5).add(std::string("x,y")).end_row();
    CHECK(w.str() == "# meta\na,b\n1.5,\"x,y\"\n");
    w.add(1.0);
    CHECK_THROWS_AS(w.end_row(), DimensionError);
  }

  TEST_CASE("field dump layout") {
    auto m = std::make_shared<const Mesh>(build_mesh(DomainSpec::rectangle(1, 1), 0.2));
    std::ostringstream os;
    write_field_dump(os, ScalarField::interpolate(m, [](const Point& p) { return p.x(); }), "u");
    std::istringstream is(os.str());
    const Mesh back = Mesh::read(is);
    CHECK(back.num_nodes() == m->num_nodes());
    std::string tag, name;
    int n = 0;
    is >> tag >> name >> n;
    CHECK(tag == "field");
    CHECK(name == "u");
    CHECK(n == m->num_nodes());
    double v = 0;
    for (int i = 0; i < n; ++i) {
      is >> v;
      CHECK(v == doctest::Approx(m->nodes()[i].x()));
    }
  }

  TEST_CASE("random pairs and seeds") {
    const auto a = random_pairs(DomainSpec::unit_disk(), 20, 0.6, 5);
    const auto b = random_pairs(DomainSpec::unit_disk(), 20, 0.6, 5);
    REQUIRE(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].first == b[i].first);
      CHECK(a[i].first.norm() <= 0.6 + 1e-12);
      CHECK(a[i].second.norm() <= 0.6 + 1e-12);
    }
    CHECK(random_pairs(DomainSpec::unit_disk(), 20, 0.6, 6)[0].first != a[0].first);
    const auto s = random_configs(DomainSpec::rectangle(2, 1), 3, 5, 1, 0.1, 0.2);
    for (const auto& c : s) {
      CHECK(c.k() == 3);
      CHECK(c.min_separation() >= 0.2);
      CHECK(c.boundary_margin(DomainSpec::rectangle(2, 1)) >= 0.1);
    }
    CHECK(auto_xi(DomainSpec::rectangle(2, 1), 1)[0] == Point(1, 0.5));
    CHECK(auto_xi(DomainSpec::unit_disk(), 2).min_separation() == doctest::Approx(0.8));
  }

  TEST_CASE("green check on coarse meshes") {
    const auto r = green_check(DomainSpec::unit_disk(), {0.2, 0.1}, 10, 0.5, 1);
    REQUIRE(r.levels.size() == 2);
    CHECK(r.analytic_reference);
    CHECK(r.levels[1].max_error < r.levels[0].max_error);
    CHECK(r.orders.size() == 1);
    CHECK(r.orders[0] > 1.5);
    const auto q = green_check(DomainSpec::rectangle(1, 1), {0.2, 0.1}, 5, 0.5, 1);
    CHECK_FALSE(q.analytic_reference);
    CHECK(std::isnan(q.levels[1].max_error));
  }

  TEST_CASE("run directory and manifest") {
    auto cfg = parse_config("seed = 3\n[problem]\nrho2 = 0.0\n[search]\nmultistart = 3\n");
    const fs::path dir = scratch("manifest");
    CHECK(run_command("find-critical", cfg, dir, {}) == 0);
    const auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    std::set<std::string> listed;
    for (const auto& f : man["files"]) {
      const std::string p = f["path"];
      CHECK(listed.insert(p).second);
      CHECK(sha256_file(dir / p) == f["sha256"]);
    }
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().filename() != "manifest.json") CHECK(listed.count(e.path().filename().string()) == 1);
    CHECK(man["seed"] == 3);
    CHECK(man["config_hash"] == config_hash(cfg));
    const auto crit = nlohmann::json::parse(slurp(dir / "critical.json"));
    CHECK(crit["seed"] == 3);
    CHECK(crit["best"]["gradient_norm"].get<double>() < 1e-5);
    CHECK(std::abs(crit["best"]["xi"][0][0].get<double>()) < 1e-6);
    const std::string first = slurp(dir / "critical.json");
    // rerun into the same directory replaces the previous run
    CHECK(run_command("find-critical", cfg, dir, {}) == 0);
    CHECK(slurp(dir / "critical.json") == first);
    // a foreign file blocks reuse
    std::ofstream(dir / "stray.txt") << "x";
    CHECK_THROWS_AS(run_command("find-critical", cfg, dir, {}), ConfigError);
    CHECK_THROWS_AS(run_command("no-such-command", cfg, scratch("bad"), {}), ConfigError);
    fs::remove_all(dir);
  }

  TEST_CASE("failing stage is reported") {
    // k = 2 on the disk with rho2 = 0: pairs collapse or escape, no critical point
    auto cfg = parse_config("[problem]\nk = 2\nrho2 = 0.0\n[search]\nmultistart = 2\n");
    const fs::path dir = scratch("fail");
    std::ostringstream log;
    RunOptions o;
    o.log = &log;
    CHECK(run_command("find-critical", cfg, dir, o) == 3);
    CHECK(log.str().find("stage 'find-critical' failed") != std::string::npos);
    const auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(man["stages"][0]["status"] == "failed");
    fs::remove_all(dir);
  }
}
