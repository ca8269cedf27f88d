// Acceptance checks. `acceptance <n> [--work DIR]` runs criterion n and prints
// one verdict line "CRITERION n: PASS|FAIL"; detail lines are indented.
// Exit status 0 on PASS, 1 on FAIL, 2 on usage errors.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toda/pipeline.hpp"
#include "toda/report.hpp"

using namespace toda;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path g_work = "acceptance_work";

void note(const std::string& s) { std::cout << "  " << s << "\n" << std::flush; }

std::string num(double v, int digits = 6) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*g", digits, v);
  return b;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Header + rows of a CSV written by CsvWriter; '#' lines go to `comments`.
struct Table {
  std::vector<std::string> cols;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    throw std::runtime_error("no column " + name);
  }
  std::vector<double> get(const std::string& name) const {
    const int c = col(name);
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(std::stod(r[c]));
    return v;
  }
  json footer(const std::string& tag) const {
    for (const auto& c : comments)
      if (c.rfind("# " + tag + " ", 0) == 0) return json::parse(c.substr(tag.size() + 3));
    throw std::runtime_error("no footer " + tag);
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool q = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (q) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') q = false;
      else cur += c;
    } else if (c == '"') {
      q = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Table read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) t.comments.push_back(line);
    else if (t.cols.empty()) t.cols = split(line);
    else t.rows.push_back(split(line));
  }
  return t;
}

std::string csv_body(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) out += line + "\n";
  return out;
}

bool strictly_decreasing_abs(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(std::abs(v[i]) < std::abs(v[i - 1]))) return false;
  return true;
}

const char* k1_config = R"(
seed = 1
[domain]
kind = "disk"
[problem]
k = 1
rho2 = 0.5
[lambda]
start = 1e-2
min = 1e-5
shrink = 0.5
[search]
multistart = 4
[branch]
refine_check = true
)";

const char* k1_rho0_config = R"(
seed = 7
[domain]
kind = "disk"
[problem]
k = 1
rho2 = 0.0
[lambda]
start = 1e-2
min = 1e-5
shrink = 0.5
[search]
multistart = 4
[branch]
dump_fields = true
)";

// Full pipeline into work/<name>; an earlier complete run of the same config
// is reused.
int pipeline(const std::string& name, const ExperimentConfig& cfg, bool reuse = true) {
  const fs::path dir = g_work / name;
  const fs::path man = dir / "manifest.json";
  if (reuse && fs::exists(man)) {
    const json m = json::parse(slurp(man));
    bool ok = m.value("config_hash", "") == config_hash(cfg) && m.value("command", "") == "full-pipeline";
    for (const auto& s : m["stages"]) ok = ok && s["status"] == "ok";
    if (ok && m["stages"].size() == 4) {
      note("reusing " + dir.string());
      return 0;
    }
  }
  fs::remove_all(dir);
  RunOptions o;
  o.log = &std::cout;
  o.verbosity = 3;
  Timer t;
  const int rc = run_command("full-pipeline", cfg, dir, o);
  note("pipeline " + name + " exit " + std::to_string(rc) + " in " + num(t.seconds(), 4) + " s");
  return rc;
}

// ---------------------------------------------------------------------------

bool c1() {
  Timer t;
  const auto r = green_check(DomainSpec::unit_disk(), {0.08, 0.04, 0.02}, 50, 0.6, 3);
  for (const auto& l : r.levels)
    note("h " + num(l.h) + " nodes " + std::to_string(l.nodes) + " max error " + num(l.max_error) + " symmetry " +
         num(l.symmetry));
  double order = 1e300;
  for (double o : r.orders) {
    note("order " + num(o, 4));
    order = std::min(order, o);
  }
  const double s = t.seconds();
  note("runtime " + num(s, 3) + " s (limit 60)");
  return r.levels.back().max_error < 1e-3 && order >= 1.8 && s < 60;
}

bool c2() {
  Timer t;
  const auto m = mass_constants(1000);
  const double pi = 3.14159265358979323846;
  note("mass " + num(m.mass, 17) + " error " + num(m.mass - pi, 3) + " (truncated only " +
       num(m.mass_truncated - pi, 3) + ")");
  note("moment " + num(m.moment, 17) + " error " + num(m.moment - pi / 4, 3) + " (truncated only " +
       num(m.moment_truncated - pi / 4, 3) + ")");
  note("runtime " + num(t.seconds(), 3) + " s (limit 1)");
  return std::abs(m.mass - pi) < 1e-6 && std::abs(m.moment - pi / 4) < 1e-6 && t.seconds() < 1;
}

bool c3() {
  Timer t;
  const ConfigPoints xi({Point(0.3, 0)});
  auto cfg = parse_config("[problem]\nrho2 = 0.5\n");
  const double h = cfg.h / std::pow(2.0, cfg.levels - 1);  // finest default level
  const auto ctx = make_context(cfg, h);
  const Point g = lambda_grad(xi, ctx)[0];
  const Point fd = lambda_grad_fd(xi, ctx, 1e-3)[0];
  const double rel = (g - fd).norm() / fd.norm();
  note("rho2 0.5, h " + num(h) + ": grad (" + num(g.x(), 8) + ", " + num(g.y(), 3) + ") fd (" + num(fd.x(), 8) +
       ", " + num(fd.y(), 3) + ") rel " + num(rel, 3));
  auto cfg0 = parse_config("[problem]\nrho2 = 0.0\n");
  const auto ctx0 = make_context(cfg0, h);
  const Point g0 = lambda_grad(xi, ctx0)[0];
  const double pi = 3.14159265358979323846;
  const double exact = 16 * pi * 0.3 / (1 - 0.09);
  const double rel0 = std::abs(g0.x() - exact) / exact;
  note("rho2 0: grad " + num(g0.x(), 10) + " closed form " + num(exact, 10) + " rel " + num(rel0, 3));
  note("runtime " + num(t.seconds(), 3) + " s (limit 300)");
  return rel < 0.02 && rel0 < 0.005 && std::abs(g0.y()) < 1e-9 && t.seconds() < 300;
}

bool c4() {
  Timer t;
  const ConfigPoints start({Point(0.25, -0.15)});
  auto cfg0 = parse_config("[problem]\nrho2 = 0.0\n");
  const auto a = find_critical(start, make_context(cfg0, cfg0.h));
  const double e0 = a.xi[0].norm();
  note("rho2 0: xi (" + num(a.xi[0].x(), 3) + ", " + num(a.xi[0].y(), 3) + ") |xi| " + num(e0, 3) + " |grad| " +
       num(a.gradient_norm, 3) + " " + a.classification);
  auto cfg = parse_config("[problem]\nrho2 = 0.5\n");
  const double h = cfg.h / std::pow(2.0, cfg.levels - 1);
  const auto ctx = make_context(cfg, h);
  const auto b = find_critical(start, ctx);
  const double e1 = b.xi[0].norm();
  note("rho2 0.5, h " + num(h) + ": xi (" + num(b.xi[0].x(), 3) + ", " + num(b.xi[0].y(), 3) + ") |xi| " +
       num(e1, 3) + " |grad| " + num(b.gradient_norm, 3) + " " + b.classification);
  note("runtime " + num(t.seconds(), 3) + " s (limit 600)");
  return e0 < 1e-6 && e1 < h && t.seconds() < 600;
}

bool c5() {
  Timer t;
  const auto cfg = parse_config("[problem]\nrho2 = 0.5\n");
  const ConfigPoints xi({Point(0.3, 0)});
  const auto lam = cfg.residual_ladder();
  const auto st = norm_scaling_study(cfg.domain(), xi, 0.5, lam, ansatz_options(cfg));
  bool ok = true;
  for (const auto& [name, target] : std::vector<std::pair<std::string, double>>{
           {"E_p1.2", 1.0 / 3}, {"E_p1.5", 1.0 / 6}, {"E0_inf", 1.0}}) {
    const auto it = st.fits.find(name);
    if (it == st.fits.end()) {
      note(name + ": no fit");
      ok = false;
      continue;
    }
    const double dev = std::abs(it->second.slope - target) / target;
    note(name + " slope " + num(it->second.slope, 5) + " target " + num(target, 5) + " deviation " +
         num(100 * dev, 3) + "% over " + num(it->second.decades, 3) + " decades, " +
         std::to_string(it->second.samples) + " samples");
    ok = ok && dev < 0.15;
  }
  note("lambda " + num(lam.front()) + " .. " + num(lam.back()) + ", runtime " + num(t.seconds(), 4) +
       " s (limit 1200)");
  return ok && t.seconds() < 1200;
}

bool c6() {
  Timer t;
  std::vector<ExpansionDefects> d;
  for (double delta : {0.04, 0.02, 0.01, 0.005}) {
    d.push_back(projection_expansion_defects(DomainSpec::unit_disk(), Point(0, 0), delta));
    note("delta " + num(delta) + " Pw defect " + num(d.back().pw) + " PZ0 defect " + num(d.back().pz0) +
         " nodes " + std::to_string(d.back().nodes));
  }
  bool ok = true;
  for (std::size_t i = 1; i < d.size(); ++i) {
    const double rw = d[i - 1].pw / d[i].pw, rz = d[i - 1].pz0 / d[i].pz0;
    note("halving " + std::to_string(i) + ": ratios " + num(rw, 4) + ", " + num(rz, 4));
    ok = ok && rw >= 3 && rz >= 3;
  }
  note("runtime " + num(t.seconds(), 3) + " s (limit 600)");
  return ok && t.seconds() < 600;
}

bool c7() {
  Timer t;
  const auto cfg = parse_config(k1_config);
  bool ok = pipeline("disk_k1", cfg) == 0;
  const auto b = read_csv(g_work / "disk_k1" / "branch.csv");
  const auto lam = b.get("lambda"), rho1 = b.get("rho1");
  const double target = 4 * 3.14159265358979323846;
  std::vector<double> err;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    err.push_back(rho1[i] - target);
    note("lambda " + num(lam[i]) + " rho1 " + num(rho1[i], 10) + " rho1 - 4pi " + num(err.back(), 4));
  }
  const bool k1 = ok && !lam.empty() && std::abs(lam.back() - 1e-5) < 1e-18 && std::abs(err.back()) < 0.2 &&
                  strictly_decreasing_abs(err);
  note(std::string("k = 1: ") + (k1 ? "meets" : "misses") + " |rho1 - 4pi| < 0.2 with decreasing error");

  // k = 2 antipodal, rho2 = 0.5: the branch needs a critical pair first
  bool k2 = false;
  try {
    auto c2cfg = parse_config("[problem]\nk = 2\nrho2 = 0.5\n");
    const auto ctx = make_context(c2cfg, c2cfg.h);
    const auto cp = find_critical(ConfigPoints({Point(0.4, 0), Point(-0.4, 0)}), ctx);
    note("k = 2 critical pair at (" + num(cp.xi[0].x(), 4) + ", " + num(cp.xi[0].y(), 4) + "), (" +
         num(cp.xi[1].x(), 4) + ", " + num(cp.xi[1].y(), 4) + ")");
    BranchOptions bo;
    bo.ansatz = ansatz_options(c2cfg);
    bo.singular_value = false;
    const auto br = continuation(c2cfg.domain(), cp.xi, 0.5, bo);
    std::vector<double> e2;
    for (const auto& s : br.samples) {
      e2.push_back(s.rho1 - 2 * target);
      note("k = 2 lambda " + num(s.lambda) + " rho1 - 8pi " + num(e2.back(), 4));
    }
    k2 = !br.truncated && !e2.empty() && std::abs(e2.back()) < 0.2 && strictly_decreasing_abs(e2);
  } catch (const std::exception& e) {
    note(std::string("k = 2 antipodal: no branch (") + e.what() + ")");
  }
  note("runtime " + num(t.seconds(), 4) + " s (limit 3600)");
  return k1 && k2 && t.seconds() < 3600;
}

bool c8() {
  const auto cfg = parse_config(k1_config);
  if (pipeline("disk_k1", cfg) != 0) return false;
  const auto b = read_csv(g_work / "disk_k1" / "branch.csv");
  const auto lam = b.get("lambda"), raw = b.get("defect"), fine = b.get("defect_fine"),
             ex = b.get("defect_extrapolated");
  for (std::size_t i = 0; i < lam.size(); ++i)
    note("lambda " + num(lam[i]) + " defect h " + num(raw[i], 4) + " h/2 " + num(fine[i], 4) + " extrapolated " +
         num(ex[i], 4));
  const auto foot = b.footer("summary");
  note("Lambda(xi*) " + num(foot["lambda_star"].get<double>(), 10) + " / " +
       num(foot["lambda_star_fine"].get<double>(), 10));
  note(std::string("raw defect ") + (strictly_decreasing_abs(raw) ? "decreases" : "does not decrease") +
       " in magnitude along the ladder");
  const bool ok = strictly_decreasing_abs(ex) && std::abs(ex.back()) < 0.5 && std::abs(lam.back() - 1e-5) < 1e-18;
  note(std::string("extrapolated defect ") + (strictly_decreasing_abs(ex) ? "decreases" : "does not decrease") +
       ", final " + num(ex.back(), 4));
  return ok;
}

bool c9() {
  Timer t;
  const auto cfg = parse_config(k1_rho0_config);
  const fs::path dir = g_work / "disk_k1_rho0";
  bool ok = pipeline("disk_k1_rho0", cfg) == 0;
  const auto b = read_csv(dir / "branch.csv");
  const auto lam = b.get("lambda"), u2 = b.get("u2_max"), rel = b.get("u2_plus_half_u1");
  double u2max = 0, relmax = 0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    u2max = std::max(u2max, u2[i]);
    relmax = std::max(relmax, rel[i]);
  }
  note("max |u2| over the branch " + num(u2max, 4) + " (u2 = -u1/2 solves the second equation when rho2 = 0)");
  note("max |u2 + u1/2| over the branch " + num(relmax, 4));
  const bool u2_ok = u2max < 1e-8;

  // Liouville comparison at the last sample, on the same ansatz mesh
  bool match = false;
  try {
    std::istringstream in(slurp(dir / "branch_u1.field"));
    const Mesh m = Mesh::read(in);
    std::string tag, name;
    int n = 0;
    in >> tag >> name >> n;
    Vec u1(n);
    for (int i = 0; i < n; ++i) in >> u1[i];
    const auto foot = b.footer("summary");
    const ConfigPoints xi({Point(foot["xi"][0][0].get<double>(), foot["xi"][0][1].get<double>())});
    const Ansatz a = build_ansatz(cfg.domain(), xi, lam.back(), 0.0, ansatz_options(cfg));
    if (a.mesh().num_nodes() != n) throw std::runtime_error("ansatz mesh does not match the dump");
    double shift = 0;
    for (int i = 0; i < n; ++i) shift = std::max(shift, (a.mesh().nodes()[i] - m.nodes()[i]).norm());
    const ScalarField lv = liouville_newton(a);
    const double diff = (lv.values - u1).cwiseAbs().maxCoeff();
    const double scale = u1.cwiseAbs().maxCoeff();
    note("lambda " + num(lam.back()) + ": " + std::to_string(n) + " nodes (max node offset " + num(shift, 3) +
         "), max |u1 - u_Liouville| " + num(diff, 4) + ", relative " + num(diff / scale, 4));
    match = shift == 0 && diff < 1e-8;
  } catch (const std::exception& e) {
    note(std::string("Liouville comparison failed: ") + e.what());
  }
  note("runtime " + num(t.seconds(), 4) + " s (limit 900)");
  return ok && u2_ok && match && t.seconds() < 900;
}

bool c10() {
  const auto cfg = parse_config(k1_config);
  bool ok = pipeline("disk_k1", cfg) == 0;
  ok = pipeline("disk_k1_repeat", cfg, false) == 0 && ok;
  int n = 0;
  for (const auto& e : fs::directory_iterator(g_work / "disk_k1")) {
    if (e.path().extension() != ".csv") continue;
    const fs::path other = g_work / "disk_k1_repeat" / e.path().filename();
    const bool same = fs::exists(other) && csv_body(e.path()) == csv_body(other);
    const bool whole = fs::exists(other) && slurp(e.path()) == slurp(other);
    note(e.path().filename().string() + (same ? ": bodies identical" : ": bodies differ") +
         (whole ? ", whole files identical" : ""));
    ok = ok && same;
    ++n;
  }
  return ok && n > 0;
}

}  // namespace

int main(int argc, char** argv) {
  int which = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) g_work = argv[++i];
    else which = std::atoi(argv[i]);
  }
  const std::map<int, std::function<bool()>> checks = {{1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5},
                                                       {6, c6}, {7, c7}, {8, c8}, {9, c9}, {10, c10}};
  if (!checks.count(which)) {
    std::cerr << "usage: acceptance <1-10> [--work DIR]\n";
    return 2;
  }
  fs::create_directories(g_work);
  bool pass = false;
  try {
    pass = checks.at(which)();
  } catch (const std::exception& e) {
    note(std::string("error: ") + e.what());
  }
  std::cout << "CRITERION " << which << ": " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}
