#include "toda/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "toda/report.hpp"
#include "toda/toda.hpp"

namespace toda {

namespace {

std::string where(const toml::node& n) {
  std::ostringstream os;
  const auto& s = n.source();
  if (s.path) os << *s.path << ":";
  os << s.begin.line << ":" << s.begin.column;
  return os.str();
}

void check_keys(const toml::table& t, const std::string& prefix, const std::set<std::string>& known) {
  for (auto&& [k, v] : t) {
    const std::string key(k.str());
    if (!known.count(key))
      throw ConfigError("unknown key '" + prefix + key + "' at " + where(v));
  }
}

const toml::table* section(const toml::table& root, const char* name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(std::string("'") + name + "' must be a table");
  return n->as_table();
}

double get_real(const toml::table& t, const std::string& path, const char* key, double def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value_exact<double>()) return *v;
  if (auto v = n->value_exact<int64_t>()) return static_cast<double>(*v);
  throw ConfigError("'" + path + key + "' must be a number (" + where(*n) + ")");
}

int64_t get_int(const toml::table& t, const std::string& path, const char* key, int64_t def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value_exact<int64_t>()) return *v;
  throw ConfigError("'" + path + key + "' must be an integer (" + where(*n) + ")");
}

bool get_bool(const toml::table& t, const std::string& path, const char* key, bool def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value_exact<bool>()) return *v;
  throw ConfigError("'" + path + key + "' must be true or false (" + where(*n) + ")");
}

std::string get_string(const toml::table& t, const std::string& path, const char* key, const std::string& def) {
  const toml::node* n = t.get(key);
  if (!n) return def;
  if (auto v = n->value_exact<std::string>()) return *v;
  throw ConfigError("'" + path + key + "' must be a string (" + where(*n) + ")");
}

double as_real(const toml::node& n, const std::string& what) {
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<int64_t>()) return static_cast<double>(*v);
  throw ConfigError(what + " must contain numbers (" + where(n) + ")");
}

std::vector<Point> get_points(const toml::node& n, const std::string& what) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError(what + " must be an array of [x, y] pairs (" + where(n) + ")");
  std::vector<Point> out;
  for (const auto& e : *arr) {
    const auto* p = e.as_array();
    if (!p || p->size() != 2) throw ConfigError(what + " entries must be [x, y] pairs (" + where(e) + ")");
    out.emplace_back(as_real(*p->get(0), what), as_real(*p->get(1), what));
  }
  return out;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // keep TOML floats recognisable as floats
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string points(const std::vector<Point>& p) {
  std::string s = "[";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ", ";
    s += "[" + real(p[i].x()) + ", " + real(p[i].y()) + "]";
  }
  return s + "]";
}

}  // namespace

DomainSpec ExperimentConfig::domain() const {
  if (domain_kind == "disk") return DomainSpec::unit_disk();
  if (domain_kind == "rectangle") return DomainSpec::rectangle(width, height);
  if (domain_kind == "polygon") {
    try {
      return DomainSpec::polygon(vertices);
    } catch (const MeshError& e) {
      throw ConfigError(std::string("domain.vertices: ") + e.what());
    }
  }
  throw ConfigError("domain.kind must be disk, rectangle or polygon, not '" + domain_kind + "'");
}

void ExperimentConfig::validate() const {
  const DomainSpec d = domain();
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(width > 0 && height > 0, "domain.width and domain.height must be positive");
  need(k >= 1, "problem.k must be at least 1");
  need(rho2 >= 0, "problem.rho2 must be nonnegative");
  if (!xi_auto) {
    need(static_cast<int>(xi.size()) == k, "problem.xi must list exactly k points");
    try {
      ConfigPoints(xi).validate(d);
    } catch (const Error& e) {
      throw ConfigError(std::string("problem.xi: ") + e.what());
    }
  }
  need(h > 0 && h <= 0.5, "mesh.h must lie in (0, 0.5]");
  need(levels >= 0 && levels <= 4, "mesh.levels must lie in [0, 4]");
  need(lambda_start > 0 && lambda_start <= 0.1, "lambda.start must lie in (0, 0.1]");
  need(lambda_min > 0 && lambda_min < lambda_start, "lambda.min must lie in (0, lambda.start)");
  need(lambda_shrink > 0.3 && lambda_shrink < 0.9, "lambda.shrink must lie in (0.3, 0.9)");
  for (std::size_t i = 0; i < residual_lambdas.size(); ++i) {
    need(residual_lambdas[i] > 0 && residual_lambdas[i] <= 0.1, "lambda.residual entries must lie in (0, 0.1]");
    need(i == 0 || residual_lambdas[i] < residual_lambdas[i - 1], "lambda.residual must be strictly decreasing");
  }
  need(newton_tol > 0 && newton_tol < 1e-2, "tolerances.newton must lie in (0, 1e-2)");
  need(critical_tol >= 0 && critical_tol < 1, "tolerances.critical must lie in [0, 1)");
  need(meanfield_tol > 0 && meanfield_tol < 1e-2, "tolerances.meanfield must lie in (0, 1e-2)");
  need(h_far > 0 && h_far <= 0.5, "ansatz.h_far must lie in (0, 0.5]");
  need(core_radius >= 2, "ansatz.core_radius must be at least 2");
  need(core_h > 0 && core_h <= 1, "ansatz.core_h must lie in (0, 1]");
  need(grading > 0 && grading < 1, "ansatz.grading must lie in (0, 1)");
  need(multistart >= 1 && multistart <= 1000, "search.multistart must lie in [1, 1000]");
  need(green_pairs >= 1, "green.pairs must be positive");
  need(green_radius > 0 && green_radius < 1, "green.radius must lie in (0, 1)");
  need(scan_n >= 2 && scan_n <= 400, "scan.n must lie in [2, 400]");
  need(scan_radius > 0 && scan_radius < 1, "scan.radius must lie in (0, 1)");
  need(!out.empty(), "out must not be empty");
}

std::vector<double> ExperimentConfig::ladder() const {
  return lambda_ladder(lambda_start, lambda_min, lambda_shrink);
}

std::vector<double> ExperimentConfig::residual_ladder() const {
  return residual_lambdas.empty() ? ladder() : residual_lambdas;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML syntax error: " << e.description() << " at " << source << ":" << e.source().begin.line << ":"
       << e.source().begin.column;
    throw ConfigError(os.str());
  }
  ExperimentConfig c;
  check_keys(root, "", {"seed", "out", "domain", "problem", "mesh", "lambda", "tolerances", "ansatz",
                        "search", "green", "scan", "branch"});
  {
    const int64_t s = get_int(root, "", "seed", 1);
    if (s < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
    c.out = get_string(root, "", "out", c.out);
  }
  if (const auto* t = section(root, "domain")) {
    check_keys(*t, "domain.", {"kind", "width", "height", "vertices"});
    c.domain_kind = get_string(*t, "domain.", "kind", c.domain_kind);
    c.width = get_real(*t, "domain.", "width", c.width);
    c.height = get_real(*t, "domain.", "height", c.height);
    if (const auto* v = t->get("vertices")) c.vertices = get_points(*v, "domain.vertices");
  }
  if (const auto* t = section(root, "problem")) {
    check_keys(*t, "problem.", {"k", "rho2", "xi"});
    c.k = static_cast<int>(get_int(*t, "problem.", "k", c.k));
    c.rho2 = get_real(*t, "problem.", "rho2", c.rho2);
    if (const auto* v = t->get("xi")) {
      if (auto s = v->value_exact<std::string>()) {
        if (*s != "auto") throw ConfigError("problem.xi must be \"auto\" or a list of points (" + where(*v) + ")");
        c.xi_auto = true;
      } else {
        c.xi = get_points(*v, "problem.xi");
        c.xi_auto = false;
      }
    }
  }
  if (const auto* t = section(root, "mesh")) {
    check_keys(*t, "mesh.", {"h", "levels"});
    c.h = get_real(*t, "mesh.", "h", c.h);
    c.levels = static_cast<int>(get_int(*t, "mesh.", "levels", c.levels));
  }
  if (const auto* t = section(root, "lambda")) {
    check_keys(*t, "lambda.", {"start", "min", "shrink", "residual"});
    c.lambda_start = get_real(*t, "lambda.", "start", c.lambda_start);
    c.lambda_min = get_real(*t, "lambda.", "min", c.lambda_min);
    c.lambda_shrink = get_real(*t, "lambda.", "shrink", c.lambda_shrink);
    if (const auto* v = t->get("residual")) {
      const auto* arr = v->as_array();
      if (!arr) throw ConfigError("lambda.residual must be an array (" + where(*v) + ")");
      for (const auto& e : *arr) c.residual_lambdas.push_back(as_real(e, "lambda.residual"));
    }
  }
  if (const auto* t = section(root, "tolerances")) {
    check_keys(*t, "tolerances.", {"newton", "critical", "meanfield"});
    c.newton_tol = get_real(*t, "tolerances.", "newton", c.newton_tol);
    c.critical_tol = get_real(*t, "tolerances.", "critical", c.critical_tol);
    c.meanfield_tol = get_real(*t, "tolerances.", "meanfield", c.meanfield_tol);
  }
  if (const auto* t = section(root, "ansatz")) {
    check_keys(*t, "ansatz.", {"h_far", "core_radius", "core_h", "grading"});
    c.h_far = get_real(*t, "ansatz.", "h_far", c.h_far);
    c.core_radius = get_real(*t, "ansatz.", "core_radius", c.core_radius);
    c.core_h = get_real(*t, "ansatz.", "core_h", c.core_h);
    c.grading = get_real(*t, "ansatz.", "grading", c.grading);
  }
  if (const auto* t = section(root, "search")) {
    check_keys(*t, "search.", {"multistart"});
    c.multistart = static_cast<int>(get_int(*t, "search.", "multistart", c.multistart));
  }
  if (const auto* t = section(root, "green")) {
    check_keys(*t, "green.", {"pairs", "radius"});
    c.green_pairs = static_cast<int>(get_int(*t, "green.", "pairs", c.green_pairs));
    c.green_radius = get_real(*t, "green.", "radius", c.green_radius);
  }
  if (const auto* t = section(root, "scan")) {
    check_keys(*t, "scan.", {"n", "radius"});
    c.scan_n = static_cast<int>(get_int(*t, "scan.", "n", c.scan_n));
    c.scan_radius = get_real(*t, "scan.", "radius", c.scan_radius);
  }
  if (const auto* t = section(root, "branch")) {
    check_keys(*t, "branch.", {"singular_value", "refine_check", "dump_fields"});
    c.singular_value = get_bool(*t, "branch.", "singular_value", c.singular_value);
    c.refine_check = get_bool(*t, "branch.", "refine_check", c.refine_check);
    c.dump_fields = get_bool(*t, "branch.", "dump_fields", c.dump_fields);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "seed = " << c.seed << "\n";
  os << "out = " << toml::value<std::string>(c.out) << "\n\n";
  os << "[domain]\nkind = " << toml::value<std::string>(c.domain_kind) << "\nwidth = " << real(c.width)
     << "\nheight = " << real(c.height) << "\nvertices = " << points(c.vertices) << "\n\n";
  os << "[problem]\nk = " << c.k << "\nrho2 = " << real(c.rho2) << "\nxi = "
     << (c.xi_auto ? std::string("\"auto\"") : points(c.xi)) << "\n\n";
  os << "[mesh]\nh = " << real(c.h) << "\nlevels = " << c.levels << "\n\n";
  os << "[lambda]\nstart = " << real(c.lambda_start) << "\nmin = " << real(c.lambda_min)
     << "\nshrink = " << real(c.lambda_shrink) << "\nresidual = [";
  for (std::size_t i = 0; i < c.residual_lambdas.size(); ++i) os << (i ? ", " : "") << real(c.residual_lambdas[i]);
  os << "]\n\n";
  os << "[tolerances]\nnewton = " << real(c.newton_tol) << "\ncritical = " << real(c.critical_tol)
     << "\nmeanfield = " << real(c.meanfield_tol) << "\n\n";
  os << "[ansatz]\nh_far = " << real(c.h_far) << "\ncore_radius = " << real(c.core_radius)
     << "\ncore_h = " << real(c.core_h) << "\ngrading = " << real(c.grading) << "\n\n";
  os << "[search]\nmultistart = " << c.multistart << "\n\n";
  os << "[green]\npairs = " << c.green_pairs << "\nradius = " << real(c.green_radius) << "\n\n";
  os << "[scan]\nn = " << c.scan_n << "\nradius = " << real(c.scan_radius) << "\n\n";
  os << "[branch]\nsingular_value = " << b(c.singular_value) << "\nrefine_check = " << b(c.refine_check)
     << "\ndump_fields = " << b(c.dump_fields) << "\n";
  return os.str();
}

std::string config_hash(const ExperimentConfig& c) { return sha256_hex(serialize_config(c)); }

}  // namespace toda
