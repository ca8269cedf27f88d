#include "toda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "toda/parallel.hpp"
#include "toda/report.hpp"

namespace toda {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Uniform in [0,1) from the raw 64-bit stream; the std distributions are
// implementation-defined and would tie the outputs to one standard library.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

Point center_of(const DomainSpec& d) {
  switch (d.kind()) {
    case DomainSpec::Kind::UnitDisk: return Point(0, 0);
    case DomainSpec::Kind::Rectangle: return Point(d.width() / 2, d.height() / 2);
    default: {
      Point c(0, 0);
      for (const auto& v : d.vertices()) c += v;
      return c / static_cast<double>(d.vertices().size());
    }
  }
}

// Largest distance to the boundary, sampled on a grid (exact for the disk).
double max_depth(const DomainSpec& d) {
  if (d.kind() == DomainSpec::Kind::UnitDisk) return 1.0;
  const Point lo = d.bbox_min(), hi = d.bbox_max();
  double best = 0;
  const int n = 200;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const Point p(lo.x() + (hi.x() - lo.x()) * i / n, lo.y() + (hi.y() - lo.y()) * j / n);
      best = std::max(best, d.distance_to_boundary(p));
    }
  return best;
}

Point random_point(const DomainSpec& d, std::mt19937_64& rng, double min_depth) {
  const Point lo = d.bbox_min(), hi = d.bbox_max();
  for (int tries = 0; tries < 1000000; ++tries) {
    const Point p(lo.x() + (hi.x() - lo.x()) * uniform01(rng), lo.y() + (hi.y() - lo.y()) * uniform01(rng));
    if (d.distance_to_boundary(p) >= min_depth) return p;
  }
  throw ArgumentError("no admissible random point: margin too large for the domain");
}

json pts(const ConfigPoints& xi) {
  json a = json::array();
  for (const auto& p : xi.points) a.push_back({p.x(), p.y()});
  return a;
}

json critical_json(const CriticalPoint& c) {
  return {{"xi", pts(c.xi)},
          {"value", c.value},
          {"gradient_norm", c.gradient_norm},
          {"tol", c.tol},
          {"hessian_eigenvalues", c.hessian_eigenvalues},
          {"classification", c.classification},
          {"iterations", c.iterations},
          {"polish_steps", c.polish_steps}};
}

struct Runner {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  RunOutput& out;
  std::string command;
  std::string hash;

  std::optional<CriticalPoint> critical;

  void log(int level, const std::string& msg) const {
    if (opts.log && opts.verbosity >= level) *opts.log << msg << "\n";
  }

  std::string csv_meta() const {
    std::ostringstream os;
    os << "seed=" << cfg.seed << " config=" << hash << " command=" << command;
    return os.str();
  }

  json json_meta() const { return {{"seed", cfg.seed}, {"config_hash", hash}, {"command", command}}; }

  // Returns false if the stage did not complete.
  bool stage(const std::string& name, const std::function<std::string()>& body) {
    out.stage_begin(name);
    log(1, "[" + name + "] running");
    std::string status, message;
    try {
      status = body();
    } catch (const Error& e) {
      status = "failed";
      message = "[" + e.kind() + "] " + e.what();
    } catch (const std::exception& e) {
      status = "failed";
      message = std::string("[internal] ") + e.what();
    }
    if (status.rfind("ok", 0) == 0) {
      out.stage_end(name, "ok", status.size() > 3 ? status.substr(3) : "");
      log(1, "[" + name + "] ok");
      return true;
    }
    if (message.empty()) message = status;
    out.stage_end(name, status == "failed" ? "failed" : "incomplete", message);
    if (opts.log) *opts.log << "stage '" << name << "' failed: " << message << "\n";
    return false;
  }

  ConfigPoints xi_or_auto() const {
    return cfg.xi_auto ? auto_xi(cfg.domain(), cfg.k) : ConfigPoints(cfg.xi);
  }

  // ---- green-check
  std::string green() {
    std::vector<double> hs;
    for (int i = 0; i <= cfg.levels; ++i) hs.push_back(cfg.h / std::pow(2.0, i));
    const auto r = green_check(cfg.domain(), hs, cfg.green_pairs, cfg.green_radius, cfg.seed, opts.threads);
    CsvWriter w({"h", "nodes", "max_error", "order", "symmetry_error", "harmonicity_residual"});
    w.comment(csv_meta());
    w.comment(std::string("reference=") + (r.analytic_reference ? "closed-form" : "finest-level") +
              " pairs=" + std::to_string(r.pairs.size()));
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
      const auto& l = r.levels[i];
      const double order = i > 0 && i - 1 < r.orders.size() ? r.orders[i - 1] : std::nan("");
      w.add(l.h).add(l.nodes).add(l.max_error).add(order).add(l.symmetry).add(l.harmonicity).end_row();
    }
    out.write("green_check.csv", w.str());
    return "ok";
  }

  // ---- meanfield
  std::string meanfield() {
    const DomainSpec d = cfg.domain();
    const ConfigPoints xi = xi_or_auto();
    xi.validate(d);
    json j = json_meta();
    j["xi"] = pts(xi);
    j["rho2"] = cfg.rho2;
    j["levels"] = json::array();
    std::vector<double> sig;
    std::string trace_csv;
    for (int lvl = 0; lvl < 2; ++lvl) {
      const double h = cfg.h / (lvl + 1);
      auto op = std::make_shared<const DirichletOperator>(std::make_shared<const Mesh>(build_mesh(d, h)));
      const GreenEvaluator g =
          d.kind() == DomainSpec::Kind::UnitDisk ? GreenEvaluator::analytic_disk() : GreenEvaluator::numeric(op, d);
      MeanFieldProblem pb(op, g, xi, cfg.rho2);
      MeanFieldOptions mo;
      mo.tol = cfg.meanfield_tol;
      std::ostringstream tr;
      if (opts.verbosity >= 2 && lvl == 1) mo.trace = &tr;
      const auto sol = solve_meanfield(pb, nullptr, mo);
      const auto nd = nondegeneracy_check(sol, pb);
      bool warn = false;
      const auto gi = grad_Itilde(pb, sol, &warn);
      json gj = json::array();
      for (const auto& p : gi) gj.push_back({p.x(), p.y()});
      j["levels"].push_back({{"h", h},
                             {"nodes", op->mesh().num_nodes()},
                             {"energy", sol.energy},
                             {"newton_iterations", sol.newton_iterations},
                             {"gradient_norm", sol.gradient_norm},
                             {"sigma_min", nd.sigma_min},
                             {"sigma_laplace", nd.sigma_laplace},
                             {"nondegenerate", nd.nondegenerate},
                             {"inconclusive", nd.inconclusive},
                             {"grad_Itilde", gj},
                             {"grad_Itilde_boundary_warning", warn}});
      sig.push_back(nd.sigma_min);
      if (lvl == 1) {
        std::ostringstream f;
        write_field_dump(f, sol.z, "z");
        out.write("meanfield_z.field", f.str());
        if (mo.trace) {
          trace_csv = "# " + csv_meta() + "\niteration,energy,gradient_norm,step\n" + tr.str();
          out.write("meanfield_trace.csv", trace_csv);
        }
      }
    }
    const double rel = std::abs(sig[1] - sig[0]) / std::max(std::abs(sig[1]), 1e-300);
    j["sigma_refinement_change"] = rel;
    j["verdict"] = rel < 0.2 ? (sig[1] > 0 ? "nondegenerate (refinement-consistent)" : "degenerate")
                             : "inconclusive (sigma_min not refinement-consistent)";
    out.write("meanfield.json", j.dump(2) + "\n");
    return "ok";
  }

  // ---- lambda-scan
  std::string scan() {
    const DomainSpec d = cfg.domain();
    const ReducedEnergyContext ctx = make_context(cfg, cfg.h);
    const double hm = ctx.mesh_scale();
    const double margin = std::max(3 * hm, 0.02) + 1e-12;
    const double depth = max_depth(d);
    const Point c = center_of(d);
    // rows of configurations; each row is swept with warm starts
    std::vector<std::vector<ConfigPoints>> rows;
    if (cfg.k == 1) {
      const Point lo = d.bbox_min(), hi = d.bbox_max();
      for (int i = 0; i < cfg.scan_n; ++i) {
        std::vector<ConfigPoints> row;
        for (int j = 0; j < cfg.scan_n; ++j) {
          const double s = cfg.scan_n == 1 ? 0.5 : static_cast<double>(j) / (cfg.scan_n - 1);
          const double t = cfg.scan_n == 1 ? 0.5 : static_cast<double>(i) / (cfg.scan_n - 1);
          const Point p(lo.x() + (hi.x() - lo.x()) * s, lo.y() + (hi.y() - lo.y()) * t);
          const Point q = c + cfg.scan_radius * (p - c);
          if (d.distance_to_boundary(q) >= margin) row.push_back(ConfigPoints({q}));
        }
        if (!row.empty()) rows.push_back(std::move(row));
      }
    } else {
      // scaled regular k-gons: one row
      std::vector<ConfigPoints> row;
      for (int j = 1; j <= cfg.scan_n; ++j) {
        const double r = cfg.scan_radius * depth * j / cfg.scan_n;
        std::vector<Point> p;
        for (int i = 0; i < cfg.k; ++i)
          p.push_back(c + r * Point(std::cos(2 * kPi * i / cfg.k), std::sin(2 * kPi * i / cfg.k)));
        ConfigPoints xi(p);
        if (xi.boundary_margin(d) >= margin) row.push_back(xi);
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::vector<LambdaEvaluation>> res(rows.size());
    std::vector<std::vector<std::string>> errs(rows.size());
    parallel_for(static_cast<int>(rows.size()), opts.threads, [&](int r) {
      ScalarField warm;
      for (const auto& xi : rows[r]) {
        try {
          res[r].push_back(lambda_value(xi, ctx, warm.mesh ? &warm : nullptr));
          warm = res[r].back().z;
          errs[r].push_back("");
        } catch (const Error& e) {
          res[r].push_back(LambdaEvaluation{});
          res[r].back().xi = xi;
          res[r].back().value = std::nan("");
          errs[r].push_back(e.kind());
        }
      }
    });
    std::vector<std::string> cols;
    for (int i = 1; i <= cfg.k; ++i) {
      cols.push_back("x" + std::to_string(i));
      cols.push_back("y" + std::to_string(i));
    }
    for (const char* s : {"Lambda", "half_I", "robin_part", "interaction_part"}) cols.push_back(s);
    for (int i = 1; i <= cfg.k; ++i) {
      cols.push_back("grad_x" + std::to_string(i));
      cols.push_back("grad_y" + std::to_string(i));
    }
    cols.push_back("meanfield_iterations");
    cols.push_back("error");
    CsvWriter w(cols);
    w.comment(csv_meta());
    int failures = 0;
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < rows[r].size(); ++j) {
        const auto& e = res[r][j];
        for (const auto& p : rows[r][j].points) w.add(p.x()).add(p.y());
        w.add(e.value).add(e.half_I).add(e.robin_part).add(e.interaction_part);
        for (int i = 0; i < cfg.k; ++i) {
          const Point g = i < static_cast<int>(e.gradient.size()) ? e.gradient[i] : Point(NAN, NAN);
          w.add(g.x()).add(g.y());
        }
        w.add(e.meanfield_iterations).add(errs[r][j]).end_row();
        failures += !errs[r][j].empty();
      }
    out.write("lambda_scan.csv", w.str());
    return failures ? "ok: " + std::to_string(failures) + " points failed" : "ok";
  }

  // ---- find-critical
  std::string find() {
    const DomainSpec d = cfg.domain();
    const ReducedEnergyContext ctx = make_context(cfg, cfg.h);
    std::vector<ConfigPoints> seeds;
    if (!cfg.xi_auto) {
      seeds.push_back(ConfigPoints(cfg.xi));
    } else {
      const double depth = max_depth(d);
      const double margin = std::max(4 * ctx.mesh_scale(), 0.1 * depth);
      seeds = random_configs(d, cfg.k, cfg.multistart, cfg.seed, margin, 0.1 * depth);
    }
    CriticalOptions co;
    co.tol = cfg.critical_tol;
    std::ostringstream tr;
    if (opts.verbosity >= 2 && seeds.size() == 1) co.trace = &tr;
    const auto entries = find_critical_multistart(seeds, ctx, co, opts.threads);
    json j = json_meta();
    j["rho2"] = cfg.rho2;
    j["k"] = cfg.k;
    j["starts"] = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      json s = {{"index", i}, {"seed_xi", pts(seeds[i])}};
      if (entries[i].result) {
        s["status"] = "converged";
        s["result"] = critical_json(*entries[i].result);
      } else {
        s["status"] = "failed";
        s["error_kind"] = entries[i].error_kind;
        s["error"] = entries[i].error;
      }
      j["starts"].push_back(s);
    }
    const int b = best_start(entries);
    if (b >= 0) {
      critical = *entries[b].result;
      j["best"] = critical_json(*critical);
      j["best_index"] = b;
    } else {
      j["best"] = nullptr;
    }
    out.write("critical.json", j.dump(2) + "\n");
    if (co.trace) out.write("critical_trace.csv", "# " + csv_meta() + "\niteration,phase,Lambda,gradient_norm,step\n" + tr.str());
    if (b < 0) {
      std::string kinds;
      for (const auto& e : entries) kinds += (kinds.empty() ? "" : ", ") + e.error_kind;
      throw NonconvergenceError("no start converged (" + kinds + ")");
    }
    return "ok";
  }

  ConfigPoints critical_or_config() const {
    if (critical) return critical->xi;
    return xi_or_auto();
  }

  // ---- ansatz (pipeline only)
  std::string ansatz() {
    const ConfigPoints xi = critical_or_config();
    const auto a = build_ansatz(cfg.domain(), xi, cfg.lambda_start, cfg.rho2, ansatz_options(cfg));
    const auto r = residual_fields(a);
    json j = json_meta();
    j["xi"] = pts(xi);
    j["lambda"] = a.lambda;
    j["d"] = a.params.d;
    j["delta"] = a.params.delta;
    j["nodes"] = a.mesh().num_nodes();
    j["mass1"] = r.mass1;
    j["E_p1.2"] = r.E_p12;
    j["E0_inf"] = r.E0_inf;
    j["z_energy"] = a.z_energy;
    out.write("ansatz.json", j.dump(2) + "\n");
    return "ok";
  }

  // ---- residual-scan
  std::string residual() {
    const ConfigPoints xi = critical_or_config();
    const auto st = norm_scaling_study(cfg.domain(), xi, cfg.rho2, cfg.residual_ladder(), ansatz_options(cfg),
                                       opts.threads);
    CsvWriter w({"lambda", "delta_min", "E_p1.2", "E_p1.5", "E0_inf", "Rt_p1.2", "Rt_p1.5", "Pw", "PZ1",
                 "PZ1_sqrt_lambda", "mass1", "nodes"});
    w.comment(csv_meta());
    for (std::size_t i = 0; i < st.reports.size(); ++i) {
      const auto& r = st.reports[i];
      w.add(r.lambda).add(r.delta_min).add(r.E_p12).add(r.E_p15).add(r.E0_inf).add(r.Rt_p12).add(r.Rt_p15);
      w.add(r.Pw_norm[0]).add(r.PZ_norm[0][1]).add(st.PZ_plateau[i]).add(r.mass1).add(r.nodes).end_row();
    }
    json f = json::object();
    for (const auto& [name, fit] : st.fits)
      f[name] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"residual", fit.residual},
                 {"samples", fit.samples}, {"decades", fit.decades}};
    w.comment("fits " + f.dump());
    out.write("residual_scan.csv", w.str());
    return "ok";
  }

  // ---- branch
  std::string branch() {
    const DomainSpec d = cfg.domain();
    const ConfigPoints xi = critical_or_config();
    BranchOptions bo;
    bo.lambda_start = cfg.lambda_start;
    bo.lambda_min = cfg.lambda_min;
    bo.shrink = cfg.lambda_shrink;
    bo.ansatz = ansatz_options(cfg);
    bo.newton.tol = cfg.newton_tol;
    bo.singular_value = cfg.singular_value;
    if (opts.verbosity >= 3) bo.trace = opts.log;
    const BranchRecord b = continuation(d, xi, cfg.rho2, bo);
    const double Ls = branch_lambda_star(b);
    const auto defect = expansion_check(b, Ls);
    std::vector<double> fine_def, extrap;
    double Ls_fine = std::nan("");
    if (cfg.refine_check) {
      BranchOptions bf = bo;
      bf.ansatz.h_far = bo.ansatz.h_far / 2;
      bf.singular_value = false;
      const BranchRecord fine = continuation(d, xi, cfg.rho2, bf);
      Ls_fine = branch_lambda_star(fine);
      fine_def = expansion_check(fine, Ls_fine);
      const std::size_t n = std::min(defect.size(), fine_def.size());
      extrap = richardson_defects({defect.begin(), defect.begin() + n}, {fine_def.begin(), fine_def.begin() + n});
    }
    std::vector<std::string> cols = {"lambda", "rho1", "J", "defect", "newton_iterations", "distance",
                                     "sigma_min", "delta_min", "nodes", "residual", "u2_max", "u2_plus_half_u1"};
    if (cfg.refine_check) {
      cols.push_back("defect_fine");
      cols.push_back("defect_extrapolated");
    }
    CsvWriter w(cols);
    w.comment(csv_meta());
    for (std::size_t i = 0; i < b.samples.size(); ++i) {
      const auto& s = b.samples[i];
      w.add(s.lambda).add(s.rho1).add(s.J).add(defect[i]).add(s.iterations).add(s.distance).add(s.sigma_min);
      w.add(s.delta_min).add(s.nodes).add(s.residual).add(s.u2_norm).add(s.u2_half_u1);
      if (cfg.refine_check) {
        w.add(i < fine_def.size() ? fine_def[i] : std::nan(""));
        w.add(i < extrap.size() ? extrap[i] : std::nan(""));
      }
      w.end_row();
    }
    json foot = {{"lambda_star", Ls}, {"k", xi.k()}, {"target_rho1", 4 * kPi * xi.k()},
                 {"truncated", b.truncated}, {"xi", pts(xi)}};
    if (cfg.refine_check) foot["lambda_star_fine"] = Ls_fine;
    w.comment("summary " + foot.dump());
    out.write("branch.csv", w.str());
    if (cfg.dump_fields && b.last) {
      std::ostringstream f1, f2;
      write_field_dump(f1, b.last->u1(), "u1");
      write_field_dump(f2, b.last->u2(), "u2");
      out.write("branch_u1.field", f1.str());
      out.write("branch_u2.field", f2.str());
    }
    if (b.truncated) return "truncated: " + b.diagnostics;
    return "ok";
  }
};

}  // namespace

std::vector<std::pair<Point, Point>> random_pairs(const DomainSpec& domain, int n, double radius,
                                                  std::uint64_t seed) {
  if (n < 1) throw ArgumentError("need at least one pair");
  if (!(radius > 0 && radius < 1)) throw ArgumentError("pair radius must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  const double need = (1 - radius) * max_depth(domain);
  std::vector<std::pair<Point, Point>> out;
  while (static_cast<int>(out.size()) < n) {
    const Point x = random_point(domain, rng, need), y = random_point(domain, rng, need);
    if ((x - y).norm() > 1e-3) out.emplace_back(x, y);
  }
  return out;
}

GreenCheckReport green_check(const DomainSpec& domain, const std::vector<double>& hs, int pairs, double radius,
                             std::uint64_t seed, int threads) {
  if (hs.empty()) throw ArgumentError("green check needs at least one mesh size");
  GreenCheckReport r;
  r.analytic_reference = domain.kind() == DomainSpec::Kind::UnitDisk;
  r.pairs = random_pairs(domain, pairs, radius, seed);
  const int n = static_cast<int>(r.pairs.size());
  std::vector<Vec> vals;
  for (double h : hs) {
    auto op = std::make_shared<const DirichletOperator>(std::make_shared<const Mesh>(build_mesh(domain, h)));
    const GreenEvaluator g = GreenEvaluator::numeric(op, domain);
    Vec v(n), vt(n), harm(n);
    parallel_for(n, threads, [&](int i) {
      const auto& [x, y] = r.pairs[i];
      v[i] = g.robin_H(x, y);
      vt[i] = g.robin_H(y, x);
      harm[i] = g.harmonicity_residual(y);
    });
    GreenCheckLevel l;
    l.h = h;
    l.nodes = op->mesh().num_nodes();
    l.symmetry = (v - vt).cwiseAbs().maxCoeff();
    l.harmonicity = harm.maxCoeff();
    r.levels.push_back(l);
    vals.push_back(v);
  }
  Vec ref(n);
  if (r.analytic_reference) {
    const GreenEvaluator a = GreenEvaluator::analytic_disk();
    for (int i = 0; i < n; ++i) ref[i] = a.robin_H(r.pairs[i].first, r.pairs[i].second);
  } else {
    ref = vals.back();
  }
  const std::size_t with_ref = r.analytic_reference ? hs.size() : hs.size() - 1;
  for (std::size_t i = 0; i < hs.size(); ++i)
    r.levels[i].max_error = i < with_ref ? (vals[i] - ref).cwiseAbs().maxCoeff() : std::nan("");
  for (std::size_t i = 1; i < with_ref; ++i)
    r.orders.push_back(std::log(r.levels[i - 1].max_error / r.levels[i].max_error) / std::log(hs[i - 1] / hs[i]));
  return r;
}

std::vector<ConfigPoints> random_configs(const DomainSpec& domain, int k, int n, std::uint64_t seed, double margin,
                                         double separation) {
  if (k < 1 || n < 1) throw ArgumentError("random_configs needs k >= 1 and n >= 1");
  std::mt19937_64 rng(seed);
  std::vector<ConfigPoints> out;
  for (int s = 0; s < n; ++s) {
    for (int tries = 0;; ++tries) {
      if (tries > 100000) throw ArgumentError("cannot place k points with the requested separation");
      std::vector<Point> p;
      for (int i = 0; i < k; ++i) p.push_back(random_point(domain, rng, margin));
      ConfigPoints c(p);
      if (c.min_separation() >= separation) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

ConfigPoints auto_xi(const DomainSpec& domain, int k) {
  if (k < 1) throw ArgumentError("k must be at least 1");
  const Point c = center_of(domain);
  if (k == 1) return ConfigPoints({c});
  const double r = 0.4 * max_depth(domain);
  std::vector<Point> p;
  for (int i = 0; i < k; ++i) p.push_back(c + r * Point(std::cos(2 * kPi * i / k), std::sin(2 * kPi * i / k)));
  return ConfigPoints(p);
}

ReducedEnergyContext make_context(const ExperimentConfig& cfg, double h) {
  const DomainSpec d = cfg.domain();
  ReducedEnergyContext ctx;
  ctx.rho2 = cfg.rho2;
  ctx.meanfield.tol = cfg.meanfield_tol;
  const bool disk = d.kind() == DomainSpec::Kind::UnitDisk;
  if (!disk || cfg.rho2 > 0)
    ctx.op = std::make_shared<const DirichletOperator>(std::make_shared<const Mesh>(build_mesh(d, h)));
  ctx.green = disk ? GreenEvaluator::analytic_disk() : GreenEvaluator::numeric(ctx.op, d);
  return ctx;
}

AnsatzOptions ansatz_options(const ExperimentConfig& cfg) {
  AnsatzOptions o;
  o.h_far = cfg.h_far;
  o.core_radius = cfg.core_radius;
  o.core_h = cfg.core_h;
  o.grading = cfg.grading;
  o.meanfield.tol = cfg.meanfield_tol;
  return o;
}

int best_start(const std::vector<MultistartEntry>& e) {
  int best = -1;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i].result && (best < 0 || e[i].result->value < e[best].result->value)) best = static_cast<int>(i);
  return best;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"green-check", "meanfield", "lambda-scan", "find-critical",
                                             "residual-scan", "branch", "full-pipeline"};
  return s;
}

int run_command(const std::string& command, const ExperimentConfig& cfg, const fs::path& out_dir,
                const RunOptions& opts) {
  const auto& cmds = subcommands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
    throw ConfigError("unknown subcommand '" + command + "'");
  cfg.validate();
  const std::string hash = config_hash(cfg);
  RunOutput out(out_dir, command, hash, cfg.seed);
  out.write("config.toml", serialize_config(cfg));
  Runner r{cfg, opts, out, command, hash, std::nullopt};
  bool ok = true;
  if (command == "green-check") ok = r.stage("green-check", [&] { return r.green(); });
  else if (command == "meanfield") ok = r.stage("meanfield", [&] { return r.meanfield(); });
  else if (command == "lambda-scan") ok = r.stage("lambda-scan", [&] { return r.scan(); });
  else if (command == "find-critical") ok = r.stage("find-critical", [&] { return r.find(); });
  else if (command == "residual-scan") ok = r.stage("residual-scan", [&] { return r.residual(); });
  else if (command == "branch") ok = r.stage("branch", [&] { return r.branch(); });
  else {
    ok = r.stage("find-critical", [&] { return r.find(); }) && r.stage("ansatz", [&] { return r.ansatz(); }) &&
         r.stage("residual-scan", [&] { return r.residual(); }) && r.stage("branch", [&] { return r.branch(); });
  }
  out.finish();
  return ok ? 0 : 3;
}

}  // namespace toda
