#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "toda/config_points.hpp"
#include "toda/fem.hpp"

namespace toda {

// Dirichlet Green function of the Laplacian,
//   G(x,y) = (1/2pi) ln(1/|x-y|) + H(x,y),
// with H closed-form on the unit disk or computed by one discrete harmonic
// extension per source point.
class GreenEvaluator {
 public:
  enum class Mode { AnalyticDisk, Numeric };

  static GreenEvaluator analytic_disk();
  static GreenEvaluator numeric(std::shared_ptr<const DirichletOperator> op, DomainSpec domain);

  Mode mode() const { return mode_; }
  const DomainSpec& domain() const { return domain_; }
  // Numeric mode only.
  const std::shared_ptr<const DirichletOperator>& op() const { return op_; }

  double robin_H(const Point& x, const Point& y) const;
  double green_G(const Point& x, const Point& y) const;
  Point grad1_H(const Point& x, const Point& y) const;
  Point grad1_G(const Point& x, const Point& y) const;

  // H(., y) at the nodes of the numeric mesh, cached by source (1e-9 grid).
  std::shared_ptr<const Vec> robin_field(const Point& y) const;
  // H(x_q, y) at quadrature points of `mesh`. Numeric mode requires `mesh` to
  // be the evaluator's mesh.
  Vec robin_at(const QuadPoints& q, const Mesh& mesh, const Point& y) const;
  Vec robin_at_nodes(const Mesh& mesh, const Point& y) const;

  // max |K_II H(.,y)| / max |K H(.,y)| (discrete harmonicity residual).
  double harmonicity_residual(const Point& y) const;
  std::size_t cache_size() const;

 private:
  GreenEvaluator() = default;
  void check_source(const Point& y) const;

  struct Cache {
    std::mutex mu;
    std::map<std::pair<long long, long long>, std::shared_ptr<const Vec>> fields;
  };

  Mode mode_ = Mode::AnalyticDisk;
  DomainSpec domain_ = DomainSpec::unit_disk();
  std::shared_ptr<const DirichletOperator> op_;
  std::shared_ptr<Cache> cache_;
};

// h(x, xi) = prod_i |x - xi_i|^2 exp(-4 pi H(x, xi_i))
double h_weight(const GreenEvaluator& g, const ConfigPoints& xi, const Point& x);
// Same, at all quadrature points of `mesh`, via the product formula.
Vec h_weight_at(const GreenEvaluator& g, const ConfigPoints& xi, const QuadPoints& q,
                const Mesh& mesh);

}  // namespace toda
