#include "toda/green.hpp"

#include <cmath>
#include <sstream>

#include "toda/kernels.hpp"

namespace toda {

namespace {

double disk_H(const Point& x, const Point& y) {
  const double q = x.squaredNorm() * y.squaredNorm() - 2.0 * x.dot(y) + 1.0;
  return std::log(q) / (4.0 * kPi);
}

Point disk_grad1_H(const Point& x, const Point& y) {
  const double q = x.squaredNorm() * y.squaredNorm() - 2.0 * x.dot(y) + 1.0;
  return (2.0 * y.squaredNorm() * x - 2.0 * y) / (4.0 * kPi * q);
}

}  // namespace

GreenEvaluator GreenEvaluator::analytic_disk() {
  GreenEvaluator g;
  g.mode_ = Mode::AnalyticDisk;
  g.domain_ = DomainSpec::unit_disk();
  g.cache_ = std::make_shared<Cache>();
  return g;
}

GreenEvaluator GreenEvaluator::numeric(std::shared_ptr<const DirichletOperator> op,
                                       DomainSpec domain) {
  if (!op) throw ArgumentError("numeric Green evaluator needs an operator");
  GreenEvaluator g;
  g.mode_ = Mode::Numeric;
  g.domain_ = std::move(domain);
  g.op_ = std::move(op);
  g.cache_ = std::make_shared<Cache>();
  return g;
}

void GreenEvaluator::check_source(const Point& y) const {
  if (!(domain_.distance_to_boundary(y) > 1e-12 * domain_.diameter())) {
    std::ostringstream os;
    os.precision(17);
    os << "source (" << y.x() << ", " << y.y() << ") is on or outside the boundary";
    throw IllPosedSourceError(os.str());
  }
}

std::shared_ptr<const Vec> GreenEvaluator::robin_field(const Point& y) const {
  if (mode_ != Mode::Numeric) throw ArgumentError("robin_field is only defined in numeric mode");
  check_source(y);
  const std::pair<long long, long long> key{std::llround(y.x() * 1e9), std::llround(y.y() * 1e9)};
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->fields.find(key);
    if (it != cache_->fields.end()) return it->second;
  }
  // Solve outside the lock; racing solvers produce identical fields.
  const Mesh& m = op_->mesh();
  Vec g = Vec::Zero(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i)
    if (m.is_boundary(i)) g[i] = std::log((m.nodes()[i] - y).norm()) / (2.0 * kPi);
  auto field = std::make_shared<const Vec>(op_->harmonic_extension(g));
  std::lock_guard<std::mutex> lock(cache_->mu);
  // descent paths visit many sources once; crude bound on memory
  if (cache_->fields.size() >= 512) cache_->fields.clear();
  return cache_->fields.emplace(key, field).first->second;
}

std::size_t GreenEvaluator::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  return cache_->fields.size();
}

double GreenEvaluator::robin_H(const Point& x, const Point& y) const {
  check_source(y);
  if (mode_ == Mode::AnalyticDisk) return disk_H(x, y);
  ScalarField f;
  f.mesh = op_->mesh_ptr();
  f.values = *robin_field(y);
  return recovered_value(f, x);
}

Point GreenEvaluator::grad1_H(const Point& x, const Point& y) const {
  check_source(y);
  if (mode_ == Mode::AnalyticDisk) return disk_grad1_H(x, y);
  ScalarField f;
  f.mesh = op_->mesh_ptr();
  f.values = *robin_field(y);
  return gradient_at(f, x).value;
}

double GreenEvaluator::green_G(const Point& x, const Point& y) const {
  const double r = (x - y).norm();
  if (r == 0) throw SingularityError("green_G evaluated at x = y");
  return -std::log(r) / (2.0 * kPi) + robin_H(x, y);
}

Point GreenEvaluator::grad1_G(const Point& x, const Point& y) const {
  const Point d = x - y;
  const double r2 = d.squaredNorm();
  if (r2 == 0) throw SingularityError("grad1_G evaluated at x = y");
  return -d / (2.0 * kPi * r2) + grad1_H(x, y);
}

Vec GreenEvaluator::robin_at(const QuadPoints& q, const Mesh& mesh, const Point& y) const {
  check_source(y);
  Vec out(q.size());
  if (mode_ == Mode::AnalyticDisk) {
    const double y2 = y.squaredNorm();
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double x2 = q.x[k] * q.x[k] + q.y[k] * q.y[k];
      const double xy = q.x[k] * y.x() + q.y[k] * y.y();
      out[k] = std::log(x2 * y2 - 2.0 * xy + 1.0) / (4.0 * kPi);
    }
    return out;
  }
  if (&mesh != &op_->mesh()) throw DimensionError("robin_at: quadrature is not on the Green mesh");
  return interpolate_at(q, mesh, *robin_field(y));
}

Vec GreenEvaluator::robin_at_nodes(const Mesh& mesh, const Point& y) const {
  check_source(y);
  if (mode_ == Mode::Numeric) {
    if (&mesh != &op_->mesh()) throw DimensionError("robin_at_nodes: not the Green mesh");
    return *robin_field(y);
  }
  Vec out(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) out[i] = disk_H(mesh.nodes()[i], y);
  return out;
}

double GreenEvaluator::harmonicity_residual(const Point& y) const {
  if (mode_ != Mode::Numeric) return 0.0;
  const Vec& f = *robin_field(y);
  const Vec r = op_->stiffness() * f;
  const Vec ri = restrict_interior(op_->mesh(), r);
  return ri.cwiseAbs().maxCoeff() / std::max(r.cwiseAbs().maxCoeff(), 1e-300);
}

double h_weight(const GreenEvaluator& g, const ConfigPoints& xi, const Point& x) {
  double prod = 1.0, hsum = 0.0;
  for (const auto& p : xi.points) {
    const double r2 = (x - p).squaredNorm();
    if (r2 == 0) return 0.0;
    prod *= r2;
    hsum += g.robin_H(x, p);
  }
  return prod * std::exp(-4.0 * kPi * hsum);
}

Vec h_weight_at(const GreenEvaluator& g, const ConfigPoints& xi, const QuadPoints& q,
                const Mesh& mesh) {
  const std::size_t n = q.size();
  Vec s = Vec::Zero(n), prod = Vec::Ones(n);
  for (const auto& p : xi.points) {
    s += g.robin_at(q, mesh, p);
    for (std::size_t k = 0; k < n; ++k) {
      const double dx = q.x[k] - p.x(), dy = q.y[k] - p.y();
      prod[k] *= dx * dx + dy * dy;
    }
  }
  s *= -4.0 * kPi;
  Vec out(n);
  kernels::vexp(s.data(), out.data(), n);
  kernels::mul_inplace(out.data(), prod.data(), n);
  return out;
}

}  // namespace toda
