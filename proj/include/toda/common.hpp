#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace toda {

using Point = Eigen::Vector2d;
using Vec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// Base of every library error; `kind` is a short stable tag used by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct MeshError : Error {
  explicit MeshError(const std::string& w) : Error("mesh", w) {}
};
struct OutsideDomainError : Error {
  explicit OutsideDomainError(const std::string& w) : Error("outside-domain", w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error("argument", w) {}
};
struct AssemblyError : Error {
  explicit AssemblyError(const std::string& w) : Error("assembly", w) {}
};
struct SingularityError : Error {
  explicit SingularityError(const std::string& w) : Error("singularity", w) {}
};
struct IllPosedSourceError : Error {
  explicit IllPosedSourceError(const std::string& w) : Error("ill-posed-source", w) {}
};
struct RegimeError : Error {
  explicit RegimeError(const std::string& w) : Error("regime", w) {}
};
struct NonconvergenceError : Error {
  explicit NonconvergenceError(const std::string& w) : Error("nonconvergence", w) {}
};
struct DegenerateWeightError : Error {
  explicit DegenerateWeightError(const std::string& w) : Error("degenerate-weight", w) {}
};
struct EscapedConfigError : Error {
  EscapedConfigError(const std::string& w, Eigen::VectorXd direction)
      : Error("escaped-config", w), direction(std::move(direction)) {}
  Eigen::VectorXd direction;
};
struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error("range", w) {}
};
struct BasinEscapeError : Error {
  BasinEscapeError(const std::string& w, double init_residual)
      : Error("basin-escape", w), init_residual(init_residual) {}
  double init_residual;
};
struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& w) : Error("insufficient-data", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

}  // namespace toda
