#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace shellopt {

// Scalar field sampled at the nodes of a RegularGrid, in node-index order.
using NodalField = Eigen::VectorXd;

using Vec3 = Eigen::Vector3d;

// Bad or inconsistent user input (config file, preset parameters, ...).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver breakdowns: non-converged iterations, singular systems, NaNs.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// The level set lost its zero isosurface (empty extraction).
class StructureVanishedError : public std::runtime_error {
public:
  explicit StructureVanishedError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Stiffness matrix factorization found a (near-)null space, i.e. the model
// is insufficiently constrained. Carries the detected null-space dimension.
class SingularSystemError : public NumericalError {
public:
  SingularSystemError(const std::string& msg, int null_dim)
      : NumericalError(msg), null_space_dim(null_dim) {}
  int null_space_dim;
};

}  // namespace shellopt
