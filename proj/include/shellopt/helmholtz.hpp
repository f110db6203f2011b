#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <vector>

#include "shellopt/common.hpp"
#include "shellopt/grid.hpp"

namespace shellopt {

// Screened-Poisson smoother on the grid nodes:
//
//   (-radius^2 lap + 1) out = in,   zero-flux on the domain boundary
//
// discretized with the 7-point stencil and mirrored boundary stencils. Rows
// are scaled by the trapezoid weights, which makes the matrix a symmetric
// M-matrix: the smoother maps constants to themselves exactly, preserves the
// input range, and preserves the weighted mean in pure zero-flux mode.
//
// Nodes may instead be pinned to caller-supplied values (symmetric row/column
// elimination); the pinned set is fixed at construction, the values per solve.
//
// The matrix is factorized once (sparse LDLT). A Jacobi-PCG iteration would
// work as well, but at the grid sizes this project targets (<= a few 1e4
// nodes) the direct factorization is faster and bit-reproducible.
class HelmholtzFilter {
public:
  // `pinned` is empty (pure zero-flux) or one flag per node.
  HelmholtzFilter(const RegularGrid& grid, double radius,
                  std::vector<uint8_t> pinned = {});

  // Solves with all pinned values = 0 (no-op list if nothing is pinned).
  NodalField apply(const NodalField& source) const;

  // Solves with pinned nodes held at pin_values (read only at pinned nodes).
  NodalField apply(const NodalField& source, const NodalField& pin_values) const;

  // Returns W * A^{-1} g, the adjoint of this filter acting on a gradient
  // with respect to the *output* field. Only defined for the pure zero-flux
  // instance (the chain that needs it never pins nodes).
  NodalField solve_dual(const NodalField& g) const;

  double radius() const { return radius_; }
  const RegularGrid& grid() const { return grid_; }
  bool has_pins() const { return pin_count_ > 0; }

private:
  const RegularGrid& grid_;
  double radius_;
  std::vector<uint8_t> pinned_;
  int pin_count_ = 0;
  Eigen::VectorXd weights_;  // trapezoid node weights (no h^3, cancels out)
  Eigen::SparseMatrix<double> matrix_;
  // Eliminated couplings (free row, pinned column, coefficient) for the
  // right-hand-side correction when pin values are nonzero.
  struct Coupling {
    int row;
    int col;
    double coeff;
  };
  std::vector<Coupling> couplings_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> solver_;

  NodalField solve(const Eigen::VectorXd& rhs) const;
};

}  // namespace shellopt
