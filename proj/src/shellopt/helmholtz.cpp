#include "shellopt/helmholtz.hpp"

#include <cmath>

namespace shellopt {

HelmholtzFilter::HelmholtzFilter(const RegularGrid& grid, double radius,
                                 std::vector<uint8_t> pinned)
    : grid_(grid), radius_(radius), pinned_(std::move(pinned)) {
  if (radius < 0.0) throw ConfigError("filter radius must be >= 0");
  const int n = grid.node_count();
  if (!pinned_.empty() && int(pinned_.size()) != n)
    throw ConfigError("pinned mask size does not match the grid");
  if (pinned_.empty()) pinned_.assign(size_t(n), 0);
  for (uint8_t p : pinned_) pin_count_ += p;

  weights_.resize(n);
  for (int i = 0; i < n; ++i)
    weights_[i] = 1.0 / double(1 << grid.boundary_axis_count(i));

  // Graph-Laplacian assembly over grid edges. The edge coefficient carries
  // the trapezoid weight of the two transverse axes (shared by both
  // endpoints), which is exactly the row scaling that symmetrizes the
  // mirrored zero-flux stencil.
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const double r2 = radius * radius;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(size_t(n) * 8);

  auto add_entry = [&](int i, int j, double v) {
    const bool pi = pinned_[size_t(i)] != 0;
    const bool pj = pinned_[size_t(j)] != 0;
    if (pi) return;  // pinned rows become identity rows below
    if (pj) {
      couplings_.push_back({i, j, v});
      return;
    }
    trip.emplace_back(i, j, v);
  };

  for (int i = 0; i < n; ++i) {
    if (pinned_[size_t(i)]) {
      trip.emplace_back(i, i, 1.0);
      continue;
    }
    add_entry(i, i, weights_[i]);
  }
  if (r2 > 0.0) {
    const int nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
    const int dims[3] = {nx, ny, nz};
    for (int k = 0; k < nz; ++k) {
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const int a = grid.node_index(i, j, k);
          const int ijk[3] = {i, j, k};
          for (int axis = 0; axis < 3; ++axis) {
            if (ijk[axis] + 1 >= dims[axis]) continue;
            const int b = grid.node_index(i + (axis == 0), j + (axis == 1),
                                          k + (axis == 2));
            double wt = 1.0;  // transverse boundary weight of this edge
            for (int t = 0; t < 3; ++t) {
              if (t == axis) continue;
              if (ijk[t] == 0 || ijk[t] == dims[t] - 1) wt *= 0.5;
            }
            const double c = r2 * wt * inv_h2;
            add_entry(a, a, c);
            add_entry(b, b, c);
            add_entry(a, b, -c);
            add_entry(b, a, -c);
          }
        }
      }
    }
  }

  matrix_.resize(n, n);
  matrix_.setFromTriplets(trip.begin(), trip.end());
  solver_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  solver_->compute(matrix_);
  if (solver_->info() != Eigen::Success)
    throw NumericalError("Helmholtz filter factorization failed");
}

NodalField HelmholtzFilter::solve(const Eigen::VectorXd& rhs) const {
  NodalField out = solver_->solve(rhs);
  if (solver_->info() != Eigen::Success)
    throw NumericalError("Helmholtz filter solve failed");
  return out;
}

NodalField HelmholtzFilter::apply(const NodalField& source) const {
  if (pin_count_ == 0) {
    return solve(weights_.cwiseProduct(source));
  }
  return apply(source, NodalField::Zero(grid_.node_count()));
}

NodalField HelmholtzFilter::apply(const NodalField& source,
                                  const NodalField& pin_values) const {
  const int n = grid_.node_count();
  if (source.size() != n || pin_values.size() != n)
    throw ConfigError("field size does not match the grid");
  Eigen::VectorXd rhs = weights_.cwiseProduct(source);
  for (int i = 0; i < n; ++i)
    if (pinned_[size_t(i)]) rhs[i] = pin_values[i];
  for (const Coupling& c : couplings_)
    rhs[c.row] -= c.coeff * pin_values[c.col];
  return solve(rhs);
}

NodalField HelmholtzFilter::solve_dual(const NodalField& g) const {
  if (pin_count_ > 0)
    throw NumericalError("solve_dual is only defined for the zero-flux filter");
  return weights_.cwiseProduct(solve(g));
}

}  // namespace shellopt
