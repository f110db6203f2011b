#pragma once

#include <memory>

#include "shellopt/common.hpp"
#include "shellopt/grid.hpp"
#include "shellopt/helmholtz.hpp"

namespace shellopt {

// Quintic smoothed Heaviside on the band [-bandwidth, bandwidth]:
// 0 below the band, 1 above, C^1 at the band edges, strictly monotone inside.
double heaviside(double v, double bandwidth);

// d/dv of heaviside(); equals 15/(16*bandwidth) at v = 0, 0 outside the band.
double heaviside_deriv(double v, double bandwidth);

// Bounded projection 2*heaviside(v) - 1, mapping the band onto [-1, 1].
NodalField project(const NodalField& filtered, double bandwidth);

// Fields produced by one pass of the design -> level set chain.
struct PipelineFields {
  NodalField filtered;   // design after the first smoother
  NodalField projected;  // bounded projection of `filtered`
  NodalField levelset;   // second smoother, pinned to the seed on Gamma_D
};

// The fixed design -> level set chain: smooth, project, smooth again. The
// second smoother holds Gamma_D nodes at the seed design's level set values
// so the structure cannot leave the configured boundary regions. Both
// smoothers share one radius.
class LevelSetPipeline {
public:
  LevelSetPipeline(const RegularGrid& grid, const BoundaryTag& tags,
                   double radius, double bandwidth);

  // Evaluates the chain on the seed design with the pin inactive and stores
  // the resulting level set as the pin values. Evaluating the seed afterwards
  // reproduces exactly the same level set (the pin is consistent at start).
  void set_seed(const NodalField& psi0);

  PipelineFields evaluate(const NodalField& psi) const;

  // Volume enclosed by the projected field, integral of (projected+1)/2 over
  // the domain with trapezoid weights. Runs only the first smoother, so it is
  // cheap enough for per-step feasibility checks.
  double enclosed_volume(const NodalField& psi) const;
  double enclosed_volume_of_projected(const NodalField& projected) const;

  const RegularGrid& grid() const { return grid_; }
  const HelmholtzFilter& design_filter() const { return design_filter_; }
  const NodalField& pin_values() const;
  double bandwidth() const { return bandwidth_; }
  bool has_pins() const { return levelset_filter_.has_pins(); }

private:
  const RegularGrid& grid_;
  double bandwidth_;
  HelmholtzFilter design_filter_;    // zero-flux everywhere
  HelmholtzFilter levelset_filter_;  // pinned on Gamma_D (if any)
  NodalField pin_values_;
  bool seeded_ = false;
};

}  // namespace shellopt
