#include "shellopt/pipeline.hpp"

namespace shellopt {

double heaviside(double v, double bandwidth) {
  if (v < -bandwidth) return 0.0;
  if (v > bandwidth) return 1.0;
  const double s = v / bandwidth;
  const double s2 = s * s;
  return 0.5 + s * (15.0 / 16.0 + s2 * (-5.0 / 8.0 + s2 * (3.0 / 16.0)));
}

double heaviside_deriv(double v, double bandwidth) {
  if (v < -bandwidth || v > bandwidth) return 0.0;
  const double s = v / bandwidth;
  const double q = 1.0 - s * s;
  return 15.0 / (16.0 * bandwidth) * q * q;
}

NodalField project(const NodalField& filtered, double bandwidth) {
  NodalField out(filtered.size());
  for (Eigen::Index i = 0; i < filtered.size(); ++i)
    out[i] = 2.0 * heaviside(filtered[i], bandwidth) - 1.0;
  return out;
}

namespace {

std::vector<uint8_t> dirichlet_mask(const BoundaryTag& tags) {
  // An all-zero mask means "no pins" to the filter.
  bool any = false;
  for (uint8_t d : tags.on_dirichlet) any = any || d != 0;
  if (!any) return {};
  return tags.on_dirichlet;
}

}  // namespace

LevelSetPipeline::LevelSetPipeline(const RegularGrid& grid,
                                   const BoundaryTag& tags, double radius,
                                   double bandwidth)
    : grid_(grid),
      bandwidth_(bandwidth),
      design_filter_(grid, radius),
      levelset_filter_(grid, radius, dirichlet_mask(tags)) {
  if (!(bandwidth > 0.0)) throw ConfigError("projection bandwidth must be positive");
}

void LevelSetPipeline::set_seed(const NodalField& psi0) {
  // The unpinned chain: the design filter is the same operator as the
  // level set filter without its pins (same radius, zero-flux everywhere).
  pin_values_ = design_filter_.apply(
      project(design_filter_.apply(psi0), bandwidth_));
  seeded_ = true;
}

PipelineFields LevelSetPipeline::evaluate(const NodalField& psi) const {
  if (levelset_filter_.has_pins() && !seeded_)
    throw NumericalError("pipeline has Gamma_D pins but no seed design");
  PipelineFields f;
  f.filtered = design_filter_.apply(psi);
  f.projected = project(f.filtered, bandwidth_);
  f.levelset = levelset_filter_.has_pins()
                   ? levelset_filter_.apply(f.projected, pin_values_)
                   : levelset_filter_.apply(f.projected);
  return f;
}

double LevelSetPipeline::enclosed_volume(const NodalField& psi) const {
  return enclosed_volume_of_projected(
      project(design_filter_.apply(psi), bandwidth_));
}

double LevelSetPipeline::enclosed_volume_of_projected(
    const NodalField& projected) const {
  double vol = 0.0;
  for (int i = 0; i < grid_.node_count(); ++i)
    vol += grid_.weight(i) * 0.5 * (projected[i] + 1.0);
  return vol;
}

const NodalField& LevelSetPipeline::pin_values() const {
  if (!seeded_) throw NumericalError("pipeline seed has not been set");
  return pin_values_;
}

}  // namespace shellopt
