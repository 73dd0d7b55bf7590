#pragma once

// Desk-scale robustness evaluation of affordance templates.
//
// The hand is frozen at the template configuration while the object pose
// is perturbed, modeling drift between the taught template and the real
// part. A trial survives when the object's center of mass is still inside
// the hull of the recomputed contact centers. The lever-arm moment of the
// extraction force about the grasp center is reported next to the survival
// rate; it is not folded into a pass/fail threshold.

#include <cstdint>
#include <string>
#include <vector>

#include "atk/affordance.hpp"
#include "atk/hand_model.hpp"

namespace atk {

struct PerturbationSpec {
  double translation_sigma = 0.0;  // meters, isotropic Gaussian
  double rotation_sigma = 0.0;     // radians, Gaussian angle about a uniform axis
  int trials = 10;
  std::uint64_t seed = 1;
  double contact_threshold = 0.002;
  unsigned jobs = 1;
};

/// ‖(c − g) × F‖ with c the hull vertex centroid of the template.
double extraction_moment(const AffordanceTemplate& t, const Vec3& g, const Vec3& force);
double extraction_moment(const Vec3& grasp_center, const Vec3& g, const Vec3& force);

/// Random rigid perturbation for one trial, rotating about `pivot`.
Pose sample_perturbation(const PerturbationSpec& spec, std::uint64_t trial_seed, const Vec3& pivot);

struct SurvivalResult {
  double rate = 0.0;
  double mean_moment = 0.0;
};

/// Fraction of perturbed trials that stay caged. Throws InvalidTemplate when
/// the template is not caged at the nominal object pose.
SurvivalResult perturb_and_recheck(const AffordanceTemplate& t, const TemplateSet& set, const TriMesh& object,
                                   const HandModel& model, const PerturbationSpec& spec, const Vec3& force,
                                   std::uint64_t stream = 0);
double perturb_and_recheck(const AffordanceTemplate& t, const TemplateSet& set, const TriMesh& object,
                           const HandModel& model, const PerturbationSpec& spec);

struct TrialRow {
  std::string id;
  double d_h = 0.0;
  std::string level;  // High / Medium / Low by normalized score tercile
  double survival = 0.0;
  double mean_moment = 0.0;
  double nominal_moment = 0.0;
};

struct TrialReport {
  std::vector<TrialRow> rows;  // sorted by d_h, ties by id
  double spearman = 0.0;       // NaN when either column is constant
  PerturbationSpec spec;
  Vec3 force = Vec3::Zero();
};

/// Average-rank Spearman correlation; NaN for constant or short inputs.
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

/// Default extraction force: `magnitude` newtons along the object's longest
/// bounding-box axis (in the set's frame).
Vec3 default_extraction_force(const TriMesh& object, const Pose& object_pose, double magnitude);

TrialReport run_trials(const TemplateSet& set, const TriMesh& object, const HandModel& model,
                       const PerturbationSpec& spec, const Vec3& force);

std::string report_to_json(const TrialReport& report);
/// Aligned plain-text table: quality level, success rate, d_h and moments.
std::string report_to_table(const TrialReport& report);

}  // namespace atk
