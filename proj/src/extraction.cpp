#include "atk/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "atk/error.hpp"
#include "atk/json_io.hpp"
#include "atk/parallel.hpp"
#include "atk/random.hpp"
#include "atk/synthesis.hpp"
#include "atk/template_store.hpp"

namespace atk {

double extraction_moment(const Vec3& grasp_center, const Vec3& g, const Vec3& force) {
  return (grasp_center - g).cross(force).norm();
}

double extraction_moment(const AffordanceTemplate& t, const Vec3& g, const Vec3& force) {
  if (t.hull_vertices.empty()) throw InvalidTemplate("template '" + t.id + "' has no hull vertices");
  Vec3 c = Vec3::Zero();
  for (const auto& v : t.hull_vertices) c += v;
  c /= static_cast<double>(t.hull_vertices.size());
  return extraction_moment(c, g, force);
}

Pose sample_perturbation(const PerturbationSpec& spec, std::uint64_t trial_seed, const Vec3& pivot) {
  Rng rng(trial_seed);
  const Vec3 t(rng.normal(), rng.normal(), rng.normal());
  // Uniform axis on the sphere.
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 axis(r * std::cos(phi), r * std::sin(phi), z);
  const double angle = spec.rotation_sigma * rng.normal();
  const Pose rot = Pose::from_axis_angle(axis, angle);
  // Rotate about the pivot, then translate.
  return Pose::from_translation(pivot + spec.translation_sigma * t) * rot * Pose::from_translation(-pivot);
}

namespace {

struct FrozenHand {
  LinkPoses poses;
  HandBodies bodies;
};

GraspEvaluation evaluate_against(const HandModel& model, const FrozenHand& hand,
                                 const std::shared_ptr<const TriMesh>& mesh, const Pose& object_pose, const Vec3& g,
                                 double threshold) {
  const CollisionBody body(mesh, object_pose);
  return evaluate_grasp(contact_set(model, hand.poses, hand.bodies, body, threshold), g);
}

void validate_spec(const PerturbationSpec& spec) {
  if (!(spec.translation_sigma >= 0) || !(spec.rotation_sigma >= 0)) throw InvalidInput("perturbation sigmas must be >= 0");
  if (spec.trials < 1) throw InvalidInput("perturbation needs at least one trial");
}

}  // namespace

SurvivalResult perturb_and_recheck(const AffordanceTemplate& t, const TemplateSet& set, const TriMesh& object,
                                   const HandModel& model, const PerturbationSpec& spec, const Vec3& force,
                                   std::uint64_t stream) {
  validate_spec(spec);
  const FrozenHand hand{forward_kinematics(model, t.config, t.base), HandBodies(model)};
  const auto mesh = std::make_shared<const TriMesh>(object);
  const Vec3 g = set.center_of_mass;
  if (!evaluate_against(model, hand, mesh, set.object_pose, g, spec.contact_threshold).caged) {
    throw InvalidTemplate("template '" + t.id + "' is not caged at the nominal object pose");
  }
  // Shared tree for all trials; only the pose changes.
  const CollisionBody nominal(mesh, set.object_pose);
  std::vector<char> caged(spec.trials, 0);
  std::vector<double> moments(spec.trials, 0.0);
  parallel_for(static_cast<std::size_t>(spec.trials), spec.jobs, [&](std::size_t k) {
    const Pose delta = sample_perturbation(spec, derive_seed(spec.seed, stream, k), g);
    const CollisionBody moved = nominal.posed(delta * set.object_pose);
    const Vec3 moved_g = delta.apply(g);
    const auto eval =
        evaluate_grasp(contact_set(model, hand.poses, hand.bodies, moved, spec.contact_threshold), moved_g);
    caged[k] = eval.caged ? 1 : 0;
    moments[k] = extraction_moment(hull_vertex_centroid(eval.hull), moved_g, force);
  });
  SurvivalResult r;
  r.rate = static_cast<double>(std::count(caged.begin(), caged.end(), 1)) / spec.trials;
  double sum = 0.0;
  for (double m : moments) sum += m;
  r.mean_moment = sum / spec.trials;
  return r;
}

double perturb_and_recheck(const AffordanceTemplate& t, const TemplateSet& set, const TriMesh& object,
                           const HandModel& model, const PerturbationSpec& spec) {
  return perturb_and_recheck(t, set, object, model, spec, Vec3::Zero(), 0).rate;
}

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw InvalidInput("spearman inputs differ in length");
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

Vec3 default_extraction_force(const TriMesh& object, const Pose& object_pose, double magnitude) {
  const auto [lo, hi] = object.bounds();
  const Vec3 extent = hi - lo;
  int axis = 0;
  if (extent.y() > extent[axis]) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  return object_pose.apply_rotation(magnitude * Vec3::Unit(axis));
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::string quality_level(double score) {
  if (score < 1.0 / 3.0) return "High";
  if (score < 2.0 / 3.0) return "Medium";
  return "Low";
}

}  // namespace

TrialReport run_trials(const TemplateSet& input, const TriMesh& object, const HandModel& model,
                       const PerturbationSpec& spec, const Vec3& force) {
  if (input.templates.empty()) throw InvalidInput("trial evaluation needs at least one template");
  validate_spec(spec);
  const TemplateSet set = normalize_and_color(input);
  auto templates = set.templates;
  std::stable_sort(templates.begin(), templates.end(), [](const AffordanceTemplate& a, const AffordanceTemplate& b) {
    return a.d_h != b.d_h ? a.d_h < b.d_h : a.id < b.id;
  });
  TrialReport report;
  report.spec = spec;
  report.force = force;
  for (const auto& t : templates) {
    const auto result = perturb_and_recheck(t, set, object, model, spec, force, fnv1a(t.id));
    report.rows.push_back({t.id, t.d_h, quality_level(*t.score_norm), result.rate, result.mean_moment,
                           extraction_moment(t, set.center_of_mass, force)});
  }
  std::vector<double> dh, surv;
  for (const auto& r : report.rows) {
    dh.push_back(r.d_h);
    surv.push_back(r.survival);
  }
  report.spearman = spearman_correlation(dh, surv);
  return report;
}

std::string report_to_json(const TrialReport& report) {
  OrderedJson doc;
  doc["format"] = "atk-trial-report";
  doc["version"] = 1;
  doc["spec"] = {{"translation_sigma", report.spec.translation_sigma},
                 {"rotation_sigma", report.spec.rotation_sigma},
                 {"trials", report.spec.trials},
                 {"seed", report.spec.seed},
                 {"contact_threshold", report.spec.contact_threshold}};
  doc["force"] = {report.force.x(), report.force.y(), report.force.z()};
  OrderedJson rows = OrderedJson::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"id", r.id},
                    {"level", r.level},
                    {"d_h", r.d_h},
                    {"survival", r.survival},
                    {"success_rate_percent", 100.0 * r.survival},
                    {"mean_moment", r.mean_moment},
                    {"nominal_moment", r.nominal_moment}});
  }
  doc["rows"] = rows;
  doc["spearman_dh_survival"] = std::isnan(report.spearman) ? OrderedJson(nullptr) : OrderedJson(report.spearman);
  return doc.dump(2) + "\n";
}

std::string report_to_table(const TrialReport& report) {
  std::string out = fmt::format("{:<10} {:<8} {:>12} {:>16} {:>16}\n", "Template", "Quality", "d_h [m]",
                                "Success rate [%]", "Moment [N m]");
  for (const auto& r : report.rows) {
    out += fmt::format("{:<10} {:<8} {:>12.6f} {:>16.1f} {:>16.6f}\n", r.id, r.level, r.d_h, 100.0 * r.survival,
                       r.mean_moment);
  }
  out += std::isnan(report.spearman) ? std::string("Spearman(d_h, survival): undefined\n")
                                     : fmt::format("Spearman(d_h, survival): {:.6f}\n", report.spearman);
  return out;
}

}  // namespace atk
