#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "atk/affordance.hpp"

namespace atk {

inline constexpr const char* kTemplateFormat = "atk-template-set";
inline constexpr int kTemplateVersion = 1;

/// Quality colors: score = (d_h − min) / (max − min) and RGB = (1 − s, 0, s),
/// so the best-centered grasp is red and the worst blue. A single template
/// or an all-equal set scores 0. Throws InvalidInput on an empty set.
TemplateSet normalize_and_color(TemplateSet set);

/// Templates sorted by score (falling back to d_h when unscored), ties by id.
std::vector<AffordanceTemplate> ranked(const TemplateSet& set);

/// Serializes to the template document. Output depends only on the set.
std::string serialize_templates(const TemplateSet& set);
TemplateSet deserialize_templates(const std::string& text, const std::string& source = "<templates>");

/// Atomic write (temporary file, then rename).
void save_templates(const TemplateSet& set, const std::filesystem::path& path);

struct LoadOptions {
  /// Re-hash the referenced object mesh and fail with HashMismatch when it differs.
  bool strict = false;
};
/// Throws VersionError, HashMismatch or FormatError for the respective
/// failure; IoError when the file cannot be read.
TemplateSet load_templates(const std::filesystem::path& path, const LoadOptions& options = {});

/// Resolves the object mesh path of a set loaded from `template_file`.
std::filesystem::path resolve_object_path(const TemplateSet& set, const std::filesystem::path& template_file);

/// Carries every pose, contact, hull vertex and the center of mass through
/// base_vis ∘ base_sim⁻¹. d_h is unchanged.
TemplateSet map_templates(const TemplateSet& set, const Pose& base_sim, const Pose& base_vis);

struct ExportedFile {
  std::string id;
  std::filesystem::path file;
  std::size_t vertex_count = 0;
};

inline const Color kObjectGray{0.5, 0.5, 0.5};

/// Posed hand links tinted with the template color, in the set's frame.
TriMesh template_hand_mesh(const AffordanceTemplate& t, const HandModel& model);

/// One binary PLY per template (object in gray plus the tinted hand) and
/// an index.json listing file names, d_h and scores. Uncolored sets are
/// normalized first.
std::vector<ExportedFile> export_scene(const TemplateSet& set, const HandModel& model, const TriMesh& object,
                                       const std::filesystem::path& out_dir);

}  // namespace atk
