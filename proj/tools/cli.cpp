#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "atk/error.hpp"
#include "atk/extraction.hpp"
#include "atk/json_io.hpp"
#include "atk/mesh_io.hpp"
#include "atk/retarget.hpp"
#include "atk/synthesis.hpp"
#include "atk/template_store.hpp"

namespace atk::cli {

namespace fs = std::filesystem;

namespace {

/// Run configuration: the optional config document plus flag overrides.
/// Config paths resolve against the config file's directory, flag paths
/// against the working directory.
struct RunConfig {
  Json doc = Json::object();
  fs::path base_dir = ".";

  // Global flags.
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  bool quiet = false;

  std::optional<fs::path> path(const std::string& key, const std::optional<std::string>& flag) const {
    if (flag) return fs::path(*flag);
    if (doc.contains(key) && doc.at(key).is_string()) {
      fs::path p = doc.at(key).get<std::string>();
      return p.is_relative() ? base_dir / p : p;
    }
    return std::nullopt;
  }
  fs::path required_path(const std::string& key, const std::optional<std::string>& flag, const std::string& flag_name,
                         bool must_exist = true) const {
    auto p = path(key, flag);
    if (!p) throw ConfigError("no " + key + " given (use " + flag_name + " or '" + key + "' in the config)");
    if (must_exist && !fs::exists(*p)) throw ConfigError(key + " not found: " + p->string());
    return *p;
  }
  const Json& section(const std::string& key) const {
    static const Json empty = Json::object();
    return doc.contains(key) && doc.at(key).is_object() ? doc.at(key) : empty;
  }
};

template <typename T>
T pick(const std::optional<T>& flag, const Json& section, const std::string& key, T fallback) {
  if (flag) return *flag;
  return optional_field<T>(section, key, fallback, "config");
}

void load_config(RunConfig& rc, const std::optional<std::string>& config_path) {
  if (!config_path) return;
  const fs::path p = *config_path;
  if (!fs::exists(p)) throw ConfigError("config file not found: " + p.string());
  try {
    rc.doc = load_json(p);
    check_header(rc.doc, "atk-run", 1, p.string());
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  rc.base_dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
}

std::ostream& log(const RunConfig& rc, std::ostream& err) {
  static std::ofstream sink;  // never opened: swallows output in quiet mode
  return rc.quiet ? static_cast<std::ostream&>(sink) : err;
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// ---------------------------------------------------------------- generate

struct GenerateFlags {
  std::optional<std::string> object, hand, out;
  std::optional<int> samples, spin;
  std::optional<double> step, delta, standoff;
};

int cmd_generate(const RunConfig& rc, const GenerateFlags& f, Streams io) {
  const fs::path object_path = rc.required_path("object", f.object, "--object");
  const fs::path hand_path = rc.required_path("hand", f.hand, "--hand");
  const fs::path out_path = rc.required_path("templates", f.out, "--out", false);
  const Json& region_cfg = rc.section("region");
  const Json& synth_cfg = rc.section("synthesis");

  SamplingRegion region;
  region.target = std::make_shared<TriMesh>(read_mesh(object_path));
  region.standoff = pick(f.standoff, region_cfg, "standoff", 0.001);
  region.spin = pick(f.spin, region_cfg, "spin", 1);
  if (region_cfg.contains("patch") && region_cfg.at("patch").is_array())
    region.patch = region_cfg.at("patch").get<std::vector<int>>();
  if (rc.doc.contains("environment")) {
    for (const auto& e : rc.doc.at("environment")) {
      auto mesh = std::make_shared<TriMesh>(mesh_from_json(node(e, "mesh", "environment"), rc.base_dir, "environment"));
      const Pose pose = e.contains("pose") ? pose_from_json(e.at("pose"), "environment pose") : Pose();
      region.environment.emplace_back(mesh, pose);
    }
  }

  SynthesisParams params;
  params.samples = pick(f.samples, synth_cfg, "samples", 200);
  params.seed = rc.seed ? *rc.seed : optional_field<std::uint64_t>(synth_cfg, "seed", 1, "config");
  params.step = pick(f.step, synth_cfg, "step", 0.005);
  params.contact_threshold = pick(f.delta, synth_cfg, "contact_threshold", 0.002);
  params.jobs = rc.jobs;
  if (synth_cfg.contains("start_pulses")) {
    const auto p = synth_cfg.at("start_pulses").get<std::vector<int>>();
    check_range(p.size() == kChannelCount, "start_pulses needs 7 entries");
    ControlVector u;
    std::copy(p.begin(), p.end(), u.begin());
    params.start_pulses = u;
  }
  check_range(params.samples >= 0 && params.samples <= 1'000'000, "samples must be in [0, 1e6]");
  check_range(params.step > 0 && params.step <= 0.5, "step must be in (0, 0.5] rad");
  check_range(params.contact_threshold >= 0, "contact threshold must be >= 0");
  check_range(region.standoff >= 0 && region.standoff <= 0.1, "standoff must be in [0, 0.1] m");
  check_range(region.spin >= 1 && region.spin <= 360, "spin must be in [1, 360]");

  const HandModel model = load_hand(hand_path);
  if (params.start_pulses) actuate(model, *params.start_pulses);  // range check

  const auto templates = synthesize(model, region, params);

  TemplateSet set;
  const fs::path out_dir = fs::absolute(out_path).parent_path();
  set.object.path = fs::relative(fs::absolute(object_path), out_dir).generic_string();
  set.object.sha256 = sha256_file(object_path);
  set.object_pose = region.target_pose;
  set.center_of_mass = object_center_of_mass(region);
  set.generation = {params.samples, params.seed, params.step, params.contact_threshold, region.standoff, region.spin};
  set.templates = templates;
  if (!set.templates.empty()) set = normalize_and_color(std::move(set));
  if (!out_dir.empty()) fs::create_directories(out_dir);
  save_templates(set, out_path);

  if (set.templates.empty()) {
    log(rc, io.err) << "warning: no caged grasp found in " << params.samples << " samples\n";
    if (!rc.quiet) io.out << fmt::format("generated 0 templates -> {}\n", out_path.string());
  } else if (!rc.quiet) {
    io.out << fmt::format("generated {} templates (d_h {:.6f} .. {:.6f} m) -> {}\n", set.templates.size(),
                          set.templates.front().d_h, set.templates.back().d_h, out_path.string());
  }
  return kOk;
}

// ---------------------------------------------------------------- export

struct ExportFlags {
  std::optional<std::string> templates, hand, out_dir;
  bool strict = false;
};

int cmd_export(const RunConfig& rc, const ExportFlags& f, Streams io) {
  const fs::path templates_path = rc.required_path("templates", f.templates, "--templates");
  const fs::path hand_path = rc.required_path("hand", f.hand, "--hand");
  const fs::path out_dir = rc.required_path("export_dir", f.out_dir, "--out-dir", false);
  TemplateSet set = load_templates(templates_path, {f.strict});
  const fs::path object_path = resolve_object_path(set, templates_path);
  if (!fs::exists(object_path)) throw IoError("referenced object mesh missing: " + object_path.string());
  const TriMesh object = read_mesh(object_path);
  const HandModel model = load_hand(hand_path);
  const Json& frames = rc.section("frames");
  if (frames.contains("base_sim") || frames.contains("base_vis")) {
    const Pose sim = frames.contains("base_sim") ? pose_from_json(frames.at("base_sim"), "frames.base_sim") : Pose();
    const Pose vis = frames.contains("base_vis") ? pose_from_json(frames.at("base_vis"), "frames.base_vis") : Pose();
    set = map_templates(set, sim, vis);
  }
  const auto files = export_scene(set, model, object, out_dir);
  if (!rc.quiet) io.out << fmt::format("exported {} scenes -> {}\n", files.size(), out_dir.string());
  return kOk;
}

// ---------------------------------------------------------------- retarget

struct RetargetFlags {
  std::optional<std::string> calibration, hand, in, out;
};

int cmd_retarget(const RunConfig& rc, const RetargetFlags& f, Streams io) {
  const fs::path cal_path = rc.required_path("calibration", f.calibration, "--calibration");
  const fs::path hand_path = rc.required_path("hand", f.hand, "--hand");
  const HandModel model = load_hand(hand_path);
  const RetargetTables tables(load_calibration(cal_path), model);

  std::ifstream in_file;
  std::istream* in = &io.in;
  if (f.in && *f.in != "-") {
    in_file.open(*f.in);
    if (!in_file) throw IoError("cannot open " + *f.in);
    in = &in_file;
  }
  std::ofstream out_file;
  std::ostream* out = &io.out;
  if (f.out && *f.out != "-") {
    out_file.open(*f.out, std::ios::binary | std::ios::trunc);
    if (!out_file) throw IoError("cannot write " + *f.out);
    out = &out_file;
  }
  const auto summary = process_stream(tables, *in, *out);
  if (!*out) throw IoError("write failed for retarget output");
  for (const auto& w : summary.warnings) log(rc, io.err) << "warning: " << w << '\n';
  log(rc, io.err) << fmt::format("retarget: {} frames in, {} out, {} dropped\n", summary.frames_in,
                                 summary.frames_out, summary.dropped);
  return kOk;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateFlags {
  std::optional<std::string> in, out, hand;
};

int cmd_calibrate(const RunConfig& rc, const CalibrateFlags& f, Streams io) {
  const fs::path in_path = rc.required_path("calibration_samples", f.in, "--in");
  const fs::path out_path = rc.required_path("calibration", f.out, "--out", false);
  std::ifstream in(in_path);
  if (!in) throw IoError("cannot open " + in_path.string());
  std::vector<CalibrationSample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto s = samples_from_json_line(line, in_path.string() + ":" + std::to_string(lineno));
    samples.insert(samples.end(), s.begin(), s.end());
  }
  const auto tables = record_calibration(samples);
  if (auto hand = rc.path("hand", f.hand)) {
    if (!fs::exists(*hand)) throw ConfigError("hand not found: " + hand->string());
    RetargetTables(tables, load_hand(*hand));  // range check against the hand
  }
  save_calibration(tables, out_path);
  if (!rc.quiet) {
    std::size_t rows = 0;
    for (const auto& t : tables) rows += t.size();
    io.out << fmt::format("calibrated 7 channels ({} rows from {} samples) -> {}\n", rows, samples.size(),
                          out_path.string());
  }
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalFlags {
  std::optional<std::string> templates, hand, out, table;
  std::optional<double> sigma_t, sigma_r, force_magnitude, delta;
  std::optional<int> trials;
  std::vector<double> force;
  bool strict = false;
};

int cmd_eval(const RunConfig& rc, const EvalFlags& f, Streams io) {
  const fs::path templates_path = rc.required_path("templates", f.templates, "--templates");
  const fs::path hand_path = rc.required_path("hand", f.hand, "--hand");
  const Json& cfg = rc.section("evaluation");
  const TemplateSet set = load_templates(templates_path, {f.strict});
  if (set.templates.empty()) throw InvalidInput("template set " + templates_path.string() + " is empty");
  const fs::path object_path = resolve_object_path(set, templates_path);
  if (!fs::exists(object_path)) throw IoError("referenced object mesh missing: " + object_path.string());
  const TriMesh object = read_mesh(object_path);
  const HandModel model = load_hand(hand_path);

  PerturbationSpec spec;
  spec.translation_sigma = pick(f.sigma_t, cfg, "translation_sigma", 0.002);
  spec.rotation_sigma = pick(f.sigma_r, cfg, "rotation_sigma", 0.02);
  spec.trials = pick(f.trials, cfg, "trials", 10);
  spec.seed = rc.seed ? *rc.seed : optional_field<std::uint64_t>(cfg, "seed", 1, "config");
  spec.contact_threshold = pick(f.delta, cfg, "contact_threshold", set.generation.contact_threshold);
  spec.jobs = rc.jobs;
  check_range(spec.translation_sigma >= 0 && spec.rotation_sigma >= 0, "sigmas must be >= 0");
  check_range(spec.trials >= 1 && spec.trials <= 1'000'000, "trials must be in [1, 1e6]");

  Vec3 force;
  if (!f.force.empty()) {
    check_range(f.force.size() == 3, "--force takes three components");
    force = Vec3(f.force[0], f.force[1], f.force[2]);
  } else if (cfg.contains("force") && !cfg.at("force").is_null()) {
    force = vec3_from_json(cfg.at("force"), "evaluation.force");
  } else {
    force = default_extraction_force(object, set.object_pose, pick(f.force_magnitude, cfg, "force_magnitude", 10.0));
  }

  const TrialReport report = run_trials(set, object, model, spec, force);
  if (auto out = rc.path("report", f.out)) write_file_atomic(*out, report_to_json(report));
  const std::string table = report_to_table(report);
  if (auto t = rc.path("report_table", f.table)) {
    write_file_atomic(*t, table);
  } else if (!rc.quiet) {
    io.out << table;
  }
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return kConfig;
    case ErrorCategory::Io: return kIo;
    case ErrorCategory::Integrity: return kIntegrity;
  }
  return kConfig;
}

}  // namespace

int run(const std::vector<std::string>& args, Streams io) {
  CLI::App app{"Affordance template toolkit: enveloping grasp synthesis, export, retargeting and evaluation", "atk"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig rc;
  std::optional<std::string> config_path;
  // Global flags are accepted before or after the subcommand name.
  auto add_globals = [&](CLI::App* a) {
    a->add_option("--config", config_path, "Run configuration file (flags override its values)");
    a->add_option("--seed", rc.seed, "Master random seed for synthesis and evaluation");
    a->add_option("--jobs", rc.jobs, "Worker threads (0 = all cores); results do not depend on it");
    a->add_flag("--quiet", rc.quiet, "Suppress summaries and log output");
  };
  add_globals(&app);

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "Synthesize, score and color templates for an object");
  generate->add_option("--object", gen.object, "Object mesh (OBJ, STL or PLY; meters, Z-up)");
  generate->add_option("--hand", gen.hand, "Hand description file");
  generate->add_option("--out", gen.out, "Template set file to write");
  generate->add_option("--samples", gen.samples, "Number of palm placements to try");
  generate->add_option("--step", gen.step, "Finger closing increment in radians");
  generate->add_option("--delta", gen.delta, "Contact distance threshold in meters");
  generate->add_option("--standoff", gen.standoff, "Palm offset from the surface in meters");
  generate->add_option("--spin", gen.spin, "Discrete palm rolls per sampled point");

  ExportFlags exp;
  auto* export_cmd = app.add_subcommand("export", "Write one colored PLY scene per template plus index.json");
  export_cmd->add_option("--templates", exp.templates, "Template set file");
  export_cmd->add_option("--hand", exp.hand, "Hand description file");
  export_cmd->add_option("--out-dir", exp.out_dir, "Output directory");
  export_cmd->add_flag("--strict", exp.strict, "Fail if the object mesh changed since generation");

  RetargetFlags ret;
  auto* retarget = app.add_subcommand("retarget", "Map human hand frames (JSON lines) to control vectors");
  retarget->add_option("--calibration", ret.calibration, "Calibration table file");
  retarget->add_option("--hand", ret.hand, "Hand description file (pulse ranges)");
  retarget->add_option("--in", ret.in, "Frame records to read ('-' or absent: standard input)");
  retarget->add_option("--out", ret.out, "Control vectors to write ('-' or absent: standard output)");

  CalibrateFlags cal;
  auto* calibrate = app.add_subcommand("calibrate", "Build calibration tables from recorded samples");
  calibrate->add_option("--in", cal.in, "Calibration samples (JSON lines)");
  calibrate->add_option("--out", cal.out, "Calibration file to write");
  calibrate->add_option("--hand", cal.hand, "Hand description to validate pulse ranges against");

  EvalFlags ev;
  auto* eval = app.add_subcommand("eval", "Perturbation trials and extraction moments per template");
  eval->add_option("--templates", ev.templates, "Template set file");
  eval->add_option("--hand", ev.hand, "Hand description file");
  eval->add_option("--out", ev.out, "Report file (JSON)");
  eval->add_option("--table", ev.table, "Plain-text table file (default: standard output)");
  eval->add_option("--sigma-t", ev.sigma_t, "Translation noise sigma in meters");
  eval->add_option("--sigma-r", ev.sigma_r, "Rotation noise sigma in radians");
  eval->add_option("--trials", ev.trials, "Trials per template");
  eval->add_option("--delta", ev.delta, "Contact distance threshold in meters");
  eval->add_option("--force", ev.force, "Extraction force vector in newtons (3 values)")->expected(3);
  eval->add_option("--force-magnitude", ev.force_magnitude, "Force magnitude along the longest object axis");
  eval->add_flag("--strict", ev.strict, "Fail if the object mesh changed since generation");

  for (auto* sub : {generate, export_cmd, retarget, calibrate, eval}) add_globals(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    load_config(rc, config_path);
    if (*generate) return cmd_generate(rc, gen, io);
    if (*export_cmd) return cmd_export(rc, exp, io);
    if (*retarget) return cmd_retarget(rc, ret, io);
    if (*calibrate) return cmd_calibrate(rc, cal, io);
    if (*eval) return cmd_eval(rc, ev, io);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    io.err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kConfig;
}

}  // namespace atk::cli
