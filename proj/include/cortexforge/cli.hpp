#pragma once

// Command-line driver: synth, mesh2sdf, fit and eval subcommands.
//
// Exit codes: 0 success, 2 usage or input error, 3 algorithmic failure.
// Settings may come from a TOML-style file (--config); flags override it.
// Top-level keys are the global options, [synth]/[fit]/[eval]/[mesh2sdf]
// sections hold the subcommand options, and unknown keys are rejected.

#include <cortexforge/fit.hpp>
#include <cortexforge/metrics.hpp>
#include <cortexforge/nifti.hpp>
#include <cortexforge/ply.hpp>
#include <cortexforge/sdf.hpp>
#include <cortexforge/synth.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

namespace cortexforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitAlgorithm = 3;

/// Failure classes that mean "the method could not produce a result" rather
/// than "the inputs or flags are wrong".
inline int exit_code_for(const Error& e) {
  const std::string c = e.category();
  if (c == "topology" || c == "degenerate-vertex" || c == "empty-surface") return kExitAlgorithm;
  return kExitInput;
}

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool verbose = false;
};

struct SynthOptions {
  std::string labels, sdf_dir, out;
  int n = 1;
  SynthConfig config;
  std::optional<std::string> orientation;
};

struct Mesh2SdfOptions {
  std::string mesh, templ, out;
  double clip = kDefaultClipMm;
};

struct FitOptions {
  std::string mask, sdf_dir, out;
  std::string sdf_prefix = "sdf_";
  std::string hemi = "both";
  int left_label = 2, right_label = 41;
  FitConfig config;
  InitOptions init;
};

struct EvalOptions {
  std::string a, b, out, thickness_out;
  int samples_per_face = 4;
  std::string direction = "symmetric";
  std::optional<std::string> thickness;
};

namespace detail {

/// key=value log lines on the error stream.
class Log {
 public:
  Log(std::ostream& err, bool verbose) : err_(err), verbose_(verbose) {}
  bool verbose() const { return verbose_; }
  void line(const std::string& text) const { err_ << text << "\n"; }
  void debug(const std::string& text) const {
    if (verbose_) err_ << text << "\n";
  }

 private:
  std::ostream& err_;
  bool verbose_;
};

inline void require_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::is_regular_file(path)) throw IoError(what + " not found: " + path);
}

inline bool is_mesh_path(const std::string& p) { return p.size() >= 4 && p.compare(p.size() - 4, 4, ".ply") == 0; }

inline std::string sdf_path(const std::string& dir, const std::string& prefix, int channel) {
  return (std::filesystem::path(dir) / (prefix + kSdfChannels[channel] + ".nii.gz")).string();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

inline VoxelGrid as_labels(VoxelGrid g) {
  if (g.kind == GridKind::intensity || g.kind == GridKind::sdf) g.kind = GridKind::label;
  g.validate();
  return g;
}

inline int cmd_synth(const GlobalOptions& global, SynthOptions opt, const Log& log) {
  if (opt.n < 0) throw ConfigurationError("--n must be >= 0");
  if (opt.orientation) opt.config.orientation = parse_orientation(*opt.orientation);
  opt.config.validate();
  require_file(opt.labels, "label volume");
  for (int c = 0; c < 4; ++c) require_file(sdf_path(opt.sdf_dir, "sdf_", c), "SDF volume");
  if (opt.n == 0) {
    log.line("warning: --n 0, nothing to generate");
    return kExitOk;
  }
  const VoxelGrid labels = as_labels(load_nifti(opt.labels));
  std::array<SdfGrid, 4> sdfs;
  for (int c = 0; c < 4; ++c) sdfs[c] = load_sdf(sdf_path(opt.sdf_dir, "sdf_", c), opt.config.clip_mm);
  const std::uint64_t base = global.seed.value_or(0);
  for (int i = 0; i < opt.n; ++i) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(i);
    const TrainingPair pair = generate_pair(labels, sdfs, opt.config, seed);
    const auto dir = write_shard(pair, opt.out);
    const auto& a = pair.provenance.acquisition;
    log.debug("synth seed=" + std::to_string(seed) + " orientation=" + to_string(a.orientation) +
              " spacing_mm=" + fmt(a.spacing_mm) + " thickness_mm=" + fmt(a.thickness_mm) + " dir=" + dir.string());
  }
  log.line("synth wrote " + std::to_string(opt.n) + " shards to " + opt.out);
  return kExitOk;
}

inline int cmd_mesh2sdf(const Mesh2SdfOptions& opt, const Log& log) {
  require_file(opt.mesh, "mesh");
  require_file(opt.templ, "template volume");
  if (!(opt.clip > 0.0)) throw ConfigurationError("--clip must be positive");
  const TriangleMesh mesh = read_ply(opt.mesh);
  const VoxelGrid geometry = load_nifti(opt.templ);
  SdfGrid sdf;
  try {
    sdf = mesh_to_sdf(mesh, geometry, opt.clip);
  } catch (const PreconditionError& e) {
    // The mesh itself cannot carry a sign: the algorithm has nothing to do.
    log.line(std::string("error: ") + e.what());
    return kExitAlgorithm;
  }
  save_sdf(sdf, opt.out);
  log.line("mesh2sdf wrote " + opt.out);
  return kExitOk;
}

inline int cmd_fit(const FitOptions& opt, const Log& log) {
  if (opt.hemi != "left" && opt.hemi != "right" && opt.hemi != "both")
    throw ConfigurationError("--hemi must be left, right or both");
  opt.config.validate();
  require_file(opt.mask, "mask volume");
  struct Hemi {
    std::string name;
    int label;
    int wm_channel;
  };
  std::vector<Hemi> hemis;
  if (opt.hemi != "right") hemis.push_back({"left", opt.left_label, 0});
  if (opt.hemi != "left") hemis.push_back({"right", opt.right_label, 2});
  for (const auto& h : hemis) {
    require_file(sdf_path(opt.sdf_dir, opt.sdf_prefix, h.wm_channel), "SDF volume");
    require_file(sdf_path(opt.sdf_dir, opt.sdf_prefix, h.wm_channel + 1), "SDF volume");
  }
  const VoxelGrid volume = load_nifti(opt.mask);
  // A binary mask holds one hemisphere; a label volume is split by WM label.
  const bool binary = std::all_of(volume.data.begin(), volume.data.end(), [](float v) { return v == 0.0f || v == 1.0f; });
  if (binary && hemis.size() != 1) throw ConfigurationError("a binary mask needs --hemi left or --hemi right");
  std::error_code ec;
  std::filesystem::create_directories(opt.out, ec);
  if (ec) throw IoError("cannot create " + opt.out + ": " + ec.message());

  for (const auto& h : hemis) {
    VoxelGrid mask(volume.shape, volume.affine, GridKind::mask);
    for (std::size_t v = 0; v < mask.data.size(); ++v)
      mask.data[v] = (binary ? volume.data[v] != 0.0f : volume.data[v] == static_cast<float>(h.label)) ? 1.0f : 0.0f;
    const SdfGrid wm_sdf = load_sdf(sdf_path(opt.sdf_dir, opt.sdf_prefix, h.wm_channel));
    const SdfGrid pial_sdf = load_sdf(sdf_path(opt.sdf_dir, opt.sdf_prefix, h.wm_channel + 1));

    TriangleMesh initial;
    try {
      initial = init_surface(mask, opt.init);
    } catch (const PreconditionError& e) {
      throw PreconditionError(h.name + " hemisphere: " + e.what());
    }
    log.debug("init hemi=" + h.name + " vertices=" + std::to_string(initial.vertices.size()) +
              " faces=" + std::to_string(initial.faces.size()));
    auto observer = [&](const std::string& surface) -> FitObserver {
      if (!log.verbose()) return {};
      return [&log, &h, surface](const FitIteration& it, const TriangleMesh&) {
        log.debug("fit hemi=" + h.name + " surface=" + surface + " iter=" + std::to_string(it.iteration) +
                  " energy=" + fmt(it.energy) + " step_mm=" + fmt(it.step_mm) +
                  " accepted=" + (it.accepted ? "1" : "0") + " frozen=" + std::to_string(it.frozen));
      };
    };
    const auto [white, white_report] = fit_surface(initial, wm_sdf, opt.config, observer("white"));
    const auto [pial, pial_report] = fit_pial(white, pial_sdf, opt.config, observer("pial"));
    const std::filesystem::path out(opt.out);
    write_ply(white, (out / (h.name + "_white.ply")).string());
    write_ply(pial, (out / (h.name + "_pial.ply")).string());
    write_text_file(out / (h.name + "_white_report.json"), to_json(white_report).dump(2) + "\n");
    write_text_file(out / (h.name + "_pial_report.json"), to_json(pial_report).dump(2) + "\n");
    log.line("fit hemi=" + h.name + " white_iters=" + std::to_string(white_report.iterations_run) +
             " white_mean_abs_sdf_mm=" + fmt(white_report.final_mean_abs_sdf_mm) +
             " pial_iters=" + std::to_string(pial_report.iterations_run) +
             " pial_mean_abs_sdf_mm=" + fmt(pial_report.final_mean_abs_sdf_mm));
  }
  return kExitOk;
}

inline nlohmann::ordered_json summary(const std::vector<double>& x) {
  nlohmann::ordered_json j;
  double sum = 0.0, sum2 = 0.0;
  for (double v : x) {
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(x.size());
  j["mean_mm"] = sum / n;
  j["std_mm"] = std::sqrt(std::max(0.0, sum2 / n - (sum / n) * (sum / n)));
  j["min_mm"] = *std::min_element(x.begin(), x.end());
  j["max_mm"] = *std::max_element(x.begin(), x.end());
  return j;
}

inline int cmd_eval(const GlobalOptions& global, const EvalOptions& opt, std::ostream& out, const Log& log) {
  require_file(opt.a, "input");
  require_file(opt.b, "input");
  const bool mesh_a = is_mesh_path(opt.a), mesh_b = is_mesh_path(opt.b);
  if (mesh_a != mesh_b) throw ContractError("eval needs two meshes or two masks");
  nlohmann::ordered_json result;
  std::string thickness_text;
  if (mesh_a) {
    const TriangleMesh a = read_ply(opt.a), b = read_ply(opt.b);
    DistanceDirection direction;
    if (opt.direction == "a_to_b") direction = DistanceDirection::a_to_b;
    else if (opt.direction == "b_to_a") direction = DistanceDirection::b_to_a;
    else if (opt.direction == "symmetric") direction = DistanceDirection::symmetric;
    else throw ConfigurationError("--direction must be a_to_b, b_to_a or symmetric");
    result["surface_distance"] =
        to_json(surface_distance(a, b, opt.samples_per_face, direction, global.seed.value_or(0)));
    if (opt.thickness) {
      const auto t = thickness(a, b, parse_thickness_mode(*opt.thickness));
      auto j = summary(t);
      j["mode"] = *opt.thickness;
      result["thickness"] = j;
      std::ostringstream text;
      text.precision(10);
      for (double v : t) text << v << "\n";
      thickness_text = text.str();
    }
  } else {
    if (opt.thickness) throw ContractError("thickness needs two meshes");
    result["dice"] = mask_dice(load_nifti(opt.a), load_nifti(opt.b));
  }
  // Everything is computed before the first byte is written.
  if (!opt.thickness_out.empty()) {
    if (thickness_text.empty()) throw ConfigurationError("--thickness_out needs --thickness");
    write_text_file(opt.thickness_out, thickness_text);
  }
  if (opt.out.empty()) out << result.dump(2) << "\n";
  else write_text_file(opt.out, result.dump(2) + "\n");
  log.debug("eval a=" + opt.a + " b=" + opt.b);
  return kExitOk;
}

}  // namespace detail

/// Parses and runs one subcommand. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app("Cortical surface reconstruction from signed distance volumes", "cortexforge");
  app.set_config("--config", "", "TOML-style settings file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  GlobalOptions global;
  std::string seed_text;
  app.add_option("--seed", seed_text, "Random seed (falls back to $CORTEXFORGE_SEED, then 0)")
      ->envname("CORTEXFORGE_SEED");
  app.add_option("--jobs", global.jobs, "Worker threads (default: all cores); results do not depend on it")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", global.verbose, "Per-iteration and per-shard log lines");

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic image/SDF training shards")->fallthrough();
  s->add_option("--labels", synth.labels, "Label volume (1mm isotropic NIfTI)")->required();
  s->add_option("--sdf-dir,--sdf_dir", synth.sdf_dir, "Directory with sdf_{lw,lp,rw,rp}.nii.gz")->required();
  s->add_option("--out", synth.out, "Shard output directory")->required();
  s->add_option("--n", synth.n, "Number of shards (seeds seed .. seed+n-1)");
  SynthConfig& sc = synth.config;
  s->add_option("--gmm_mean_min", sc.gmm_mean_min);
  s->add_option("--gmm_mean_max", sc.gmm_mean_max);
  s->add_option("--gmm_std_min", sc.gmm_std_min);
  s->add_option("--gmm_std_max", sc.gmm_std_max);
  s->add_option("--bias_control_grid", sc.bias_control_grid);
  s->add_option("--bias_log_amplitude", sc.bias_log_amplitude);
  s->add_option("--rotation_max_deg", sc.rotation_max_deg);
  s->add_option("--scale_min", sc.scale_min);
  s->add_option("--scale_max", sc.scale_max);
  s->add_option("--translation_max_mm", sc.translation_max_mm);
  s->add_option("--warp_lattice", sc.warp_lattice);
  s->add_option("--warp_amplitude_mm", sc.warp_amplitude_mm);
  s->add_option("--noise_std_max", sc.noise_std_max);
  s->add_option("--clip_mm", sc.clip_mm);
  s->add_option("--orientation", synth.orientation, "Fix the orientation: axial, coronal, sagittal or isotropic");
  s->add_option("--spacing_mm", sc.spacing_mm, "Fix the slice spacing");
  s->add_option("--thickness_mm", sc.thickness_mm, "Fix the slice thickness");

  Mesh2SdfOptions m2s;
  auto* m = app.add_subcommand("mesh2sdf", "Signed distance volume of a closed PLY mesh")->fallthrough();
  m->add_option("--mesh", m2s.mesh, "Closed PLY mesh")->required();
  m->add_option("--template", m2s.templ, "NIfTI volume whose geometry is sampled")->required();
  m->add_option("--out", m2s.out, "Output NIfTI")->required();
  m->add_option("--clip", m2s.clip, "Clip distance in mm");

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "Place white and pial surfaces")->fallthrough();
  f->add_option("--mask", fit.mask, "WM mask, or label volume split by --left_label/--right_label")->required();
  f->add_option("--sdf-dir,--sdf_dir", fit.sdf_dir, "Directory with <prefix>{lw,lp,rw,rp}.nii.gz")->required();
  f->add_option("--out", fit.out, "Output directory")->required();
  f->add_option("--sdf_prefix", fit.sdf_prefix, "SDF file prefix (sdf_ or pred_sdf_)");
  f->add_option("--hemi", fit.hemi, "left, right or both");
  f->add_option("--left_label", fit.left_label);
  f->add_option("--right_label", fit.right_label);
  f->add_option("--lambda1", fit.config.lambda1);
  f->add_option("--lambda2", fit.config.lambda2);
  f->add_option("--step_mm", fit.config.step_mm);
  f->add_option("--max_iters", fit.config.max_iters);
  f->add_option("--converge_rel_tol", fit.config.converge_rel_tol);
  f->add_option("--max_step_halvings_per_iter", fit.config.max_step_halvings_per_iter);
  f->add_option("--taubin_iterations", fit.init.taubin_iterations);
  f->add_option("--taubin_lambda", fit.init.taubin_lambda);
  f->add_option("--taubin_mu", fit.init.taubin_mu);

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Compare two meshes (.ply) or two masks (NIfTI)")->fallthrough();
  e->add_option("--a", ev.a, "First input (WM surface for thickness)")->required();
  e->add_option("--b", ev.b, "Second input (pial surface for thickness)")->required();
  e->add_option("--out", ev.out, "JSON output file (default: stdout)");
  e->add_option("--samples_per_face", ev.samples_per_face)->check(CLI::PositiveNumber);
  e->add_option("--direction", ev.direction, "a_to_b, b_to_a or symmetric");
  e->add_option("--thickness", ev.thickness, "correspondence or closest_point_symmetric");
  e->add_option("--thickness_out", ev.thickness_out, "Per-vertex thickness, one value per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::ParseError& p) {
    err << "error: " << p.what() << "\n";
    return kExitInput;
  }

  const detail::Log log(err, global.verbose);
  try {
    if (!seed_text.empty()) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(seed_text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != seed_text.size() || seed_text[0] == '-') throw ConfigurationError("seed must be an unsigned integer");
      global.seed = v;
    }
    const int hardware = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    set_worker_count(global.jobs > 0 ? global.jobs : hardware);
    if (s->parsed()) return detail::cmd_synth(global, synth, log);
    if (m->parsed()) return detail::cmd_mesh2sdf(m2s, log);
    if (f->parsed()) return detail::cmd_fit(fit, log);
    return detail::cmd_eval(global, ev, out, log);
  } catch (const Error& x) {
    err << "error: " << x.what() << "\n";
    return exit_code_for(x);
  } catch (const std::exception& x) {
    err << "error: " << x.what() << "\n";
    return kExitInput;
  }
}

}  // namespace cortexforge::cli
