// mvc3d command-line driver: scene generation, ground truth, training,
// evaluation and debug dumps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mvc3d/checkpoint.hpp"
#include "mvc3d/error.hpp"
#include "mvc3d/harness.hpp"
#include "mvc3d/losses.hpp"
#include "mvc3d/projection.hpp"
#include "mvc3d/t3dc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvc3d;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "TrainConfig JSON file");
  cmd->add_option("--preset", c.preset, "pets | duke | city | desk")
      ->check(CLI::IsMember({"pets", "duke", "city", "desk"}));
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output directory");
}

TrainConfig resolve_config(const Common& c, const json* fallback = nullptr) {
  json j = json::object();
  if (!c.config.empty()) {
    std::ifstream is(c.config);
    if (!is) throw ConfigError("cannot open config " + c.config);
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw ConfigError("config " + c.config + ": " + e.what());
    }
  } else if (fallback != nullptr) {
    j = *fallback;
  }
  if (!c.preset.empty()) {
    if (j.contains("preset") && j["preset"] != c.preset) {
      throw ConfigError("--preset disagrees with the config's preset");
    }
    j["preset"] = c.preset;
  }
  return config_from_json(j);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << j.dump(1) << '\n';
}

std::string stem(const char* prefix, int id) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%05d", prefix, id);
  return buf;
}

int cmd_gen_scene(const Common& c, bool pgm) {
  TrainConfig cfg = resolve_config(c);
  if (c.seed) cfg.scene.seed = *c.seed;
  const Scene scene = gen_scene(cfg.scene);
  fs::create_directories(c.out);
  save_scene(fs::path(c.out) / "scene.json", scene);
  if (pgm) {
    for (const Frame& f : scene.frames) {
      const auto views = render_views(scene, f.frame_id, cfg.image_size, cfg.scene.body_radius);
      for (std::size_t v = 0; v < views.size(); ++v) {
        write_pgm(fs::path(c.out) / (stem("frame", f.frame_id) + "_view" + std::to_string(v) + ".pgm"), views[v]);
      }
    }
  }
  std::cout << json{{"scene", (fs::path(c.out) / "scene.json").string()}, {"frames", scene.frames.size()}}.dump()
            << '\n';
  return 0;
}

int cmd_make_gt(const Common& c, const std::string& scene_path) {
  const TrainConfig cfg = resolve_config(c);
  const Scene scene = load_scene(scene_path);
  make_gt(scene, cfg, c.out);
  std::cout << json{{"report", (fs::path(c.out) / "report.json").string()}}.dump() << '\n';
  return 0;
}

// Frames of a scene with ground truth read from a make-gt directory.
std::vector<FrameData> load_frames(const Scene& scene, const TrainConfig& cfg, const fs::path& gt_dir,
                                   std::size_t first, std::size_t count) {
  std::ifstream is(gt_dir / "report.json");
  if (!is) throw FormatError("missing " + (gt_dir / "report.json").string());
  json report;
  try {
    report = json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(std::string("report.json: ") + e.what());
  }
  std::vector<FrameData> out;
  for (std::size_t i = first; i < first + count; ++i) {
    if (i >= scene.frames.size()) throw ConfigError("scene has too few frames");
    const int id = scene.frames[i].frame_id;
    const json* entry = nullptr;
    for (const auto& fr : report.at("frames")) {
      if (fr.at("frame_id").get<int>() == id) entry = &fr;
    }
    if (entry == nullptr) throw FormatError("report.json has no frame " + std::to_string(id));
    FrameData fd;
    fd.frame_id = id;
    fd.images = render_views(scene, id, cfg.image_size, cfg.scene.body_radius);
    const std::string s = stem("frame", id);
    fd.volume = t3dc::load(gt_dir / (s + "_volume.t3dc"));
    fd.true_count = entry->at("volume").at("splatted").get<double>();
    for (std::size_t v = 0; v < scene.cameras.size(); ++v) {
      fd.maps.push_back(t3dc::load(gt_dir / (s + "_map" + std::to_string(v) + ".t3dc")));
      fd.masks.push_back(t3dc::load(gt_dir / (s + "_mask" + std::to_string(v) + ".t3dc")));
      fd.view_counts.push_back(entry->at("maps").at(v).at("splatted").get<double>());
    }
    out.push_back(std::move(fd));
  }
  return out;
}

std::vector<FrameData> frames_for(const Scene& scene, const TrainConfig& cfg, const std::string& gt_dir,
                                  std::size_t first, std::size_t count) {
  return gt_dir.empty() ? build_frames(scene, cfg, first, count) : load_frames(scene, cfg, gt_dir, first, count);
}

int cmd_train(const Common& c, const std::string& scene_path, const std::string& gt_dir, int stage,
              const std::string& init_path) {
  std::optional<Checkpoint> init;
  if (!init_path.empty()) init = load_checkpoint(init_path);
  TrainConfig cfg = resolve_config(c, init && init->meta.contains("config") ? &init->meta["config"] : nullptr);
  if (c.seed) cfg.seed = *c.seed;
  const Scene scene = load_scene(scene_path);
  const auto frames = frames_for(scene, cfg, gt_dir, 0, cfg.train_frames);
  fs::create_directories(c.out);
  const fs::path out(c.out);
  std::ofstream log(out / "train_log.ndjson", std::ios::app);
  if (!log) throw FormatError("cannot open training log");

  TrainOptions opts;
  opts.log = &log;
  opts.diagnostic_path = out / "diagnostic.ckpt";
  if (stage > 0) {
    if (stage > 1 && !init) throw ConfigError("--stage " + std::to_string(stage) + " needs --init <checkpoint>");
    opts.first_stage = opts.last_stage = stage;
  } else {
    opts.last_stage = static_cast<int>(cfg.stages.size());
  }
  if (init) opts.init = init->params;
  const TrainResult r = train(cfg, scene.cameras, frames, opts);
  const fs::path ckpt = out / (stage > 0 ? "checkpoint_stage" + std::to_string(stage) + ".ckpt" : "checkpoint.ckpt");
  save_checkpoint(ckpt, r.params, checkpoint_meta(cfg, opts.last_stage, r.steps));
  std::cout << json{{"checkpoint", ckpt.string()}, {"steps", r.steps}, {"last", step_json(r.last)}}.dump() << '\n';
  return 0;
}

int cmd_eval(const Common& c, const std::string& scene_path, const std::string& ckpt_path,
             const std::string& gt_dir, bool ground_truth) {
  std::optional<Checkpoint> ckpt;
  if (!ground_truth) {
    if (ckpt_path.empty()) throw ConfigError("eval needs --checkpoint or --ground-truth");
    ckpt = load_checkpoint(ckpt_path);
  }
  const TrainConfig cfg =
      resolve_config(c, ckpt && ckpt->meta.contains("config") ? &ckpt->meta["config"] : nullptr);
  const Scene scene = load_scene(scene_path);
  const auto frames = frames_for(scene, cfg, gt_dir, cfg.train_frames, cfg.test_frames);
  Metrics m = ground_truth ? evaluate_ground_truth(cfg, scene.cameras, frames)
                           : evaluate(cfg, Model(cfg.model_config(), scene.cameras, ckpt->params), frames);
  json j = metrics_json(m);
  fs::create_directories(c.out);
  write_json(fs::path(c.out) / "metrics.json", j);
  std::cout << json{{"mae", m.mae}, {"view_mae", m.view_mae}, {"mean_pcm", m.mean_pcm}}.dump() << '\n';
  return 0;
}

int cmd_project(const Common& c, const std::string& scene_path, int frame_id, std::size_t view) {
  const TrainConfig cfg = resolve_config(c);
  const Scene scene = load_scene(scene_path);
  if (view >= scene.cameras.size()) throw ConfigError("no view " + std::to_string(view));
  const auto images = render_views(scene, frame_id, cfg.image_size, cfg.scene.body_radius);
  const Projector proj(scene.cameras[view], cfg.vox);
  fs::create_directories(c.out);
  const fs::path out(c.out);
  t3dc::save(out / "image.t3dc", images[view]);
  write_pgm(out / "image.pgm", images[view]);
  t3dc::save(out / "grid.t3dc", proj.grid());
  t3dc::save(out / "projected.t3dc", proj(images[view]));
  std::cout << json{{"out", out.string()}}.dump() << '\n';
  return 0;
}

int cmd_pcm(const Common& c, const std::string& scene_path, int frame_id, const std::string& ckpt_path,
            bool ground_truth) {
  std::optional<Checkpoint> ckpt;
  if (!ground_truth) {
    if (ckpt_path.empty()) throw ConfigError("pcm needs --checkpoint or --ground-truth");
    ckpt = load_checkpoint(ckpt_path);
  }
  const TrainConfig cfg =
      resolve_config(c, ckpt && ckpt->meta.contains("config") ? &ckpt->meta["config"] : nullptr);
  const Scene scene = load_scene(scene_path);
  const FrameData fd = build_frame(scene, frame_id, cfg);
  Tensor volume = fd.volume;
  if (ckpt) volume = Model(cfg.model_config(), scene.cameras, ckpt->params).forward(fd.images).volume;
  fs::create_directories(c.out);
  const fs::path out(c.out);
  json values = json::array();
  for (std::size_t v = 0; v < scene.cameras.size(); ++v) {
    const Tensor mask = BackProjector(scene.cameras[v], cfg.vox).hard_mask(volume, cfg.volume_threshold);
    const std::string s = "view" + std::to_string(v);
    t3dc::save(out / (s + "_proj_mask.t3dc"), mask);
    t3dc::save(out / (s + "_gt_mask.t3dc"), fd.masks[v]);
    write_pgm(out / (s + "_proj_mask.pgm"), mask);
    write_pgm(out / (s + "_gt_mask.pgm"), fd.masks[v]);
    values.push_back(pcm(fd.masks[v], mask, cfg.alpha));
  }
  t3dc::save(out / "volume.t3dc", volume);
  const json j{{"frame_id", frame_id}, {"pcm", values}};
  write_json(out / "pcm.json", j);
  std::cout << j.dump() << '\n';
  return 0;
}

int report_error(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view 3D crowd counting toolkit"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic multi-camera scene");
  add_common(gen, common);
  bool pgm = false;
  gen->add_flag("--pgm", pgm, "Also write every rendered view as PGM");

  std::string scene_path, gt_dir, ckpt_path, init_path;
  int stage = 0, frame_id = 0;
  std::size_t view = 0;
  bool use_gt = false;

  auto* mkgt = app.add_subcommand("make-gt", "Build 3D/2D ground truth for a scene");
  add_common(mkgt, common);
  mkgt->add_option("--scene", scene_path, "Scene JSON")->required();

  auto* tr = app.add_subcommand("train", "Train on the scene's training frames");
  add_common(tr, common);
  tr->add_option("--scene", scene_path, "Scene JSON")->required();
  tr->add_option("--gt", gt_dir, "Ground truth directory from make-gt");
  tr->add_option("--stage", stage, "Run only this stage")->check(CLI::Range(1, 16));
  tr->add_option("--init", init_path, "Checkpoint to start from");

  auto* ev = app.add_subcommand("eval", "Evaluate on the scene's test frames");
  add_common(ev, common);
  ev->add_option("--scene", scene_path, "Scene JSON")->required();
  ev->add_option("--checkpoint", ckpt_path, "Model checkpoint");
  ev->add_option("--gt", gt_dir, "Ground truth directory from make-gt");
  ev->add_flag("--ground-truth", use_gt, "Score the ground truth itself");

  auto* pr = app.add_subcommand("project", "Dump one view's multi-height projection");
  add_common(pr, common);
  pr->add_option("--scene", scene_path, "Scene JSON")->required();
  pr->add_option("--frame", frame_id, "Frame id");
  pr->add_option("--view", view, "View index");

  auto* pc = app.add_subcommand("pcm", "Dump back-projected masks and PCM of one frame");
  add_common(pc, common);
  pc->add_option("--scene", scene_path, "Scene JSON")->required();
  pc->add_option("--frame", frame_id, "Frame id");
  pc->add_option("--checkpoint", ckpt_path, "Model checkpoint");
  pc->add_flag("--ground-truth", use_gt, "Back-project the ground-truth volume");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kExitInput);
  }

  try {
    if (*gen) return cmd_gen_scene(common, pgm);
    if (*mkgt) return cmd_make_gt(common, scene_path);
    if (*tr) return cmd_train(common, scene_path, gt_dir, stage, init_path);
    if (*ev) return cmd_eval(common, scene_path, ckpt_path, gt_dir, use_gt);
    if (*pr) return cmd_project(common, scene_path, frame_id, view);
    if (*pc) return cmd_pcm(common, scene_path, frame_id, ckpt_path, use_gt);
  } catch (const NumericError& e) {
    return report_error("numeric", e.what(), kExitNumeric);
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), kExitInput);
  } catch (const FormatError& e) {
    return report_error("format", e.what(), kExitInput);
  } catch (const Error& e) {
    return report_error("input", e.what(), kExitInput);
  } catch (const fs::filesystem_error& e) {
    return report_error("filesystem", e.what(), kExitInput);
  } catch (const nlohmann::json::exception& e) {
    return report_error("format", e.what(), kExitInput);
  }
  return 0;
}
