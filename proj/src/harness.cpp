#include "mvc3d/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "mvc3d/checkpoint.hpp"
#include "mvc3d/error.hpp"
#include "mvc3d/ground_truth.hpp"
#include "mvc3d/losses.hpp"
#include "mvc3d/ops.hpp"
#include "mvc3d/projection.hpp"
#include "mvc3d/t3dc.hpp"
#include "mvc3d/tape.hpp"

namespace mvc3d {

using nlohmann::json;

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (stages.empty()) throw ConfigError("at least one training stage is required");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (stages[s].beta < 0.0 || stages[s].gamma < 0.0) {
      throw ConfigError("stage " + std::to_string(s + 1) + " has a negative loss weight");
    }
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(volume_threshold > 0.0) || !(mask_threshold > 0.0) || !(alpha > 0.0) || !(tau > 0.0)) {
    throw ConfigError("thresholds, alpha and tau must be positive");
  }
  if (!(sigma2 > 0.0) || !(sigma3 > 0.0)) throw ConfigError("sigma2 and sigma3 must be positive");
  if (train_frames + test_frames > scene.n_frames) {
    throw ConfigError("train_frames + test_frames exceeds the scene's frame count");
  }
  if (!(scene.image_size == image_size)) throw ConfigError("scene and model image sizes differ");
  scene.validate();
  model_config().validate();
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.channel_scale = channel_scale;
  m.n_views = scene.n_views;
  m.vox = vox;
  m.image_size = image_size;
  m.share_extractor = share_extractor;
  return m;
}

namespace {

VoxelGridSpec centred_grid(double cell, std::size_t a, std::size_t b, std::size_t n, double h_vox) {
  return {-0.5 * cell * static_cast<double>(b), -0.5 * cell * static_cast<double>(a), cell, a, b, n, h_vox};
}

void fit_scene_to_grid(TrainConfig& cfg) {
  auto& s = cfg.scene;
  s.area_x0 = cfg.vox.origin_x;
  s.area_y0 = cfg.vox.origin_y;
  s.area_x1 = cfg.vox.origin_x + cfg.vox.extent_x();
  s.area_y1 = cfg.vox.origin_y + cfg.vox.extent_y();
  const double half = 0.5 * std::max(cfg.vox.extent_x(), cfg.vox.extent_y());
  s.ring_radius = 1.5 * half;
  s.camera_elevation = 3.0 * half;
  s.image_size = cfg.image_size;
}

}  // namespace

TrainConfig preset_config(const std::string& name) {
  TrainConfig cfg;
  cfg.preset = name;
  if (name == "desk") {
    cfg.vox = centred_grid(250.0, 32, 32, 7, 400.0);
    cfg.image_size = {64, 64};
    cfg.channel_scale = 0.25;
    cfg.stages = {{5, 1.0, 0.0}, {10, 0.01, 0.0}, {5, 0.01, 10.0}};
    cfg.scene.n_frames = 250;
    cfg.scene.max_people = 8;
    cfg.train_frames = 200;
    cfg.test_frames = 50;
  } else if (name == "pets") {
    cfg.vox = centred_grid(100.0, 177, 152, 7, 400.0);
    cfg.image_size = {384, 288};
    cfg.channel_scale = 1.0;
    cfg.scene.max_people = 40;
  } else if (name == "duke") {
    cfg.vox = centred_grid(100.0, 120, 160, 14, 200.0);
    cfg.image_size = {640, 360};
    cfg.channel_scale = 1.0;
    cfg.scene.n_views = 8;
    cfg.scene.max_people = 30;
  } else if (name == "city") {
    cfg.vox = centred_grid(100.0, 192, 160, 28, 100.0);
    cfg.image_size = {676, 380};
    cfg.channel_scale = 1.0;
    cfg.scene.max_people = 80;
  } else {
    throw ConfigError("unknown preset \"" + name + "\" (expected pets, duke, city or desk)");
  }
  if (name != "desk") {
    cfg.scene.n_frames = 10;
    cfg.train_frames = 8;
    cfg.test_frames = 2;
  }
  cfg.sigma3 = 2.0 * cfg.vox.cell_xy;
  fit_scene_to_grid(cfg);
  return cfg;
}

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field \"" + key + "\": " + e.what());
  }
}

[[noreturn]] void unknown_key(const std::string& where, const std::string& key) {
  throw ConfigError("unknown config field \"" + where + key + "\"");
}

void apply_vox(VoxelGridSpec& vox, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "origin_x") vox.origin_x = get_as<double>(v, k);
    else if (k == "origin_y") vox.origin_y = get_as<double>(v, k);
    else if (k == "cell_xy") vox.cell_xy = get_as<double>(v, k);
    else if (k == "a") vox.a = get_as<std::size_t>(v, k);
    else if (k == "b") vox.b = get_as<std::size_t>(v, k);
    else if (k == "n") vox.n = get_as<std::size_t>(v, k);
    else if (k == "h_vox") vox.h_vox = get_as<double>(v, k);
    else unknown_key("vox.", k);
  }
}

void apply_scene(SceneConfig& s, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "seed") s.seed = get_as<std::uint64_t>(v, k);
    else if (k == "n_views") s.n_views = get_as<std::size_t>(v, k);
    else if (k == "n_frames") s.n_frames = get_as<std::size_t>(v, k);
    else if (k == "people_range") {
      const auto r = get_as<std::vector<std::size_t>>(v, k);
      if (r.size() != 2) throw ConfigError("scene.people_range must be [min, max]");
      s.min_people = r[0];
      s.max_people = r[1];
    } else if (k == "area") {
      const auto r = get_as<std::vector<double>>(v, k);
      if (r.size() != 4) throw ConfigError("scene.area must be [x0, y0, x1, y1]");
      s.area_x0 = r[0];
      s.area_y0 = r[1];
      s.area_x1 = r[2];
      s.area_y1 = r[3];
    } else if (k == "height_dist") {
      const auto r = get_as<std::vector<double>>(v, k);
      if (r.size() != 4) throw ConfigError("scene.height_dist must be [mean, sd, min, max]");
      s.height_mean = r[0];
      s.height_sd = r[1];
      s.height_min = r[2];
      s.height_max = r[3];
    } else if (k == "ring_radius") s.ring_radius = get_as<double>(v, k);
    else if (k == "camera_elevation") s.camera_elevation = get_as<double>(v, k);
    else if (k == "body_radius") s.body_radius = get_as<double>(v, k);
    else if (k == "walk_step") s.walk_step = get_as<double>(v, k);
    else if (k == "min_separation") s.min_separation = get_as<double>(v, k);
    else unknown_key("scene.", k);
  }
}

ImageSize size_from_json(const json& v) {
  const auto s = get_as<std::vector<std::size_t>>(v, "image_size");
  if (s.size() != 2) throw ConfigError("image_size must be [width, height]");
  return {s[0], s[1]};
}

}  // namespace

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig cfg = preset_config(j.contains("preset") ? get_as<std::string>(j.at("preset"), "preset") : "desk");
  bool grid_changed = false;
  for (const auto& [k, v] : j.items()) {
    if (k == "preset") continue;
    if (k == "stages") {
      cfg.stages.clear();
      for (const auto& s : v) {
        StageConfig st;
        for (const auto& [sk, sv] : s.items()) {
          if (sk == "epochs") st.epochs = get_as<std::size_t>(sv, sk);
          else if (sk == "beta") st.beta = get_as<double>(sv, sk);
          else if (sk == "gamma") st.gamma = get_as<double>(sv, sk);
          else unknown_key("stages[].", sk);
        }
        cfg.stages.push_back(st);
      }
    } else if (k == "learning_rate") cfg.learning_rate = get_as<double>(v, k);
    else if (k == "batch_size") cfg.batch_size = get_as<std::size_t>(v, k);
    else if (k == "optimizer") {
      for (const auto& [ok, ov] : v.items()) {
        if (ok == "beta1") cfg.optimizer.beta1 = get_as<double>(ov, ok);
        else if (ok == "beta2") cfg.optimizer.beta2 = get_as<double>(ov, ok);
        else if (ok == "epsilon") cfg.optimizer.epsilon = get_as<double>(ov, ok);
        else unknown_key("optimizer.", ok);
      }
    } else if (k == "seed") cfg.seed = get_as<std::uint64_t>(v, k);
    else if (k == "vox") {
      apply_vox(cfg.vox, v);
      grid_changed = true;
    } else if (k == "image_size") {
      cfg.image_size = size_from_json(v);
      grid_changed = true;
    } else if (k == "thresholds") {
      for (const auto& [tk, tv] : v.items()) {
        if (tk == "T") cfg.volume_threshold = get_as<double>(tv, tk);
        else if (tk == "mask") cfg.mask_threshold = get_as<double>(tv, tk);
        else if (tk == "alpha") cfg.alpha = get_as<double>(tv, tk);
        else if (tk == "tau") cfg.tau = get_as<double>(tv, tk);
        else unknown_key("thresholds.", tk);
      }
    } else if (k == "pcm_gradient") {
      const auto mode = get_as<std::string>(v, k);
      if (mode == "soft") cfg.pcm_gradient = PcmGradient::Soft;
      else if (mode == "detached") cfg.pcm_gradient = PcmGradient::Detached;
      else throw ConfigError("pcm_gradient must be \"soft\" or \"detached\"");
    } else if (k == "sigma2") cfg.sigma2 = get_as<double>(v, k);
    else if (k == "sigma3") cfg.sigma3 = get_as<double>(v, k);
    else if (k == "channel_scale") cfg.channel_scale = get_as<double>(v, k);
    else if (k == "share_extractor") cfg.share_extractor = get_as<bool>(v, k);
    else if (k == "train_frames") cfg.train_frames = get_as<std::size_t>(v, k);
    else if (k == "test_frames") cfg.test_frames = get_as<std::size_t>(v, k);
    else if (k != "scene") unknown_key("", k);
  }
  if (grid_changed) fit_scene_to_grid(cfg);
  if (j.contains("scene")) apply_scene(cfg.scene, j.at("scene"));
  cfg.validate();
  return cfg;
}

json config_to_json(const TrainConfig& cfg) {
  json stages = json::array();
  for (const auto& s : cfg.stages) stages.push_back({{"epochs", s.epochs}, {"beta", s.beta}, {"gamma", s.gamma}});
  const auto& v = cfg.vox;
  const auto& s = cfg.scene;
  return {
      {"preset", cfg.preset},
      {"stages", stages},
      {"learning_rate", cfg.learning_rate},
      {"batch_size", cfg.batch_size},
      {"optimizer", {{"beta1", cfg.optimizer.beta1}, {"beta2", cfg.optimizer.beta2}, {"epsilon", cfg.optimizer.epsilon}}},
      {"seed", cfg.seed},
      {"vox", {{"origin_x", v.origin_x}, {"origin_y", v.origin_y}, {"cell_xy", v.cell_xy},
               {"a", v.a}, {"b", v.b}, {"n", v.n}, {"h_vox", v.h_vox}}},
      {"image_size", {cfg.image_size.width, cfg.image_size.height}},
      {"thresholds", {{"T", cfg.volume_threshold}, {"mask", cfg.mask_threshold}, {"alpha", cfg.alpha}, {"tau", cfg.tau}}},
      {"pcm_gradient", cfg.pcm_gradient == PcmGradient::Soft ? "soft" : "detached"},
      {"sigma2", cfg.sigma2},
      {"sigma3", cfg.sigma3},
      {"channel_scale", cfg.channel_scale},
      {"share_extractor", cfg.share_extractor},
      {"train_frames", cfg.train_frames},
      {"test_frames", cfg.test_frames},
      {"scene", {{"seed", s.seed}, {"n_views", s.n_views}, {"n_frames", s.n_frames},
                 {"people_range", {s.min_people, s.max_people}},
                 {"area", {s.area_x0, s.area_y0, s.area_x1, s.area_y1}},
                 {"height_dist", {s.height_mean, s.height_sd, s.height_min, s.height_max}},
                 {"ring_radius", s.ring_radius}, {"camera_elevation", s.camera_elevation},
                 {"body_radius", s.body_radius}, {"walk_step", s.walk_step},
                 {"min_separation", s.min_separation}}},
  };
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------- ground truth

FrameData build_frame(const Scene& scene, int frame_id, const TrainConfig& cfg, FrameReport* report) {
  const Frame& frame = scene.frame(frame_id);
  const std::size_t n_views = scene.cameras.size();
  for (const auto& cam : scene.cameras) {
    if (!(cam.image_size == cfg.image_size)) {
      throw ConfigError("scene cameras do not match the configured image size");
    }
  }
  FrameData fd;
  fd.frame_id = frame_id;
  fd.images = render_views(scene, frame_id, cfg.image_size, cfg.scene.body_radius);

  FrameReport local;
  FrameReport& rep = report != nullptr ? *report : local;
  rep = FrameReport{};
  rep.frame_id = frame_id;

  std::vector<WorldPoint> heads;
  for (const PersonRecord& p : frame.people) {
    PersonAnnotationSet set{p.person_id, {}};
    for (std::size_t v = 0; v < n_views; ++v) {
      for (const ViewAnnotation& a : frame.annotations[v]) {
        if (a.person_id == p.person_id && a.visible) set.heads.push_back({v, a.u, a.v});
      }
    }
    if (set.heads.empty()) {
      rep.unannotated.push_back(p.person_id);
      continue;
    }
    PersonReport pr;
    pr.person_id = p.person_id;
    pr.views = set.heads.size();
    pr.recovered = triangulate_head(set, scene.cameras);
    pr.truth = p.head();
    pr.in_grid = cfg.vox.contains(pr.recovered);
    rep.people.push_back(pr);
    heads.push_back(pr.recovered);
  }
  const DensityVolume vol = splat_3d(heads, cfg.vox, cfg.sigma3, &rep.volume);
  fd.volume = vol.values;
  fd.true_count = static_cast<double>(rep.volume.splatted);

  const ImageSize pooled{cfg.image_size.width / 4, cfg.image_size.height / 4};
  for (std::size_t v = 0; v < n_views; ++v) {
    std::vector<PixelPoint> full, small;
    for (const ViewAnnotation& a : frame.annotations[v]) {
      if (!a.visible) continue;
      full.push_back({a.u, a.v});
      small.push_back({(a.u - 1.5) / 4.0, (a.v - 1.5) / 4.0});
    }
    SplatReport sr;
    fd.maps.push_back(rasterize_2d(small, pooled, cfg.sigma2 / 4.0, &sr).values);
    fd.view_counts.push_back(static_cast<double>(sr.splatted));
    rep.maps.push_back(sr);
    fd.masks.push_back(binary_mask(rasterize_2d(full, cfg.image_size, cfg.sigma2).values, cfg.mask_threshold));
  }
  return fd;
}

std::vector<FrameData> build_frames(const Scene& scene, const TrainConfig& cfg, std::size_t first,
                                    std::size_t count) {
  if (first + count > scene.frames.size()) {
    throw ConfigError("scene has " + std::to_string(scene.frames.size()) + " frames, need " +
                      std::to_string(first + count));
  }
  std::vector<FrameData> out;
  out.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) {
    out.push_back(build_frame(scene, scene.frames[i].frame_id, cfg));
  }
  return out;
}

namespace {

json point_json(const WorldPoint& p) { return {p.x, p.y, p.z}; }

std::string frame_stem(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d", frame_id);
  return buf;
}

}  // namespace

json frame_report_json(const FrameReport& r) {
  json people = json::array();
  for (const auto& p : r.people) {
    people.push_back({{"person_id", p.person_id},
                      {"views", p.views},
                      {"recovered", point_json(p.recovered)},
                      {"truth", point_json(p.truth)},
                      {"height_error", p.recovered.z - p.truth.z},
                      {"in_grid", p.in_grid}});
  }
  json maps = json::array();
  for (const auto& m : r.maps) maps.push_back({{"splatted", m.splatted}, {"skipped", m.skipped}});
  return {{"frame_id", r.frame_id},
          {"people", people},
          {"unannotated", r.unannotated},
          {"volume", {{"splatted", r.volume.splatted}, {"skipped", r.volume.skipped}}},
          {"maps", maps}};
}

void make_gt(const Scene& scene, const TrainConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json frames = json::array();
  for (const Frame& f : scene.frames) {
    FrameReport rep;
    const FrameData fd = build_frame(scene, f.frame_id, cfg, &rep);
    const std::string stem = frame_stem(f.frame_id);
    t3dc::save(dir / (stem + "_volume.t3dc"), fd.volume);
    for (std::size_t v = 0; v < fd.maps.size(); ++v) {
      t3dc::save(dir / (stem + "_map" + std::to_string(v) + ".t3dc"), fd.maps[v]);
      t3dc::save(dir / (stem + "_mask" + std::to_string(v) + ".t3dc"), fd.masks[v]);
    }
    frames.push_back(frame_report_json(rep));
  }
  std::ofstream os(dir / "report.json");
  if (!os) throw FormatError("cannot write " + (dir / "report.json").string());
  os << json{{"config", config_to_json(cfg)}, {"frames", frames}}.dump(1) << '\n';
}

// -------------------------------------------------------------- training

json step_json(const StepRecord& r) {
  return {{"step", r.step}, {"stage", r.stage}, {"epoch", r.epoch}, {"frame", r.frame_id},
          {"l3d", r.l3d},   {"l2d", r.l2d},     {"lpcm", r.lpcm},   {"total", r.total}};
}

json checkpoint_meta(const TrainConfig& cfg, int stage, std::size_t steps) {
  return {{"config", config_to_json(cfg)}, {"seed", cfg.seed}, {"stage", stage}, {"steps", steps}};
}

namespace {

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int stage, std::size_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage), static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<Tensor> projected_masks(const std::vector<BackProjector>& bps, const Tensor& volume,
                                    const TrainConfig& cfg, bool soft) {
  std::vector<Tensor> out;
  for (const auto& bp : bps) {
    out.push_back(soft ? bp.soft_mask(volume, cfg.volume_threshold, cfg.tau)
                       : bp.hard_mask(volume, cfg.volume_threshold));
  }
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<CameraParams>& cameras,
                  const std::vector<FrameData>& frames, const TrainOptions& opts) {
  cfg.validate();
  if (frames.empty()) throw ConfigError("no training frames");
  const int n_stages = static_cast<int>(cfg.stages.size());
  const int last_stage = opts.last_stage == 0 ? n_stages : opts.last_stage;
  if (opts.first_stage < 1 || last_stage > n_stages || opts.first_stage > last_stage) {
    throw ConfigError("stage range must lie within 1.." + std::to_string(n_stages));
  }
  const ModelConfig mcfg = cfg.model_config();
  Model model(mcfg, cameras, opts.init ? *opts.init : init_params(mcfg, cfg.seed));
  std::vector<BackProjector> bps;
  for (const auto& cam : cameras) bps.emplace_back(cam, cfg.vox);

  TrainResult result;
  auto fail = [&](const std::string& what, const StepRecord& rec) {
    if (!opts.diagnostic_path.empty()) {
      json meta = checkpoint_meta(cfg, rec.stage, rec.step);
      meta["failure"] = what;
      meta["last_step"] = step_json(rec);
      save_checkpoint(opts.diagnostic_path, model.params(), meta);
    }
    throw NumericError(what + " at step " + std::to_string(rec.step) + " (stage " +
                       std::to_string(rec.stage) + ", frame " + std::to_string(rec.frame_id) + ")");
  };

  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
  for (int stage = opts.first_stage; stage <= last_stage; ++stage) {
    const StageConfig& sc = cfg.stages[static_cast<std::size_t>(stage - 1)];
    const LossWeights w{sc.beta, sc.gamma, std::min(stage, 3)};
    AdamOptions aopts = cfg.optimizer;
    aopts.learning_rate = cfg.learning_rate;
    Adam adam(model.params().tensors(), aopts);
    const bool pcm_on_tape = sc.gamma > 0.0 && cfg.pcm_gradient == PcmGradient::Soft;
    for (std::size_t epoch = 0; epoch < sc.epochs; ++epoch) {
      const auto order = epoch_order(cfg.seed, stage, epoch, frames.size());
      std::size_t in_batch = 0;
      for (std::size_t idx : order) {
        const FrameData& f = frames[idx];
        StepRecord rec;
        rec.step = ++result.steps;
        rec.stage = stage;
        rec.epoch = epoch;
        rec.frame_id = f.frame_id;
        Tape tape;
        TapeScope scope(tape);
        const ModelOutput out = model.forward(f.images);
        const Tensor l3d = loss_3d(out.volume, f.volume);
        const Tensor l2d = loss_2d(out.view_maps, f.maps);
        const Tensor pcm_source = pcm_on_tape ? out.volume : out.volume.detach();
        const auto proj = projected_masks(bps, pcm_source, cfg, cfg.pcm_gradient == PcmGradient::Soft);
        const Tensor lpcm = loss_pcm(f.masks, proj, cfg.alpha);
        Tensor total = loss_total(l3d, l2d, lpcm, w);
        if (cfg.batch_size > 1) total = ops::scale(total, inv_batch);
        rec.l3d = l3d.item();
        rec.l2d = l2d.item();
        rec.lpcm = lpcm.item();
        rec.total = total.item();
        if (opts.log != nullptr) {
          *opts.log << step_json(rec).dump() << '\n';
          opts.log->flush();
        }
        result.last = rec;
        if (!std::isfinite(rec.total)) fail("non-finite loss", rec);
        tape.backward(total);
        for (const auto& e : model.params().entries()) {
          if (e.value.has_grad() && !all_finite(e.value.grad())) fail("non-finite gradient in " + e.name, rec);
        }
        if (++in_batch == cfg.batch_size) {
          adam.step();
          in_batch = 0;
        }
      }
      if (in_batch > 0) adam.step();
    }
  }
  result.params = model.params();
  return result;
}

// ------------------------------------------------------------ evaluation

json metrics_json(const Metrics& m) {
  return {{"mae", m.mae},
          {"view_mae", m.view_mae},
          {"mean_pcm", m.mean_pcm},
          {"predicted", m.predicted},
          {"truth", m.truth},
          {"frames", m.truth.size()}};
}

namespace {

Metrics score(const TrainConfig& cfg, const std::vector<CameraParams>& cameras,
              const std::vector<FrameData>& frames,
              const std::function<ModelOutput(const FrameData&)>& predict) {
  Metrics m;
  m.view_mae.assign(cameras.size(), 0.0);
  std::vector<BackProjector> bps;
  for (const auto& cam : cameras) bps.emplace_back(cam, cfg.vox);
  double pcm_sum = 0.0;
  for (const FrameData& f : frames) {
    const ModelOutput out = predict(f);
    const double count = count_from_volume(out.volume);
    m.predicted.push_back(count);
    m.truth.push_back(f.true_count);
    m.mae += std::abs(count - f.true_count);
    for (std::size_t v = 0; v < cameras.size(); ++v) {
      const auto vals = out.view_maps[v].values();
      const double c = std::accumulate(vals.begin(), vals.end(), 0.0) / kMapScale;
      m.view_mae[v] += std::abs(c - f.view_counts[v]);
      pcm_sum += pcm(f.masks[v], bps[v].hard_mask(out.volume, cfg.volume_threshold), cfg.alpha);
    }
  }
  if (!frames.empty()) {
    const double n = static_cast<double>(frames.size());
    m.mae /= n;
    for (double& v : m.view_mae) v /= n;
    m.mean_pcm = pcm_sum / (n * static_cast<double>(cameras.size()));
  }
  return m;
}

}  // namespace

Metrics evaluate(const TrainConfig& cfg, const Model& model, const std::vector<FrameData>& frames) {
  return score(cfg, model.cameras(), frames, [&](const FrameData& f) { return model.forward(f.images); });
}

Metrics evaluate_ground_truth(const TrainConfig& cfg, const std::vector<CameraParams>& cameras,
                              const std::vector<FrameData>& frames) {
  return score(cfg, cameras, frames, [](const FrameData& f) { return ModelOutput{f.volume, f.maps}; });
}

}  // namespace mvc3d
