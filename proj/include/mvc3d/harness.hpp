#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvc3d/ground_truth.hpp"
#include "mvc3d/model.hpp"
#include "mvc3d/optimizer.hpp"
#include "mvc3d/scene.hpp"

namespace mvc3d {

struct StageConfig {
  std::size_t epochs = 10;
  double beta = 1.0;
  double gamma = 0.0;
};

enum class PcmGradient { Soft, Detached };

struct TrainConfig {
  std::string preset = "desk";
  std::vector<StageConfig> stages{{10, 1.0, 0.0}, {20, 0.01, 0.0}, {10, 0.01, 10.0}};
  double learning_rate = 1.0e-4;
  std::size_t batch_size = 1;
  AdamOptions optimizer;
  std::uint64_t seed = 0;
  VoxelGridSpec vox{-4000.0, -4000.0, 250.0, 32, 32, 7, 400.0};
  ImageSize image_size{64, 64};
  double volume_threshold = 1.0e-4;  ///< T
  double mask_threshold = 1.0e-3;
  double alpha = 1.0e-5;
  double tau = 1.0e-5;
  PcmGradient pcm_gradient = PcmGradient::Soft;
  double sigma2 = 3.0;    ///< px, full image resolution
  double sigma3 = 500.0;  ///< mm
  double channel_scale = 0.25;
  bool share_extractor = true;
  /// The first train_frames frames of a scene train, the next test_frames test.
  std::size_t train_frames = 200;
  std::size_t test_frames = 50;
  SceneConfig scene;

  void validate() const;
  ModelConfig model_config() const;
};

/// Built-in configurations: "pets", "duke", "city" (reference resolutions)
/// and "desk" (small CPU benchmark).
TrainConfig preset_config(const std::string& name);

/// Preset named by j["preset"] (default "desk") with every other key of `j`
/// overriding the matching field. Unknown keys throw ConfigError.
TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig load_config(const std::filesystem::path& path);

/// Everything a training or evaluation step needs for one frame.
struct FrameData {
  int frame_id = 0;
  std::vector<Tensor> images;    ///< [1,H,W] per view
  Tensor volume;                 ///< 3D ground truth [1,n,a,b]
  std::vector<Tensor> maps;      ///< 2D ground truth at feature resolution [1,H/4,W/4]
  std::vector<Tensor> masks;     ///< binary view masks at image resolution [1,H,W]
  double true_count = 0.0;       ///< people in the 3D ground truth
  std::vector<double> view_counts;  ///< heads in each 2D ground-truth map
};

/// Per-frame ground-truth construction record.
struct PersonReport {
  int person_id = 0;
  std::size_t views = 0;
  WorldPoint recovered;
  WorldPoint truth;
  bool in_grid = false;
};

struct FrameReport {
  int frame_id = 0;
  std::vector<PersonReport> people;
  std::vector<int> unannotated;  ///< people visible in no view
  SplatReport volume;
  std::vector<SplatReport> maps;
};

/// Renders a frame and builds its ground truth: heads triangulated from the
/// visible annotations are splatted into the volume, visible annotations are
/// rasterised into the view maps and masks.
FrameData build_frame(const Scene& scene, int frame_id, const TrainConfig& cfg,
                      FrameReport* report = nullptr);

nlohmann::json frame_report_json(const FrameReport& report);

/// Writes per-frame T3DC volumes and maps plus report.json into `dir`.
void make_gt(const Scene& scene, const TrainConfig& cfg, const std::filesystem::path& dir);

struct StepRecord {
  std::size_t step = 0;
  int stage = 1;
  std::size_t epoch = 0;
  int frame_id = 0;
  double l3d = 0.0, l2d = 0.0, lpcm = 0.0, total = 0.0;
};

nlohmann::json step_json(const StepRecord& r);

struct TrainOptions {
  /// Stages (1-based, inclusive) to run; last_stage 0 means the final stage.
  int first_stage = 1;
  int last_stage = 0;
  /// Parameters to start from instead of a fresh initialisation.
  std::optional<ModelParams> init;
  /// Receives one NDJSON line per step when set.
  std::ostream* log = nullptr;
  /// Where to write a diagnostic checkpoint before throwing NumericError.
  std::filesystem::path diagnostic_path;
};

struct TrainResult {
  ModelParams params;
  std::size_t steps = 0;
  StepRecord last;
};

/// Three-stage Adam training on `frames`. Each stage starts a fresh
/// optimiser and shuffles frames with a stream derived from (seed, stage,
/// epoch), so running stages separately reproduces a continuous run.
TrainResult train(const TrainConfig& cfg, const std::vector<CameraParams>& cameras,
                  const std::vector<FrameData>& frames, const TrainOptions& opts);

struct Metrics {
  double mae = 0.0;
  std::vector<double> view_mae;  ///< per-view 2D count MAE
  double mean_pcm = 0.0;         ///< hard-mask PCM averaged over frames and views
  std::vector<double> predicted;
  std::vector<double> truth;
};

nlohmann::json metrics_json(const Metrics& m);

/// Scene-count MAE, per-view 2D MAE and mean hard-mask PCM of a model.
Metrics evaluate(const TrainConfig& cfg, const Model& model, const std::vector<FrameData>& frames);
/// The same metrics with the ground truth itself as the prediction.
Metrics evaluate_ground_truth(const TrainConfig& cfg, const std::vector<CameraParams>& cameras,
                              const std::vector<FrameData>& frames);

/// Frames [first, first + count) of a scene, rendered with ground truth.
std::vector<FrameData> build_frames(const Scene& scene, const TrainConfig& cfg, std::size_t first,
                                    std::size_t count);

nlohmann::json checkpoint_meta(const TrainConfig& cfg, int stage, std::size_t steps);

}  // namespace mvc3d
