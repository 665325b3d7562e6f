#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvc3d/camera.hpp"
#include "mvc3d/tensor.hpp"

namespace mvc3d {

inline constexpr const char* kSceneSchema = "mvc3d_scene_v1";

struct PersonRecord {
  int person_id = 0;
  double x = 0.0, y = 0.0;      ///< ground position, mm
  double body_height = 1750.0;  ///< head height, mm
  WorldPoint head() const { return {x, y, body_height}; }
};

struct ViewAnnotation {
  int person_id = 0;
  double u = 0.0, v = 0.0;
  bool visible = false;
};

struct Frame {
  int frame_id = 0;
  std::vector<PersonRecord> people;
  /// annotations[view] lists every person of the frame with its head
  /// projection; `visible` is false when out of image or occluded.
  std::vector<std::vector<ViewAnnotation>> annotations;
};

struct Scene {
  std::uint64_t seed = 0;
  std::vector<CameraParams> cameras;
  std::vector<Frame> frames;
  /// Walkable ground area [x0, x1) x [y0, y1), mm.
  double area_x0 = 0.0, area_y0 = 0.0, area_x1 = 0.0, area_y1 = 0.0;

  const Frame& frame(int frame_id) const;
};

struct SceneConfig {
  std::uint64_t seed = 0;
  std::size_t n_views = 3;
  std::size_t n_frames = 10;
  std::size_t min_people = 1;
  std::size_t max_people = 8;
  double area_x0 = -4000.0, area_y0 = -4000.0, area_x1 = 4000.0, area_y1 = 4000.0;
  double height_mean = 1750.0, height_sd = 100.0, height_min = 1000.0, height_max = 2000.0;
  double ring_radius = 6000.0;
  double camera_elevation = 12000.0;
  ImageSize image_size{64, 64};
  double body_radius = 250.0;
  /// Per-axis standard deviation of one random-walk step, mm.
  double walk_step = 150.0;
  double min_separation = 500.0;

  void validate() const;
};

/// Deterministic synthetic multi-camera crowd: cameras on a ring looking at
/// the area centre, people on bounded random walks, exact head annotations
/// with cylinder-occlusion visibility flags.
Scene gen_scene(const SceneConfig& cfg);

/// True when another person's body cylinder crosses the segment from the
/// camera centre to `target`'s head.
bool is_occluded(const CameraParams& cam, const PersonRecord& target,
                 const std::vector<PersonRecord>& people, double body_radius);

/// First camera-frame hit of the segment camera -> target head on an
/// occluder's cylinder, or a negative value when it misses.
double occluder_hit_depth(const CameraParams& cam, const PersonRecord& target,
                          const PersonRecord& occluder, double body_radius);

/// Grayscale views of one frame: capsules (radius `body_radius`) from the
/// ground to each head at intensity 0.8 plus per-frame Gaussian noise
/// (sigma 0.02) seeded from (scene seed, frame, view). Values are not
/// clamped; see write_pgm for 8-bit export.
std::vector<Tensor> render_views(const Scene& scene, int frame_id, ImageSize image_size,
                                 double body_radius = 250.0);

/// Throws FormatError when annotations disagree with the geometry by more
/// than 0.5 px or person ids repeat within a frame.
void validate_scene(const Scene& scene);

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);
void save_scene(const std::filesystem::path& path, const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

nlohmann::json camera_to_json(const CameraParams& cam);
CameraParams camera_from_json(const nlohmann::json& j);

/// 8-bit binary PGM of a [1,H,W] image, clamped to [0, 1].
void write_pgm(const std::filesystem::path& path, const Tensor& image);

}  // namespace mvc3d
