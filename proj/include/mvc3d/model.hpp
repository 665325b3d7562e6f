#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mvc3d/camera.hpp"
#include "mvc3d/projection.hpp"
#include "mvc3d/tensor.hpp"
#include "mvc3d/voxel_grid.hpp"

namespace mvc3d {

struct ModelConfig {
  /// Multiplier on the reference channel counts; scaled counts are rounded
  /// and never drop below one.
  double channel_scale = 1.0;
  std::size_t n_views = 3;
  VoxelGridSpec vox;
  ImageSize image_size{64, 64};
  /// One single-view branch (feature extractor and 2D decoder) for all views.
  bool share_extractor = true;

  void validate() const;
  std::size_t scaled(std::size_t channels) const;
  std::size_t feature_channels() const { return scaled(32); }
};

struct LayerSpec {
  std::string name;
  Shape kernel;  ///< [Cout, Cin, kh, kw] or [Cout, Cin, kd, kh, kw]
  bool relu = true;
};

/// Convolution layers of the single-view branch: conv1..4 (two 2x2 poolings
/// after conv2 and conv4) then the density decoder conv5..7.
std::vector<LayerSpec> view_branch_layers(const ModelConfig& cfg);
/// 3D fusion decoder layers, 5x5 in the ground plane and 7 deep in height.
std::vector<LayerSpec> fusion_layers(const ModelConfig& cfg);

/// Ordered, named parameter tensors (kernels and biases).
class ModelParams {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  void add(std::string name, Tensor value);
  const Tensor& at(const std::string& name) const;
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::size_t scalar_count() const;

 private:
  std::vector<Entry> entries_;
};

/// Fan-in scaled uniform initialisation; biases start at zero.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

struct ModelOutput {
  Tensor volume;                 ///< G [1, n, a, b]
  std::vector<Tensor> view_maps;  ///< V_i [1, H/4, W/4]
};

/// Multi-view 3D counting network: per-view features and 2D density maps,
/// multi-height projection of the features, channel concatenation across
/// views and a 3D convolutional fusion decoder.
class Model {
 public:
  Model(ModelConfig cfg, std::vector<CameraParams> cameras, ModelParams params);

  ModelOutput forward(std::span<const Tensor> images) const;

  const ModelConfig& config() const { return cfg_; }
  const std::vector<CameraParams>& cameras() const { return cameras_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  /// Projectors working at the pooled feature resolution, one per view.
  const Projector& projector(std::size_t view) const { return projectors_.at(view); }

 private:
  Tensor view_features(std::size_t view, const Tensor& image) const;
  Tensor view_density(std::size_t view, const Tensor& features) const;
  std::string branch_prefix(std::size_t view) const;

  ModelConfig cfg_;
  std::vector<CameraParams> cameras_;
  ModelParams params_;
  std::vector<Projector> projectors_;
};

/// People count of a density volume: sum / kVolumeScale.
double count_from_volume(const Tensor& volume);

}  // namespace mvc3d
