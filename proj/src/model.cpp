#include "mvc3d/model.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "mvc3d/error.hpp"
#include "mvc3d/ground_truth.hpp"
#include "mvc3d/ops.hpp"

namespace mvc3d {

void ModelConfig::validate() const {
  if (!(channel_scale > 0.0)) throw ConfigError("channel_scale must be positive");
  if (n_views < 1) throw ConfigError("model needs at least one view");
  vox.validate();
  if (image_size.width % 4 != 0 || image_size.height % 4 != 0 || image_size.width == 0 ||
      image_size.height == 0) {
    throw ConfigError("image extents must be positive multiples of 4");
  }
}

std::size_t ModelConfig::scaled(std::size_t channels) const {
  const auto c = static_cast<long>(std::lround(static_cast<double>(channels) * channel_scale));
  return static_cast<std::size_t>(std::max(1L, c));
}

std::vector<LayerSpec> view_branch_layers(const ModelConfig& cfg) {
  const auto s = [&](std::size_t c) { return cfg.scaled(c); };
  return {
      {"conv1", {s(16), 1, 5, 5}, true},       {"conv2", {s(16), s(16), 5, 5}, true},
      {"conv3", {s(32), s(16), 5, 5}, true},   {"conv4", {s(32), s(32), 5, 5}, true},
      {"conv5", {s(64), s(32), 5, 5}, true},   {"conv6", {s(32), s(64), 5, 5}, true},
      {"conv7", {1, s(32), 5, 5}, false},
  };
}

std::vector<LayerSpec> fusion_layers(const ModelConfig& cfg) {
  const auto s = [&](std::size_t c) { return cfg.scaled(c); };
  const std::size_t in = cfg.n_views * cfg.feature_channels();
  return {
      {"fusion.conv1", {s(32), in, 7, 5, 5}, true},
      {"fusion.conv2", {s(64), s(32), 7, 5, 5}, true},
      {"fusion.conv3", {s(128), s(64), 7, 5, 5}, true},
      {"fusion.conv4", {s(64), s(128), 7, 5, 5}, true},
      {"fusion.conv5", {s(32), s(64), 7, 5, 5}, true},
      {"fusion.conv6", {s(32), s(32), 7, 5, 5}, true},
      {"fusion.conv7", {1, s(32), 7, 5, 5}, false},
  };
}

void ModelParams::add(std::string name, Tensor value) {
  entries_.push_back({std::move(name), std::move(value)});
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw ConfigError("unknown parameter " + name);
}

std::vector<Tensor> ModelParams::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.value);
  return out;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

namespace {

void add_layer(ModelParams& params, const std::string& prefix, const LayerSpec& spec,
               std::mt19937_64& rng) {
  const std::size_t fan_in = shape_numel(spec.kernel) / spec.kernel[0];
  // He-uniform ahead of a ReLU, LeCun-uniform for the linear output layers.
  const double bound = std::sqrt((spec.relu ? 6.0 : 3.0) / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor kernel(spec.kernel, true);
  for (double& v : kernel.values_mut()) v = static_cast<double>(static_cast<float>(dist(rng)));
  params.add(prefix + spec.name + ".weight", kernel);
  params.add(prefix + spec.name + ".bias", Tensor({spec.kernel[0]}, true));
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ModelParams params;
  const std::size_t branches = cfg.share_extractor ? 1 : cfg.n_views;
  for (std::size_t v = 0; v < branches; ++v) {
    const std::string prefix = cfg.share_extractor ? "" : "view" + std::to_string(v) + ".";
    for (const auto& spec : view_branch_layers(cfg)) add_layer(params, prefix, spec, rng);
  }
  for (const auto& spec : fusion_layers(cfg)) add_layer(params, "", spec, rng);
  return params;
}

Model::Model(ModelConfig cfg, std::vector<CameraParams> cameras, ModelParams params)
    : cfg_(std::move(cfg)), cameras_(std::move(cameras)), params_(std::move(params)) {
  cfg_.validate();
  if (cameras_.size() != cfg_.n_views) {
    throw ConfigError("model configured for " + std::to_string(cfg_.n_views) + " views, got " +
                      std::to_string(cameras_.size()) + " cameras");
  }
  for (const auto& cam : cameras_) {
    if (!(cam.image_size == cfg_.image_size)) {
      throw ConfigError("camera image size does not match the model input size");
    }
    projectors_.emplace_back(downscale_camera(cam, 4), cfg_.vox);
  }
  // Fail early on missing or mis-shaped parameters.
  const std::size_t branches = cfg_.share_extractor ? 1 : cfg_.n_views;
  for (std::size_t v = 0; v < branches; ++v) {
    for (const auto& spec : view_branch_layers(cfg_)) {
      const std::string name = (cfg_.share_extractor ? "" : "view" + std::to_string(v) + ".") + spec.name;
      if (params_.at(name + ".weight").dims() != spec.kernel) {
        throw ConfigError("parameter " + name + " has the wrong shape");
      }
    }
  }
  for (const auto& spec : fusion_layers(cfg_)) {
    if (params_.at(spec.name + ".weight").dims() != spec.kernel) {
      throw ConfigError("parameter " + spec.name + " has the wrong shape");
    }
  }
}

std::string Model::branch_prefix(std::size_t view) const {
  return cfg_.share_extractor ? std::string() : "view" + std::to_string(view) + ".";
}

Tensor Model::view_features(std::size_t view, const Tensor& image) const {
  const std::string p = branch_prefix(view);
  auto conv = [&](const Tensor& x, const char* layer) {
    return ops::relu(ops::conv2d(x, params_.at(p + layer + ".weight"), params_.at(p + layer + ".bias")));
  };
  Tensor x = conv(image, "conv1");
  x = ops::maxpool2(conv(x, "conv2"));
  x = conv(x, "conv3");
  return ops::maxpool2(conv(x, "conv4"));
}

Tensor Model::view_density(std::size_t view, const Tensor& features) const {
  const std::string p = branch_prefix(view);
  auto w = [&](const char* layer) { return params_.at(p + layer + ".weight"); };
  auto b = [&](const char* layer) { return params_.at(p + layer + ".bias"); };
  Tensor x = ops::relu(ops::conv2d(features, w("conv5"), b("conv5")));
  x = ops::relu(ops::conv2d(x, w("conv6"), b("conv6")));
  return ops::conv2d(x, w("conv7"), b("conv7"));
}

ModelOutput Model::forward(std::span<const Tensor> images) const {
  if (images.size() != cfg_.n_views) {
    throw ShapeError("expected " + std::to_string(cfg_.n_views) + " views, got " +
                     std::to_string(images.size()));
  }
  const Shape expected{1, cfg_.image_size.height, cfg_.image_size.width};
  ModelOutput out;
  std::vector<Tensor> lifted;
  lifted.reserve(images.size());
  for (std::size_t v = 0; v < images.size(); ++v) {
    if (images[v].dims() != expected) {
      throw ShapeError("view " + std::to_string(v) + " image " + shape_str(images[v].dims()) +
                       " expected " + shape_str(expected));
    }
    const Tensor features = view_features(v, images[v]);
    out.view_maps.push_back(view_density(v, features));
    lifted.push_back(projectors_[v](features));
  }
  Tensor x = ops::concat(lifted, 0);
  for (const auto& spec : fusion_layers(cfg_)) {
    x = ops::conv3d(x, params_.at(spec.name + ".weight"), params_.at(spec.name + ".bias"));
    if (spec.relu) x = ops::relu(x);
  }
  out.volume = x;
  return out;
}

double count_from_volume(const Tensor& volume) {
  auto v = volume.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / kVolumeScale;
}

}  // namespace mvc3d
