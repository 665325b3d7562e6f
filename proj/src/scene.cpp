#include "mvc3d/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "mvc3d/error.hpp"

namespace mvc3d {

const Frame& Scene::frame(int frame_id) const {
  for (const Frame& f : frames) {
    if (f.frame_id == frame_id) return f;
  }
  throw FormatError("scene has no frame " + std::to_string(frame_id));
}

void SceneConfig::validate() const {
  if (n_views < 1) throw ConfigError("scene needs at least one camera");
  if (n_frames < 1) throw ConfigError("scene needs at least one frame");
  if (min_people > max_people) throw ConfigError("people range is inverted");
  if (!(area_x1 > area_x0) || !(area_y1 > area_y0)) throw ConfigError("empty walkable area");
  if (!(height_min <= height_mean && height_mean <= height_max) || !(height_sd >= 0.0)) {
    throw ConfigError("invalid body height distribution");
  }
  if (!(body_radius > 0.0) || !(min_separation >= 2.0 * body_radius)) {
    throw ConfigError("min_separation must keep body cylinders apart");
  }
  if (image_size.width == 0 || image_size.height == 0) throw ConfigError("empty image size");
  if (!(ring_radius > 0.0) || !(camera_elevation > height_max)) {
    throw ConfigError("cameras must sit above the tallest person");
  }
  // Loose packing bound: each person claims a min_separation square.
  const double area = (area_x1 - area_x0) * (area_y1 - area_y0);
  if (static_cast<double>(max_people) * min_separation * min_separation > 0.5 * area) {
    throw ConfigError("walkable area too small for " + std::to_string(max_people) + " people");
  }
}

namespace {

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kCameraStream = 0xCA3E7A;
constexpr std::uint64_t kFrameStream = 0xF7A3E;

std::vector<CameraParams> ring_cameras(const SceneConfig& cfg) {
  auto rng = substream(cfg.seed, kCameraStream, 0);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  const double cx = 0.5 * (cfg.area_x0 + cfg.area_x1), cy = 0.5 * (cfg.area_y0 + cfg.area_y1);
  const Eigen::Vector3d target(cx, cy, 0.0);
  // Corners of the walkable volume that every camera must see.
  std::vector<Eigen::Vector3d> corners;
  for (double x : {cfg.area_x0, cfg.area_x1})
    for (double y : {cfg.area_y0, cfg.area_y1})
      for (double z : {0.0, cfg.height_max}) corners.emplace_back(x, y, z);

  std::vector<CameraParams> cams;
  for (std::size_t k = 0; k < cfg.n_views; ++k) {
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cfg.n_views) + jitter(rng);
    const Eigen::Vector3d pos(cx + cfg.ring_radius * std::cos(angle),
                              cy + cfg.ring_radius * std::sin(angle), cfg.camera_elevation);
    CameraParams cam = look_at_camera(pos, target, 1.0, cfg.image_size);
    const double margin = 2.0;
    double focal = std::numeric_limits<double>::infinity();
    for (const auto& c : corners) {
      const Eigen::Vector3d pc = cam.R * c + cam.t;
      if (pc.z() <= 0.0) throw ConfigError("scene corner behind a ring camera");
      const double nx = std::abs(pc.x() / pc.z()), ny = std::abs(pc.y() / pc.z());
      const double half_w = 0.5 * static_cast<double>(cfg.image_size.width) - margin;
      const double half_h = 0.5 * static_cast<double>(cfg.image_size.height) - margin;
      if (nx > 0.0) focal = std::min(focal, half_w / nx);
      if (ny > 0.0) focal = std::min(focal, half_h / ny);
    }
    cams.push_back(look_at_camera(pos, target, focal, cfg.image_size));
  }
  return cams;
}

bool separated(double x, double y, const std::vector<PersonRecord>& people, std::size_t skip,
               double min_sep) {
  for (std::size_t i = 0; i < people.size(); ++i) {
    if (i == skip) continue;
    const double dx = people[i].x - x, dy = people[i].y - y;
    if (dx * dx + dy * dy < min_sep * min_sep) return false;
  }
  return true;
}

std::vector<ViewAnnotation> annotate_view(const CameraParams& cam, const std::vector<PersonRecord>& people,
                                          double body_radius) {
  std::vector<ViewAnnotation> out;
  const double W = static_cast<double>(cam.image_size.width);
  const double H = static_cast<double>(cam.image_size.height);
  for (const PersonRecord& p : people) {
    const ImagePoint ip = world_to_image(cam, p.head());
    const bool in_image = ip.in_front && ip.u >= -0.5 && ip.u < W - 0.5 && ip.v >= -0.5 && ip.v < H - 0.5;
    ViewAnnotation a;
    a.person_id = p.person_id;
    a.u = ip.u;
    a.v = ip.v;
    a.visible = in_image && !is_occluded(cam, p, people, body_radius);
    out.push_back(a);
  }
  return out;
}

}  // namespace

double occluder_hit_depth(const CameraParams& cam, const PersonRecord& target,
                          const PersonRecord& occluder, double body_radius) {
  const Eigen::Vector3d c = cam.center();
  const Eigen::Vector3d d = Eigen::Vector3d(target.x, target.y, target.body_height) - c;
  const double fx = c.x() - occluder.x, fy = c.y() - occluder.y;
  const double qa = d.x() * d.x() + d.y() * d.y();
  if (qa < 1e-12) return -1.0;
  const double qb = 2.0 * (fx * d.x() + fy * d.y());
  const double qc = fx * fx + fy * fy - body_radius * body_radius;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return -1.0;
  const double root = std::sqrt(disc);
  const double s0 = std::max((-qb - root) / (2.0 * qa), 0.0);
  const double s1 = std::min((-qb + root) / (2.0 * qa), 1.0);
  if (!(s0 < s1)) return -1.0;
  // Segment height is linear in s; clip [s0, s1] to 0 <= z <= body height.
  double lo = s0, hi = s1;
  if (std::abs(d.z()) < 1e-12) {
    if (c.z() < 0.0 || c.z() > occluder.body_height) return -1.0;
  } else {
    double sa = (0.0 - c.z()) / d.z(), sb = (occluder.body_height - c.z()) / d.z();
    if (sa > sb) std::swap(sa, sb);
    lo = std::max(lo, sa);
    hi = std::min(hi, sb);
  }
  if (!(lo < hi)) return -1.0;
  const Eigen::Vector3d hit = c + lo * d;
  return cam.depth({hit.x(), hit.y(), hit.z()});
}

bool is_occluded(const CameraParams& cam, const PersonRecord& target,
                 const std::vector<PersonRecord>& people, double body_radius) {
  for (const PersonRecord& other : people) {
    if (other.person_id == target.person_id) continue;
    if (occluder_hit_depth(cam, target, other, body_radius) > 0.0) return true;
  }
  return false;
}

Scene gen_scene(const SceneConfig& cfg) {
  cfg.validate();
  Scene scene;
  scene.seed = cfg.seed;
  scene.area_x0 = cfg.area_x0;
  scene.area_y0 = cfg.area_y0;
  scene.area_x1 = cfg.area_x1;
  scene.area_y1 = cfg.area_y1;
  scene.cameras = ring_cameras(cfg);

  std::vector<PersonRecord> walkers;
  int next_id = 0;
  for (std::size_t f = 0; f < cfg.n_frames; ++f) {
    auto rng = substream(cfg.seed, kFrameStream, f);
    std::uniform_int_distribution<std::size_t> count_dist(cfg.min_people, cfg.max_people);
    std::uniform_real_distribution<double> ux(cfg.area_x0, cfg.area_x1);
    std::uniform_real_distribution<double> uy(cfg.area_y0, cfg.area_y1);
    std::normal_distribution<double> step(0.0, cfg.walk_step);
    std::normal_distribution<double> height(cfg.height_mean, cfg.height_sd);

    // Existing walkers take one step; blocked or out-of-area steps stay put.
    for (std::size_t i = 0; i < walkers.size(); ++i) {
      const double nx = walkers[i].x + step(rng), ny = walkers[i].y + step(rng);
      if (nx >= cfg.area_x0 && nx < cfg.area_x1 && ny >= cfg.area_y0 && ny < cfg.area_y1 &&
          separated(nx, ny, walkers, i, cfg.min_separation)) {
        walkers[i].x = nx;
        walkers[i].y = ny;
      }
    }
    const std::size_t target = count_dist(rng);
    while (walkers.size() > target) {
      std::uniform_int_distribution<std::size_t> pick(0, walkers.size() - 1);
      walkers.erase(walkers.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
    }
    while (walkers.size() < target) {
      bool placed = false;
      for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        const double x = ux(rng), y = uy(rng);
        if (!separated(x, y, walkers, walkers.size(), cfg.min_separation)) continue;
        PersonRecord p;
        p.person_id = next_id++;
        p.x = x;
        p.y = y;
        p.body_height = std::clamp(height(rng), cfg.height_min, cfg.height_max);
        walkers.push_back(p);
        placed = true;
      }
      if (!placed) throw ConfigError("could not place people without overlap; enlarge the area");
    }

    Frame frame;
    frame.frame_id = static_cast<int>(f);
    frame.people = walkers;
    std::sort(frame.people.begin(), frame.people.end(),
              [](const PersonRecord& a, const PersonRecord& b) { return a.person_id < b.person_id; });
    for (const CameraParams& cam : scene.cameras) {
      frame.annotations.push_back(annotate_view(cam, frame.people, cfg.body_radius));
    }
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

void validate_scene(const Scene& scene) {
  if (scene.cameras.empty()) throw FormatError("scene has no cameras");
  for (const CameraParams& cam : scene.cameras) {
    try {
      cam.validate();
    } catch (const ConfigError& e) {
      throw FormatError(std::string("invalid camera: ") + e.what());
    }
  }
  std::set<int> frame_ids;
  for (const Frame& f : scene.frames) {
    if (!frame_ids.insert(f.frame_id).second) {
      throw FormatError("duplicate frame id " + std::to_string(f.frame_id));
    }
    std::set<int> ids;
    for (const PersonRecord& p : f.people) {
      if (!ids.insert(p.person_id).second) {
        throw FormatError("frame " + std::to_string(f.frame_id) + ": duplicate person id " +
                          std::to_string(p.person_id));
      }
    }
    if (f.annotations.size() != scene.cameras.size()) {
      throw FormatError("frame " + std::to_string(f.frame_id) + ": expected one annotation list per view");
    }
    for (std::size_t v = 0; v < f.annotations.size(); ++v) {
      std::set<int> seen;
      for (const ViewAnnotation& a : f.annotations[v]) {
        if (!seen.insert(a.person_id).second) {
          throw FormatError("frame " + std::to_string(f.frame_id) + ": person " +
                            std::to_string(a.person_id) + " annotated twice in view " + std::to_string(v));
        }
        if (!a.visible) continue;
        auto it = std::find_if(f.people.begin(), f.people.end(),
                               [&](const PersonRecord& p) { return p.person_id == a.person_id; });
        if (it == f.people.end()) {
          throw FormatError("frame " + std::to_string(f.frame_id) + ": annotation for unknown person " +
                            std::to_string(a.person_id));
        }
        const ImagePoint ip = world_to_image(scene.cameras[v], it->head());
        if (!ip.in_front || std::hypot(ip.u - a.u, ip.v - a.v) > 0.5) {
          throw FormatError("frame " + std::to_string(f.frame_id) + ": annotation of person " +
                            std::to_string(a.person_id) + " in view " + std::to_string(v) +
                            " disagrees with the geometry");
        }
      }
    }
  }
}

nlohmann::json camera_to_json(const CameraParams& cam) {
  std::vector<double> K, R;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      K.push_back(cam.K(r, c));
      R.push_back(cam.R(r, c));
    }
  }
  return {{"K", K},
          {"R", R},
          {"t", {cam.t.x(), cam.t.y(), cam.t.z()}},
          {"image_size", {cam.image_size.width, cam.image_size.height}}};
}

CameraParams camera_from_json(const nlohmann::json& j) {
  const auto K = j.at("K").get<std::vector<double>>();
  const auto R = j.at("R").get<std::vector<double>>();
  const auto t = j.at("t").get<std::vector<double>>();
  const auto size = j.at("image_size").get<std::vector<std::size_t>>();
  if (K.size() != 9 || R.size() != 9 || t.size() != 3 || size.size() != 2) {
    throw FormatError("camera entries need 9-element K and R, 3-element t, [width, height]");
  }
  CameraParams cam;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      cam.K(r, c) = K[r * 3 + c];
      cam.R(r, c) = R[r * 3 + c];
    }
  }
  cam.t = Eigen::Vector3d(t[0], t[1], t[2]);
  cam.image_size = {size[0], size[1]};
  return cam;
}

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json cams = nlohmann::json::array();
  for (const auto& c : scene.cameras) cams.push_back(camera_to_json(c));
  nlohmann::json frames = nlohmann::json::array();
  for (const Frame& f : scene.frames) {
    nlohmann::json people = nlohmann::json::array();
    for (const PersonRecord& p : f.people) {
      people.push_back({{"person_id", p.person_id}, {"X", p.x}, {"Y", p.y}, {"body_height", p.body_height}});
    }
    nlohmann::json views = nlohmann::json::array();
    for (const auto& view : f.annotations) {
      nlohmann::json anns = nlohmann::json::array();
      for (const ViewAnnotation& a : view) {
        anns.push_back({{"person_id", a.person_id}, {"u", a.u}, {"v", a.v}, {"visible", a.visible}});
      }
      views.push_back(anns);
    }
    frames.push_back({{"frame_id", f.frame_id}, {"people", people}, {"annotations", views}});
  }
  return {{"schema", kSceneSchema},
          {"seed", scene.seed},
          {"area", {scene.area_x0, scene.area_y0, scene.area_x1, scene.area_y1}},
          {"cameras", cams},
          {"frames", frames}};
}

Scene scene_from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", "") != kSceneSchema) {
      throw FormatError(std::string("expected schema \"") + kSceneSchema + "\"");
    }
    Scene scene;
    scene.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("area")) {
      const auto area = j.at("area").get<std::vector<double>>();
      if (area.size() != 4) throw FormatError("area must be [x0, y0, x1, y1]");
      scene.area_x0 = area[0];
      scene.area_y0 = area[1];
      scene.area_x1 = area[2];
      scene.area_y1 = area[3];
    }
    for (const auto& c : j.at("cameras")) scene.cameras.push_back(camera_from_json(c));
    for (const auto& jf : j.at("frames")) {
      Frame f;
      f.frame_id = jf.at("frame_id").get<int>();
      for (const auto& p : jf.at("people")) {
        f.people.push_back({p.at("person_id").get<int>(), p.at("X").get<double>(), p.at("Y").get<double>(),
                            p.at("body_height").get<double>()});
      }
      for (const auto& view : jf.at("annotations")) {
        std::vector<ViewAnnotation> anns;
        for (const auto& a : view) {
          anns.push_back({a.at("person_id").get<int>(), a.at("u").get<double>(), a.at("v").get<double>(),
                          a.at("visible").get<bool>()});
        }
        f.annotations.push_back(std::move(anns));
      }
      scene.frames.push_back(std::move(f));
    }
    validate_scene(scene);
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene JSON: ") + e.what());
  }
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << scene_to_json(scene).dump(1) << '\n';
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open scene " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene JSON: ") + e.what());
  }
  return scene_from_json(j);
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 1) throw ShapeError("write_pgm expects [1,H,W]");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "P5\n" << image.dim(2) << ' ' << image.dim(1) << "\n255\n";
  for (double v : image.values()) {
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
}

}  // namespace mvc3d
