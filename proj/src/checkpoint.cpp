#include "mvc3d/checkpoint.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "mvc3d/error.hpp"
#include "mvc3d/t3dc.hpp"

namespace mvc3d {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'V', '3', 'D', 'C', 'K', 'P', 'T'};
constexpr const char* kFormat = "mvc3d_checkpoint_v1";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const nlohmann::json& meta) {
  std::string blobs;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : params.entries()) {
    const std::string bytes = t3dc::encode(e.value);
    entries.push_back({{"name", e.name},
                       {"shape", e.value.dims()},
                       {"offset", blobs.size()},
                       {"size", bytes.size()}});
    blobs += bytes;
  }
  const nlohmann::json manifest = {{"format", kFormat}, {"tensors", entries}, {"meta", meta}};
  const std::string text = manifest.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((len >> (8 * i)) & 0xFF));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  os.write(blobs.data(), static_cast<std::streamsize>(blobs.size()));
  if (!os) throw FormatError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  unsigned char lb[4];
  if (!is.read(reinterpret_cast<char*>(lb), 4)) throw FormatError("truncated checkpoint header");
  const std::uint32_t len = lb[0] | (lb[1] << 8) | (lb[2] << 16) | (static_cast<std::uint32_t>(lb[3]) << 24);
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) throw FormatError("truncated checkpoint manifest");
  std::ostringstream rest;
  rest << is.rdbuf();
  const std::string blobs = rest.str();

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }
  if (manifest.value("format", "") != kFormat) throw FormatError("unknown checkpoint format");

  Checkpoint ck;
  ck.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& entry : manifest.at("tensors")) {
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto size = entry.at("size").get<std::size_t>();
    if (offset + size > blobs.size()) throw FormatError("checkpoint blob out of range");
    Tensor t = t3dc::decode(blobs.substr(offset, size));
    if (t.dims() != entry.at("shape").get<Shape>()) throw FormatError("checkpoint shape mismatch");
    t.set_requires_grad(true);
    ck.params.add(entry.at("name").get<std::string>(), t);
  }
  return ck;
}

}  // namespace mvc3d
