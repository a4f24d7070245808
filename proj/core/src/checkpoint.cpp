#include "modfus/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "modfus/errors.hpp"
#include "wire.hpp"

namespace modfus {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'D', 'F', 'U', 'S', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

nlohmann::json config_to_json(const UNetConfig& c) {
  nlohmann::json j;
  j["down_channels"] = c.down_channels;
  j["up_channels"] = c.up_channels;
  j["in_channels"] = c.in_channels;
  j["kernel_size"] = c.kernel_size;
  j["time_dim"] = c.time_dim;
  j["norm_groups"] = c.norm_groups;
  return j;
}

UNetConfig config_from_json(const nlohmann::json& j) {
  UNetConfig c;
  const auto down = j.at("down_channels").get<std::vector<int>>();
  const auto up = j.at("up_channels").get<std::vector<int>>();
  if (down.size() != 4 || up.size() != 4) {
    throw FormatError("checkpoint: config channel lists must have 4 entries");
  }
  std::copy(down.begin(), down.end(), c.down_channels.begin());
  std::copy(up.begin(), up.end(), c.up_channels.begin());
  c.in_channels = j.at("in_channels").get<int>();
  c.kernel_size = j.at("kernel_size").get<int>();
  c.time_dim = j.at("time_dim").get<int>();
  c.norm_groups = j.at("norm_groups").get<int>();
  return c;
}

struct HeadTensor {
  const char* name;
  std::vector<int> shape;
  std::vector<double>* data;
};

std::vector<HeadTensor> head_tensors(Heads& h) {
  return {
      {"fusion.w", {h.fusion.d_out, h.fusion.d_in}, &h.fusion.w},
      {"fusion.b", {h.fusion.d_out}, &h.fusion.b},
      {"classifier.w", {h.clf.n_classes, h.clf.d}, &h.clf.w},
      {"classifier.b", {h.clf.n_classes}, &h.clf.b},
  };
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  validate(ckpt.params.config);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);

  nlohmann::json header;
  header["config"] = config_to_json(ckpt.params.config);
  header["diffusion"] = {{"schedule", schedule_kind_to_string(ckpt.schedule_kind)},
                         {"total_steps", ckpt.total_steps}};
  header["epoch"] = ckpt.epoch;
  auto tensors = nlohmann::json::array();
  for_each_tensor(ckpt.params, [&](const std::string& name, const std::vector<int>& shape,
                                   const std::vector<float>&) {
    tensors.push_back({{"name", name}, {"shape", shape}});
  });
  header["tensors"] = std::move(tensors);
  if (ckpt.heads) {
    Heads h = *ckpt.heads;
    nlohmann::json jh;
    jh["variant"] = variant_to_string(h.variant);
    jh["t"] = h.t;
    jh["class_names"] = ckpt.class_names;
    auto hts = nlohmann::json::array();
    for (const auto& ht : head_tensors(h)) {
      hts.push_back({{"name", ht.name}, {"shape", ht.shape}});
    }
    jh["tensors"] = std::move(hts);
    header["heads"] = std::move(jh);
  }
  const std::string header_str = header.dump();

  os.write(kMagic, sizeof(kMagic));
  wire::put_u16(os, kVersion);
  wire::put_u32(os, static_cast<std::uint32_t>(header_str.size()));
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for_each_tensor(ckpt.params, [&](const std::string&, const std::vector<int>&,
                                   const std::vector<float>& data) {
    for (float v : data) wire::put_f32(os, v);
  });
  if (ckpt.heads) {
    Heads h = *ckpt.heads;
    for (const auto& ht : head_tensors(h)) {
      for (double v : *ht.data) wire::put_f32(os, static_cast<float>(v));
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open: " + path);

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  const auto version = wire::get_u16(is, "checkpoint");
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto header_len = wire::get_u32(is, "checkpoint");
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), header_len);
  if (!is) throw FormatError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    const UNetConfig config = config_from_json(header.at("config"));
    validate(config);
    ckpt.params = unet_zeros<float>(config);
    ckpt.epoch = header.at("epoch").get<int>();
    const auto& diff = header.at("diffusion");
    ckpt.schedule_kind = schedule_kind_from_string(diff.at("schedule").get<std::string>());
    ckpt.total_steps = diff.at("total_steps").get<int>();

    const auto& tensors = header.at("tensors");
    std::size_t idx = 0;
    for_each_tensor(ckpt.params, [&](const std::string& name, const std::vector<int>& shape,
                                     std::vector<float>& data) {
      if (idx >= tensors.size()) throw FormatError("checkpoint: shape table too short");
      const auto& entry = tensors.at(idx);
      if (entry.at("name").get<std::string>() != name ||
          entry.at("shape").get<std::vector<int>>() != shape) {
        throw FormatError("checkpoint: shape table mismatch at tensor '" + name + "'");
      }
      for (auto& v : data) v = wire::get_f32(is, "checkpoint");
      ++idx;
    });
    if (idx != tensors.size()) throw FormatError("checkpoint: shape table too long");

    if (header.contains("heads")) {
      const auto& jh = header.at("heads");
      Heads h;
      h.variant = variant_from_string(jh.at("variant").get<std::string>());
      h.t = jh.at("t").get<int>();
      ckpt.class_names = jh.at("class_names").get<std::vector<std::string>>();
      const auto& hts = jh.at("tensors");
      if (hts.size() != 4) throw FormatError("checkpoint: heads need 4 tensors");
      auto shape_of = [&](std::size_t k, const char* name) {
        const auto& entry = hts.at(k);
        if (entry.at("name").get<std::string>() != name) {
          throw FormatError("checkpoint: heads tensor order mismatch");
        }
        return entry.at("shape").get<std::vector<int>>();
      };
      const auto fw = shape_of(0, "fusion.w");
      const auto fb = shape_of(1, "fusion.b");
      const auto cw = shape_of(2, "classifier.w");
      const auto cb = shape_of(3, "classifier.b");
      if (fw.size() != 2 || fb.size() != 1 || cw.size() != 2 || cb.size() != 1 ||
          fw[0] != fb[0] || cw[0] != cb[0] || cw[1] != fw[0]) {
        throw FormatError("checkpoint: inconsistent head shapes");
      }
      h.fusion.d_out = fw[0];
      h.fusion.d_in = fw[1];
      h.clf.n_classes = cw[0];
      h.clf.d = cw[1];
      h.fusion.w.resize(static_cast<std::size_t>(fw[0]) * fw[1]);
      h.fusion.b.resize(fb[0]);
      h.clf.w.resize(static_cast<std::size_t>(cw[0]) * cw[1]);
      h.clf.b.resize(cb[0]);
      for (auto* vec : {&h.fusion.w, &h.fusion.b, &h.clf.w, &h.clf.b}) {
        for (auto& v : *vec) v = wire::get_f32(is, "checkpoint");
      }
      if (h.fusion.d_in != variant_dim(ckpt.params.config, h.variant)) {
        throw FormatError("checkpoint: head input dim does not match variant");
      }
      ckpt.heads = std::move(h);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: inconsistent header: ") + e.what());
  }
  return ckpt;
}

}  // namespace modfus
