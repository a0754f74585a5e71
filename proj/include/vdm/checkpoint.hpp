#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "vdm/dynamics.hpp"
#include "vdm/env.hpp"
#include "vdm/envs.hpp"
#include "vdm/features.hpp"
#include "vdm/ppo.hpp"

namespace vdm {

using json = nlohmann::ordered_json;

// Self-describing checkpoint container. Double payloads rely on the JSON
// library's shortest-round-trip serialization, so save/load/save is
// byte-identical and parameters restore bit-exactly.
inline constexpr int kCheckpointVersion = 1;

inline json paramset_to_json(const ParamSet& ps) {
  json j;
  j["step"] = ps.step();
  json entries = json::array();
  for (const auto& e : ps.entries()) {
    json p;
    p["name"] = e.name;
    p["rows"] = e.value.rows;
    p["cols"] = e.value.cols;
    p["value"] = e.value.a;
    p["m"] = e.m.a;
    p["v"] = e.v.a;
    entries.push_back(std::move(p));
  }
  j["entries"] = std::move(entries);
  return j;
}

// Restores into an already-built ParamSet; names and shapes must match the
// architecture descriptor used to rebuild the nets.
inline void paramset_from_json(const json& j, ParamSet& ps) {
  const json& entries = j.at("entries");
  if (entries.size() != static_cast<std::size_t>(ps.count())) {
    throw ConfigError("checkpoint: parameter count mismatch");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = ps.entries()[i];
    const json& p = entries[i];
    if (p.at("name").get<std::string>() != e.name || p.at("rows").get<int>() != e.value.rows ||
        p.at("cols").get<int>() != e.value.cols) {
      throw ConfigError("checkpoint: parameter '" + e.name + "' does not match architecture");
    }
    p.at("value").get_to(e.value.a);
    p.at("m").get_to(e.m.a);
    p.at("v").get_to(e.v.a);
  }
  // restore the shared Adam step counter via a dummy zero-gradient trick is
  // not possible; ParamSet exposes it for checkpoint restore instead
  ps.set_step(j.at("step").get<std::int64_t>());
}

inline json env_params_to_json(const EnvParams& p) {
  json j;
  j["name"] = p.name;
  j["sticky_tau"] = p.sticky_tau;
  j["num_classes"] = p.noisy.num_classes;
  j["style_dim"] = p.noisy.style_dim;
  j["style_std"] = p.noisy.style_std;
  j["episode_len"] = p.noisy.episode_len;
  return j;
}

inline EnvParams env_params_from_json(const json& j) {
  EnvParams p;
  p.name = j.at("name").get<std::string>();
  p.sticky_tau = j.at("sticky_tau").get<double>();
  p.noisy.num_classes = j.at("num_classes").get<int>();
  p.noisy.style_dim = j.at("style_dim").get<int>();
  p.noisy.style_std = j.at("style_std").get<double>();
  p.noisy.episode_len = j.at("episode_len").get<int>();
  return p;
}

inline json normalizer_to_json(const ObsNormalizer& n) {
  json j;
  j["mean"] = n.mean();
  j["std"] = n.std();
  j["count"] = n.count();
  return j;
}

inline ObsNormalizer normalizer_from_json(const json& j) {
  return ObsNormalizer(j.at("mean").get<Vec>(), j.at("std").get<Vec>(),
                       j.at("count").get<std::int64_t>());
}

inline json vdm_config_to_json(const VdmConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["action_dim"] = c.action_dim;
  j["target_dim"] = c.target_dim;
  j["latent_dim"] = c.latent_dim;
  j["hidden"] = c.hidden;
  j["fc_layers"] = c.fc_layers;
  j["res_blocks"] = c.res_blocks;
  j["gen_fc_layers"] = c.gen_fc_layers;
  j["gen_res_blocks"] = c.gen_res_blocks;
  j["skip_connections"] = c.skip_connections;
  j["standard_prior"] = c.standard_prior;
  j["std_floor"] = c.std_floor;
  j["lr"] = c.lr;
  return j;
}

inline VdmConfig vdm_config_from_json(const json& j) {
  VdmConfig c;
  c.input_dim = j.at("input_dim").get<int>();
  c.action_dim = j.at("action_dim").get<int>();
  c.target_dim = j.at("target_dim").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.fc_layers = j.at("fc_layers").get<int>();
  c.res_blocks = j.at("res_blocks").get<int>();
  c.gen_fc_layers = j.at("gen_fc_layers").get<int>();
  c.gen_res_blocks = j.at("gen_res_blocks").get<int>();
  c.skip_connections = j.at("skip_connections").get<bool>();
  c.standard_prior = j.at("standard_prior").get<bool>();
  c.std_floor = j.at("std_floor").get<double>();
  c.lr = j.at("lr").get<double>();
  return c;
}

inline void write_checkpoint(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << j.dump(1) << '\n';
}

inline json read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint: " + path);
  json j = json::parse(in);
  if (!j.contains("version")) throw ConfigError("checkpoint missing version field: " + path);
  int version = j.at("version").get<int>();
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint version " + std::to_string(version) + " unsupported");
  }
  return j;
}

}  // namespace vdm
