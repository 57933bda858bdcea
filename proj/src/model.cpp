#include "dynfield/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace dynfield {

namespace {

json decoder_to_json(const DecoderConfig& d) {
  return {{"hidden_layers", d.hidden_layers},
          {"hidden_width", d.hidden_width},
          {"sh_degree", d.sh_degree}};
}

DecoderConfig decoder_from_json(const json& j) {
  DecoderConfig d;
  d.hidden_layers = j.at("hidden_layers");
  d.hidden_width = j.at("hidden_width");
  d.sh_degree = j.at("sh_degree");
  return d;
}

json hexplane_to_json(const HexplaneConfig& h) {
  return {{"base_res", h.base_res},
          {"num_scales", h.num_scales},
          {"features", h.features},
          {"time_res", h.time_res},
          {"decoder", decoder_to_json(h.decoder)}};
}

HexplaneConfig hexplane_from_json(const json& j) {
  HexplaneConfig h;
  h.base_res = j.at("base_res");
  h.num_scales = j.at("num_scales");
  h.features = j.at("features");
  h.time_res = j.at("time_res");
  h.decoder = decoder_from_json(j.at("decoder"));
  return h;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg, int num_timesteps) {
  json doc;
  doc["field_kind"] = field_kind_name(cfg.kind);
  doc["hexplane"] = hexplane_to_json(cfg.hexplane);
  doc["hash"] = {{"levels", cfg.hash.levels},
                 {"base_res", cfg.hash.base_res},
                 {"log2_table", cfg.hash.log2_table},
                 {"window", cfg.hash.window},
                 {"time_positions", cfg.hash.time_positions},
                 {"decoder", decoder_to_json(cfg.hash.decoder)}};
  doc["proposal"] = hexplane_to_json(cfg.proposal);
  doc["render"] = {{"n_coarse", cfg.render.n_coarse},
                   {"n_fine", cfg.render.n_fine},
                   {"near", cfg.render.near},
                   {"far", cfg.render.far},
                   {"background",
                    {cfg.render.background.x, cfg.render.background.y, cfg.render.background.z}}};
  doc["num_timesteps"] = num_timesteps;
  return doc.dump();
}

ModelConfig model_config_from_json(const std::string& text, int* num_timesteps) {
  json doc = json::parse(text);
  ModelConfig cfg;
  std::string kind = doc.at("field_kind");
  if (kind == "hexplane")
    cfg.kind = FieldKind::Hexplane;
  else if (kind == "temporal_hash")
    cfg.kind = FieldKind::TemporalHash;
  else
    throw std::runtime_error("unknown field kind: " + kind);
  cfg.hexplane = hexplane_from_json(doc.at("hexplane"));
  const json& jh = doc.at("hash");
  cfg.hash.levels = jh.at("levels");
  cfg.hash.base_res = jh.at("base_res");
  cfg.hash.log2_table = jh.at("log2_table");
  cfg.hash.window = jh.at("window");
  cfg.hash.time_positions = jh.at("time_positions");
  cfg.hash.decoder = decoder_from_json(jh.at("decoder"));
  cfg.proposal = hexplane_from_json(doc.at("proposal"));
  const json& jr = doc.at("render");
  cfg.render.n_coarse = jr.at("n_coarse");
  cfg.render.n_fine = jr.at("n_fine");
  cfg.render.near = jr.at("near");
  cfg.render.far = jr.at("far");
  cfg.render.background = {jr.at("background").at(0), jr.at("background").at(1),
                           jr.at("background").at(2)};
  if (num_timesteps) *num_timesteps = doc.at("num_timesteps");
  return cfg;
}

void save_checkpoint(const Model<float>& model, int num_timesteps, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);

  std::string header = model_config_to_json(model.cfg, num_timesteps);
  const char magic[4] = {'D', 'F', 'C', 'K'};
  uint32_t version = 1;
  uint64_t header_len = header.size();
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header.data(), header.size());

  auto write_params = [&out](const ParamStore<float>& store) {
    uint64_t n = store.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(store.data()), n * sizeof(float));
  };
  write_params(model.main_params());
  write_params(model.proposal.params);
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

Model<float> load_checkpoint(const std::string& path, int* num_timesteps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[4];
  uint32_t version = 0;
  uint64_t header_len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, "DFCK", 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  if (version != 1) throw std::runtime_error("unsupported checkpoint version in " + path);

  std::string header(header_len, '\0');
  in.read(header.data(), std::streamsize(header_len));

  int T = 0;
  ModelConfig cfg = model_config_from_json(header, &T);
  Model<float> model;
  model.build(cfg);

  auto read_params = [&in, &path](ParamStore<float>& store) {
    uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (n != store.size())
      throw std::runtime_error("checkpoint parameter count mismatch in " + path);
    in.read(reinterpret_cast<char*>(store.data()), std::streamsize(n * sizeof(float)));
  };
  read_params(model.main_params());
  read_params(model.proposal.params);
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  if (num_timesteps) *num_timesteps = T;
  return model;
}

}  // namespace dynfield
