#pragma once

#include <memory>
#include <string>

#include "dynfield/dataset.hpp"
#include "dynfield/field.hpp"
#include "dynfield/parallel.hpp"
#include "dynfield/renderer.hpp"

namespace dynfield {

enum class FieldKind { Hexplane, TemporalHash };

inline const char* field_kind_name(FieldKind k) {
  return k == FieldKind::Hexplane ? "hexplane" : "temporal_hash";
}

struct ModelConfig {
  FieldKind kind = FieldKind::Hexplane;
  HexplaneConfig hexplane;       // used when kind == Hexplane
  TemporalHashConfig hash;       // used when kind == TemporalHash
  HexplaneConfig proposal;       // low-resolution proposal field
  RenderConfig render;

  ModelConfig() {
    proposal.base_res = 8;
    proposal.num_scales = 2;
    proposal.features = 4;
    proposal.decoder.hidden_layers = 1;
    proposal.decoder.hidden_width = 32;
  }
};

// A trained (or trainable) radiance field pair: the main 4D field and the
// proposal field guiding fine sample placement.
template <class Real>
struct Model {
  ModelConfig cfg;
  Hexplane<Real> hexplane;
  TemporalHash<Real> hash;
  Hexplane<Real> proposal;

  void build(const ModelConfig& c) {
    cfg = c;
    if (cfg.kind == FieldKind::Hexplane)
      hexplane.build(cfg.hexplane);
    else
      hash.build(cfg.hash);
    proposal.build(cfg.proposal, "proposal");
  }

  void init(uint32_t seed) {
    if (cfg.kind == FieldKind::Hexplane)
      hexplane.init(seed);
    else
      hash.init(seed);
    proposal.init(seed + 1);
  }

  ParamStore<Real>& main_params() {
    return cfg.kind == FieldKind::Hexplane ? hexplane.params : hash.params;
  }
  const ParamStore<Real>& main_params() const {
    return cfg.kind == FieldKind::Hexplane ? hexplane.params : hash.params;
  }

  FieldSample<Real> sample_main(const Vec3<Real>& contracted, Real t,
                                const Vec3<Real>* dir = nullptr) const {
    return cfg.kind == FieldKind::Hexplane ? field_sample<Real>(hexplane, contracted, t, dir)
                                           : field_sample<Real>(hash, contracted, t, dir);
  }

  RayRenderResult<Real, int, int> render(const Ray& ray, Rng64* rng = nullptr) const;
};

// Deterministic full-pass render of one ray (coarse on the proposal field,
// refined fine pass on the main field).
template <class Real>
RayRenderResult<Real, int, int> Model<Real>::render(const Ray& ray, Rng64* rng) const {
  if (cfg.kind == FieldKind::Hexplane) {
    auto r = render_ray<Real>(hexplane, proposal, ray, cfg.render, rng);
    return {r.fine, r.coarse};
  }
  auto r = render_ray<Real>(hash, proposal, ray, cfg.render, rng);
  return {r.fine, r.coarse};
}

// Renders a full camera view at normalized time t (pixel centers, no jitter).
template <class Real>
ImageBuffer render_view(const Model<Real>& model, const CameraModel& cam, double time, double near,
                        double far, int workers = 0) {
  ImageBuffer img(cam.width, cam.height);
  parallel_chunks(workers, cam.height, [&](int, int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        Ray ray = generate_ray(cam, x + 0.5, y + 0.5, time);
        ray.near = near;
        ray.far = far;
        auto out = model.render(ray);
        img.set_pixel(x, y, Vec3f{float(clamp01(out.fine.rgb.x)), float(clamp01(out.fine.rgb.y)),
                                  float(clamp01(out.fine.rgb.z))});
      }
    }
  });
  return img;
}

// Checkpoint: "DFCK" magic, version, JSON architecture header, then the raw
// little-endian f32 parameter arrays (main field, proposal) in declaration
// order. Extension .dfck.
void save_checkpoint(const Model<float>& model, int num_timesteps, const std::string& path);
Model<float> load_checkpoint(const std::string& path, int* num_timesteps = nullptr);

std::string model_config_to_json(const ModelConfig& cfg, int num_timesteps);
ModelConfig model_config_from_json(const std::string& text, int* num_timesteps);

}  // namespace dynfield
