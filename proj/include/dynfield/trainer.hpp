#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynfield/dataset.hpp"
#include "dynfield/model.hpp"
#include "dynfield/parallel.hpp"
#include "dynfield/renderer.hpp"
#include "dynfield/sampler.hpp"

namespace dynfield {

// ---------------------------------------------------------------------------
// Losses and regularizers

// Mean squared error over all ray-channels.
template <class Real>
Real photometric_loss(std::span<const Vec3<Real>> pred, std::span<const Vec3<Real>> gt) {
  if (pred.empty() || pred.size() != gt.size())
    throw std::runtime_error("photometric_loss: empty or mismatched batches");
  double acc = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    Vec3<Real> d = pred[i] - gt[i];
    acc += double(d.norm2());
  }
  return Real(acc / (double(pred.size()) * 3.0));
}

template <class Real>
struct RegValues {
  Real tv = 0;  // mean squared difference of adjacent vertices, spatial planes
  Real ts = 0;  // mean squared second difference along t, time planes
};

template <class Real>
RegValues<Real> plane_regularizers(const Hexplane<Real>& field) {
  double tv_sum = 0, ts_sum = 0;
  int64_t tv_count = 0, ts_count = 0;
  for (int s = 0; s < field.cfg.num_scales; ++s) {
    for (int p = 0; p < 6; ++p) {
      PlaneGrid<Real> g = field.plane(s, p);
      int ra = g.res_a, rb = g.res_b, F = g.channels;
      const Real* v = g.values;
      auto at = [&](int i, int j, int k) { return v[(size_t(i) * rb + j) * F + k]; };
      if (!is_time_pair(g.axis_pair)) {
        for (int i = 0; i + 1 < ra; ++i)
          for (int j = 0; j < rb; ++j)
            for (int k = 0; k < F; ++k) {
              double d = double(at(i + 1, j, k)) - double(at(i, j, k));
              tv_sum += d * d;
              ++tv_count;
            }
        for (int i = 0; i < ra; ++i)
          for (int j = 0; j + 1 < rb; ++j)
            for (int k = 0; k < F; ++k) {
              double d = double(at(i, j + 1, k)) - double(at(i, j, k));
              tv_sum += d * d;
              ++tv_count;
            }
      } else {
        // axis b is time
        for (int i = 0; i < ra; ++i)
          for (int j = 1; j + 1 < rb; ++j)
            for (int k = 0; k < F; ++k) {
              double d = double(at(i, j + 1, k)) - 2.0 * double(at(i, j, k)) +
                         double(at(i, j - 1, k));
              ts_sum += d * d;
              ++ts_count;
            }
      }
    }
  }
  RegValues<Real> out;
  out.tv = tv_count ? Real(tv_sum / double(tv_count)) : Real(0);
  out.ts = ts_count ? Real(ts_sum / double(ts_count)) : Real(0);
  return out;
}

// Accumulates d(dtv*tv + dts*ts)/d(plane values) into `grad` (aligned with the
// field's ParamStore).
template <class Real>
void plane_regularizers_backward(const Hexplane<Real>& field, Real dtv, Real dts, Real* grad) {
  int64_t tv_count = 0, ts_count = 0;
  for (int s = 0; s < field.cfg.num_scales; ++s) {
    for (int p = 0; p < 6; ++p) {
      PlaneGrid<Real> g = field.plane(s, p);
      if (!is_time_pair(g.axis_pair)) {
        tv_count += (int64_t(g.res_a - 1) * g.res_b + int64_t(g.res_a) * (g.res_b - 1)) *
                    g.channels;
      } else {
        ts_count += int64_t(g.res_a) * std::max(0, g.res_b - 2) * g.channels;
      }
    }
  }
  for (int s = 0; s < field.cfg.num_scales; ++s) {
    for (int p = 0; p < 6; ++p) {
      PlaneGrid<Real> g = field.plane(s, p);
      int ra = g.res_a, rb = g.res_b, F = g.channels;
      const Real* v = g.values;
      Real* gr = grad + field.plane_offsets[s][p];
      auto idx = [&](int i, int j, int k) { return (size_t(i) * rb + j) * F + k; };
      if (!is_time_pair(g.axis_pair)) {
        if (!tv_count) continue;
        Real c = dtv * 2 / Real(tv_count);
        for (int i = 0; i + 1 < ra; ++i)
          for (int j = 0; j < rb; ++j)
            for (int k = 0; k < F; ++k) {
              Real d = v[idx(i + 1, j, k)] - v[idx(i, j, k)];
              gr[idx(i + 1, j, k)] += c * d;
              gr[idx(i, j, k)] -= c * d;
            }
        for (int i = 0; i < ra; ++i)
          for (int j = 0; j + 1 < rb; ++j)
            for (int k = 0; k < F; ++k) {
              Real d = v[idx(i, j + 1, k)] - v[idx(i, j, k)];
              gr[idx(i, j + 1, k)] += c * d;
              gr[idx(i, j, k)] -= c * d;
            }
      } else {
        if (!ts_count) continue;
        Real c = dts * 2 / Real(ts_count);
        for (int i = 0; i < ra; ++i)
          for (int j = 1; j + 1 < rb; ++j)
            for (int k = 0; k < F; ++k) {
              Real d = v[idx(i, j + 1, k)] - 2 * v[idx(i, j, k)] + v[idx(i, j - 1, k)];
              gr[idx(i, j + 1, k)] += c * d;
              gr[idx(i, j, k)] -= 2 * c * d;
              gr[idx(i, j - 1, k)] += c * d;
            }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Adam

template <class Real>
struct AdamState {
  std::vector<Real> m, v;
  int64_t step = 0;

  void resize(size_t n) {
    m.assign(n, Real(0));
    v.assign(n, Real(0));
    step = 0;
  }
};

// Standard bias-corrected Adam. Throws naming the parameter block when a
// gradient is non-finite.
template <class Real>
void adam_step(Real* params, const Real* grads, size_t n, AdamState<Real>& state, Real lr,
               Real beta1, Real beta2, Real eps, const ParamStore<Real>* blocks = nullptr) {
  if (state.m.size() != n) state.resize(n);
  state.step += 1;
  Real bc1 = 1 - Real(std::pow(double(beta1), double(state.step)));
  Real bc2 = 1 - Real(std::pow(double(beta2), double(state.step)));
  for (size_t i = 0; i < n; ++i) {
    Real g = grads[i];
    if (!std::isfinite(g)) {
      std::string where = blocks ? blocks->block_of(i).name : ("index " + std::to_string(i));
      throw std::runtime_error("non-finite gradient in parameter block " + where);
    }
    state.m[i] = beta1 * state.m[i] + (1 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1 - beta2) * g * g;
    Real mhat = state.m[i] / bc1;
    Real vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

// ---------------------------------------------------------------------------
// Per-ray render pipeline with a recorded tape for reverse-mode gradients.
//
// The coarse pass runs on the proposal field; fine positions are drawn from
// the coarse weights, merged with the coarse midpoints, and evaluated on the
// main field. Fine sample positions are treated as constants of the recorded
// graph (placement gradients are not propagated); the proposal field learns
// from its own coarse photometric term.

template <class Real, class MainT>
class RayPipeline {
 public:
  void setup(const MainT* main, const Hexplane<Real>* proposal, const RenderConfig& render) {
    main_ = main;
    proposal_ = proposal;
    render_ = render;
    nc_ = render.n_coarse;
    nf_ = render.n_fine;
    nm_ = nc_ + nf_;

    c_edges_.resize(nc_ + 1);
    c_mids_.resize(nc_);
    c_weights_.resize(nc_);
    c_sigma_.resize(nc_);
    c_rgb_.resize(nc_);
    p_feat_r_.resize(size_t(nc_) * proposal->tape_real_size());
    p_feat_i_.resize(size_t(nc_) * proposal->tape_int_size());
    p_dec_.resize(size_t(nc_) * proposal->decoder.tape_size());

    resampled_.resize(nf_);
    f_pos_.resize(nm_);
    f_sigma_.resize(nm_);
    f_rgb_.resize(nm_);
    m_feat_r_.resize(size_t(nm_) * main->tape_real_size());
    m_feat_i_.resize(size_t(nm_) * main->tape_int_size());
    m_dec_.resize(size_t(nm_) * main->decoder.tape_size());

    dsigma_.resize(nm_);
    drgb_.resize(nm_);
  }

  // When `frozen` is true the fine positions recorded by the previous
  // unfrozen call are reused, which pins the differentiated graph for
  // finite-difference checks.
  void forward(const Ray& ray, Rng64* rng, Vec3<Real>& fine_rgb, Vec3<Real>& coarse_rgb,
               bool frozen = false) {
    origin_ = Vec3<Real>(ray.origin);
    dir_ = Vec3<Real>(ray.direction);
    time_ = Real(ray.time);
    far_ = Real(ray.far);

    stratified_samples<Real>(origin_, dir_, Real(ray.near), far_, nc_, rng, c_edges_.data(),
                             c_mids_.data());
    for (int i = 0; i < nc_; ++i) {
      Vec3<Real> p = contract<Real>(origin_ + dir_ * c_mids_[i]);
      Real feat[256];
      proposal_->features_tape(p, time_, feat,
                               p_feat_r_.data() + size_t(i) * proposal_->tape_real_size(),
                               p_feat_i_.data() + size_t(i) * proposal_->tape_int_size());
      FieldSample<Real> s;
      proposal_->decoder.forward(proposal_->params.data(), feat, nullptr,
                                 p_dec_.data() + size_t(i) * proposal_->decoder.tape_size(), s);
      c_sigma_[i] = s.sigma;
      c_rgb_[i] = s.rgb;
    }
    RenderOutput<Real> coarse;
    composite<Real>(c_mids_.data(), c_sigma_.data(), c_rgb_.data(), nc_, far_,
                    Vec3<Real>(render_.background), coarse, c_weights_.data());
    coarse_rgb = coarse.rgb;
    coarse_rgb_ = coarse.rgb;

    if (!frozen) {
      pdf_resample<Real>(c_weights_.data(), c_edges_.data(), nc_, nf_, rng, resampled_.data());
      std::merge(c_mids_.begin(), c_mids_.end(), resampled_.begin(), resampled_.end(),
                 f_pos_.begin());
    }

    Vec3<Real> view = dir_;
    for (int i = 0; i < nm_; ++i) {
      Vec3<Real> p = contract<Real>(origin_ + dir_ * f_pos_[i]);
      Real feat[256];
      main_->features_tape(p, time_, feat, m_feat_r_.data() + size_t(i) * main_->tape_real_size(),
                           m_feat_i_.data() + size_t(i) * main_->tape_int_size());
      FieldSample<Real> s;
      main_->decoder.forward(main_->params.data(), feat, &view,
                             m_dec_.data() + size_t(i) * main_->decoder.tape_size(), s);
      f_sigma_[i] = s.sigma;
      f_rgb_[i] = s.rgb;
    }
    RenderOutput<Real> fine;
    composite<Real>(f_pos_.data(), f_sigma_.data(), f_rgb_.data(), nm_, far_,
                    Vec3<Real>(render_.background), fine, nullptr);
    fine_rgb = fine.rgb;
    fine_rgb_ = fine.rgb;
  }

  // Accumulates gradients of dfine . fine_rgb + dcoarse . coarse_rgb into the
  // per-field gradient buffers. Must follow a forward() on the same ray.
  void backward(const Vec3<Real>& dfine, const Vec3<Real>& dcoarse, Real* grad_main,
                Real* grad_proposal) {
    Real dfeat[256];
    // fine pass -> main field
    composite_backward<Real>(f_pos_.data(), f_sigma_.data(), f_rgb_.data(), nm_, far_,
                             Vec3<Real>(render_.background), dfine, dsigma_.data(), drgb_.data());
    for (int i = 0; i < nm_; ++i) {
      FieldSample<Real> out{f_sigma_[i], f_rgb_[i]};
      main_->decoder.backward(main_->params.data(),
                              m_dec_.data() + size_t(i) * main_->decoder.tape_size(), out,
                              dsigma_[i], drgb_[i], grad_main, dfeat);
      main_->features_backward(m_feat_r_.data() + size_t(i) * main_->tape_real_size(),
                               m_feat_i_.data() + size_t(i) * main_->tape_int_size(), dfeat,
                               grad_main);
    }
    // coarse pass -> proposal field
    composite_backward<Real>(c_mids_.data(), c_sigma_.data(), c_rgb_.data(), nc_, far_,
                             Vec3<Real>(render_.background), dcoarse, dsigma_.data(),
                             drgb_.data());
    for (int i = 0; i < nc_; ++i) {
      FieldSample<Real> out{c_sigma_[i], c_rgb_[i]};
      proposal_->decoder.backward(proposal_->params.data(),
                                  p_dec_.data() + size_t(i) * proposal_->decoder.tape_size(), out,
                                  dsigma_[i], drgb_[i], grad_proposal, dfeat);
      proposal_->features_backward(p_feat_r_.data() + size_t(i) * proposal_->tape_real_size(),
                                   p_feat_i_.data() + size_t(i) * proposal_->tape_int_size(),
                                   dfeat, grad_proposal);
    }
  }

  const Vec3<Real>& fine_rgb() const { return fine_rgb_; }
  const Vec3<Real>& coarse_rgb() const { return coarse_rgb_; }

 private:
  const MainT* main_ = nullptr;
  const Hexplane<Real>* proposal_ = nullptr;
  RenderConfig render_;
  int nc_ = 0, nf_ = 0, nm_ = 0;

  Vec3<Real> origin_, dir_;
  Real time_ = 0, far_ = 0;
  Vec3<Real> fine_rgb_, coarse_rgb_;

  std::vector<Real> c_edges_, c_mids_, c_weights_, c_sigma_;
  std::vector<Vec3<Real>> c_rgb_;
  std::vector<Real> p_feat_r_, p_dec_;
  std::vector<int32_t> p_feat_i_;
  std::vector<Real> resampled_, f_pos_, f_sigma_;
  std::vector<Vec3<Real>> f_rgb_;
  std::vector<Real> m_feat_r_, m_dec_;
  std::vector<int32_t> m_feat_i_;
  std::vector<Real> dsigma_;
  std::vector<Vec3<Real>> drgb_;
};

// ---------------------------------------------------------------------------
// Training configuration and loop

struct FieldSettings {
  FieldKind kind = FieldKind::Hexplane;
  int base_res = 16;
  int num_scales = 3;
  int features = 8;
  int time_res = 0;  // 0: num_timesteps (min 2)
  int hash_levels = 4;
  int hash_base_res = 16;
  int hash_log2_table = 15;
  int hash_window = 2;
  int hash_time_positions = 0;  // 0: num_timesteps
};

struct TrainConfig {
  int iterations = 2000;
  int rays_per_batch = 1024;
  double lr = 1e-2;
  double lr_final = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-15;
  double lambda_tv = 1e-4;
  double lambda_ts = 1e-4;
  std::string sampler = "uniform";  // "uniform" | "isg"
  double isg_gamma = 0.05;
  double isg_floor = 1e-3;
  uint32_t seed = 0;
  int workers = 0;  // 0: hardware concurrency
  FieldSettings field;
  DecoderConfig decoder;
  HexplaneConfig proposal = [] {
    HexplaneConfig p;
    p.base_res = 8;
    p.num_scales = 2;
    p.features = 4;
    p.decoder.hidden_layers = 1;
    p.decoder.hidden_width = 32;
    return p;
  }();
  RenderConfig render;
  std::optional<Vec3f> background;  // overrides the dataset's recorded sky
  int log_interval = 50;
  int checkpoint_interval = 0;  // 0: only at the end

  // Training settings at the scale reported for the reference pipeline:
  // 30,000 Adam iterations at learning rate 1e-2, K-Planes scales 2^6..2^11,
  // NeRFPlayer hash table 2^20 with 64 time positions.
  static TrainConfig paper_defaults() {
    TrainConfig cfg;
    cfg.iterations = 30000;
    cfg.lr = 1e-2;
    cfg.field.base_res = 64;
    cfg.field.num_scales = 6;
    cfg.field.hash_log2_table = 20;
    cfg.field.hash_time_positions = 64;
    return cfg;
  }

  ModelConfig model_config(const DynamicDataset& ds) const {
    ModelConfig mc;
    mc.kind = field.kind;
    mc.hexplane.base_res = field.base_res;
    mc.hexplane.num_scales = field.num_scales;
    mc.hexplane.features = field.features;
    mc.hexplane.time_res =
        field.time_res > 0 ? field.time_res : std::max(2, ds.num_timesteps);
    mc.hexplane.decoder = decoder;
    mc.hash.levels = field.hash_levels;
    mc.hash.base_res = field.hash_base_res;
    mc.hash.log2_table = field.hash_log2_table;
    mc.hash.window = field.hash_window;
    mc.hash.time_positions =
        field.hash_time_positions > 0 ? field.hash_time_positions : ds.num_timesteps;
    mc.hash.decoder = decoder;
    mc.proposal = proposal;
    mc.proposal.time_res = mc.hexplane.time_res;
    mc.render = render;
    if (background)
      mc.render.background = *background;
    else if (ds.background)
      mc.render.background = *ds.background;
    return mc;
  }
};

struct TrainLogEntry {
  int iteration = 0;
  double loss = 0;         // fine photometric
  double loss_coarse = 0;  // proposal photometric
  double tv = 0;
  double ts = 0;
  double elapsed_s = 0;
};

struct TrainResult {
  Model<float> model;
  std::vector<TrainLogEntry> log;
  int num_timesteps = 1;
};

TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

// Full optimization loop: sample batch -> render -> loss -> backprop -> Adam.
// Deterministic for a fixed (seed, worker count); batch composition and ray
// jitter streams do not depend on the worker count at all.
TrainResult train(const DynamicDataset& ds, const TrainConfig& cfg,
                  const std::string& log_path = "", const std::string& checkpoint_dir = "");

}  // namespace dynfield
