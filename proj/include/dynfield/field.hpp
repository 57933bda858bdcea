#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynfield/vec.hpp"

namespace dynfield {

template <class Real>
struct FieldSample {
  Real sigma = 0;       // density per unit length, >= 0
  Vec3<Real> rgb;       // in [0,1]^3
};

struct ParamBlock {
  std::string name;
  size_t offset = 0;
  size_t size = 0;
};

template <class Real>
struct ParamStore {
  std::vector<Real> values;
  std::vector<ParamBlock> blocks;

  size_t add_block(const std::string& name, size_t n) {
    size_t offset = values.size();
    values.resize(offset + n, Real(0));
    blocks.push_back({name, offset, n});
    return offset;
  }
  const ParamBlock& block_of(size_t param_index) const {
    for (const auto& b : blocks)
      if (param_index >= b.offset && param_index < b.offset + b.size) return b;
    throw std::out_of_range("parameter index outside all blocks");
  }
  size_t size() const { return values.size(); }
  Real* data() { return values.data(); }
  const Real* data() const { return values.data(); }
};

enum class AxisPair { XY = 0, XZ, YZ, XT, YT, ZT };
inline bool is_time_pair(AxisPair p) { return int(p) >= int(AxisPair::XT); }
inline const char* axis_pair_name(AxisPair p) {
  static const char* names[] = {"xy", "xz", "yz", "xt", "yt", "zt"};
  return names[int(p)];
}

// Non-owning view of one feature plane: res_a x res_b vertices, `channels`
// features per vertex, laid out [a][b][channel].
template <class Real>
struct PlaneGrid {
  AxisPair axis_pair = AxisPair::XY;
  int res_a = 0;
  int res_b = 0;
  int channels = 0;
  const Real* values = nullptr;

  size_t size() const { return size_t(res_a) * res_b * channels; }
  const Real* vertex(int ia, int ib) const {
    return values + (size_t(ia) * res_b + ib) * channels;
  }
};

template <class Real>
struct BilinearCtx {
  int32_t ia = 0, ib = 0;  // lower vertex
  Real fa = 0, fb = 0;     // fractional weights toward the upper vertex
};

// Maps u in [0,1] onto a vertex grid of `res` points; clamps outside input.
template <class Real>
inline void grid_locate(Real u, int res, int32_t& i0, Real& frac) {
  Real x = clamp01(u) * Real(res - 1);
  int32_t i = int32_t(x);
  if (i > res - 2) i = res - 2;
  i0 = i;
  frac = x - Real(i);
}

template <class Real>
inline BilinearCtx<Real> bilinear_locate(const PlaneGrid<Real>& plane, Real u, Real v) {
  BilinearCtx<Real> ctx;
  grid_locate(u, plane.res_a, ctx.ia, ctx.fa);
  grid_locate(v, plane.res_b, ctx.ib, ctx.fb);
  return ctx;
}

template <class Real>
inline void bilinear_gather(const PlaneGrid<Real>& plane, const BilinearCtx<Real>& ctx, Real* out) {
  const Real* f00 = plane.vertex(ctx.ia, ctx.ib);
  const Real* f01 = plane.vertex(ctx.ia, ctx.ib + 1);
  const Real* f10 = plane.vertex(ctx.ia + 1, ctx.ib);
  const Real* f11 = plane.vertex(ctx.ia + 1, ctx.ib + 1);
  Real w00 = (1 - ctx.fa) * (1 - ctx.fb);
  Real w01 = (1 - ctx.fa) * ctx.fb;
  Real w10 = ctx.fa * (1 - ctx.fb);
  Real w11 = ctx.fa * ctx.fb;
  for (int k = 0; k < plane.channels; ++k)
    out[k] = w00 * f00[k] + w01 * f01[k] + w10 * f10[k] + w11 * f11[k];
}

// Bilinear interpolation of the 4 surrounding vertex features; exact at
// vertices, inputs clamped to [0,1].
template <class Real>
inline void bilinear_sample(const PlaneGrid<Real>& plane, Real u, Real v, Real* out) {
  bilinear_gather(plane, bilinear_locate(plane, u, v), out);
}

// Scatters d(output)/d(vertex) * dout into a gradient buffer aligned with the
// plane's storage.
template <class Real>
inline void bilinear_backward(const PlaneGrid<Real>& plane, const BilinearCtx<Real>& ctx,
                              const Real* dout, Real* grad_plane) {
  Real w00 = (1 - ctx.fa) * (1 - ctx.fb);
  Real w01 = (1 - ctx.fa) * ctx.fb;
  Real w10 = ctx.fa * (1 - ctx.fb);
  Real w11 = ctx.fa * ctx.fb;
  size_t s00 = (size_t(ctx.ia) * plane.res_b + ctx.ib) * plane.channels;
  size_t s01 = s00 + plane.channels;
  size_t s10 = s00 + size_t(plane.res_b) * plane.channels;
  size_t s11 = s10 + plane.channels;
  for (int k = 0; k < plane.channels; ++k) {
    Real d = dout[k];
    grad_plane[s00 + k] += w00 * d;
    grad_plane[s01 + k] += w01 * d;
    grad_plane[s10 + k] += w10 * d;
    grad_plane[s11 + k] += w11 * d;
  }
}

// Degree-2 real spherical harmonics basis (9 values).
template <class Real>
inline void eval_sh2(const Vec3<Real>& d, Real* out) {
  Real x = d.x, y = d.y, z = d.z;
  out[0] = Real(0.28209479177387814);
  out[1] = Real(-0.48860251190291987) * y;
  out[2] = Real(0.48860251190291987) * z;
  out[3] = Real(-0.48860251190291987) * x;
  out[4] = Real(1.0925484305920792) * x * y;
  out[5] = Real(-1.0925484305920792) * y * z;
  out[6] = Real(0.31539156525252005) * (3 * z * z - 1);
  out[7] = Real(-1.0925484305920792) * x * z;
  out[8] = Real(0.5462742152960396) * (x * x - y * y);
}

inline int sh_dim(int degree) { return degree > 0 ? (degree + 1) * (degree + 1) : 0; }

struct DecoderConfig {
  int hidden_layers = 2;
  int hidden_width = 64;
  int sh_degree = 0;  // 0 disables view dependence; 2 appends 9 SH values
};

// smooth ReLU-like rectifier, (x + sqrt(x^2+4))/2; keeps finite-difference
// gradient checks free of kink crossings
template <class Real>
inline Real squareplus(Real x, Real& deriv) {
  Real r = std::sqrt(x * x + 4);
  deriv = Real(0.5) * (1 + x / r);
  return Real(0.5) * (x + r);
}

template <class Real>
inline Real softplus(Real x) {
  // log(1+e^x), stable on both tails
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class Real>
inline Real sigmoid(Real x) {
  return x > 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x));
}

// Shallow perceptron decoding features into (density, color); density through
// softplus, color through sigmoid. Weights live in an external ParamStore.
template <class Real>
struct DecoderMLP {
  DecoderConfig cfg;
  int feature_dim = 0;  // encoder features, before any SH append
  int in_dim = 0;
  static constexpr int kOutDim = 4;
  std::vector<size_t> w_offsets, b_offsets;  // per layer, hidden then output

  int num_layers() const { return cfg.hidden_layers + 1; }
  int layer_in(int l) const { return l == 0 ? in_dim : cfg.hidden_width; }
  int layer_out(int l) const { return l == cfg.hidden_layers ? kOutDim : cfg.hidden_width; }

  void build(ParamStore<Real>& params, int feat_dim, const DecoderConfig& c,
             const std::string& prefix) {
    cfg = c;
    feature_dim = feat_dim;
    in_dim = feat_dim + sh_dim(cfg.sh_degree);
    if (in_dim > 512 || cfg.hidden_width > 256)
      throw std::runtime_error("decoder dimensions exceed fixed workspace limits (512/256)");
    w_offsets.clear();
    b_offsets.clear();
    for (int l = 0; l < num_layers(); ++l) {
      std::string tag = prefix + ".layer" + std::to_string(l);
      w_offsets.push_back(params.add_block(tag + ".weight", size_t(layer_out(l)) * layer_in(l)));
      b_offsets.push_back(params.add_block(tag + ".bias", layer_out(l)));
    }
  }

  void init(Real* params, std::mt19937& rng) const {
    for (int l = 0; l < num_layers(); ++l) {
      Real bound = Real(std::sqrt(6.0 / layer_in(l)));
      std::uniform_real_distribution<double> dist(-double(bound), double(bound));
      Real* w = params + w_offsets[l];
      for (size_t i = 0; i < size_t(layer_out(l)) * layer_in(l); ++i) w[i] = Real(dist(rng));
      Real* b = params + b_offsets[l];
      for (int i = 0; i < layer_out(l); ++i) b[i] = 0;
    }
  }

  // Tape layout (reals): input(in_dim) | per hidden layer: act(h) + dact(h) |
  // density sigmoid (1).
  int tape_size() const { return in_dim + 2 * cfg.hidden_layers * cfg.hidden_width + 1; }

  // `input` holds feature_dim values; the SH basis of `dir` is appended when
  // enabled. `tape` may be null for inference.
  void forward(const Real* params, const Real* features, const Vec3<Real>* dir, Real* tape,
               FieldSample<Real>& out) const {
    Real in_buf[512];
    Real h_buf[2][256];
    for (int i = 0; i < feature_dim; ++i) in_buf[i] = features[i];
    if (cfg.sh_degree > 0) {
      Vec3<Real> d = dir ? *dir : Vec3<Real>{0, 0, 1};
      eval_sh2(d, in_buf + feature_dim);
    }
    Real* tp = tape;
    if (tp) {
      for (int i = 0; i < in_dim; ++i) tp[i] = in_buf[i];
      tp += in_dim;
    }

    const Real* x = in_buf;
    for (int l = 0; l < cfg.hidden_layers; ++l) {
      const Real* w = params + w_offsets[l];
      const Real* b = params + b_offsets[l];
      Real* h = h_buf[l & 1];
      int n_in = layer_in(l);
      for (int o = 0; o < cfg.hidden_width; ++o) {
        Real acc = b[o];
        const Real* wrow = w + size_t(o) * n_in;
        for (int i = 0; i < n_in; ++i) acc += wrow[i] * x[i];
        Real deriv;
        h[o] = squareplus(acc, deriv);
        if (tp) {
          tp[o] = h[o];
          tp[cfg.hidden_width + o] = deriv;
        }
      }
      if (tp) tp += 2 * cfg.hidden_width;
      x = h;
    }

    int l = cfg.hidden_layers;
    const Real* w = params + w_offsets[l];
    const Real* b = params + b_offsets[l];
    int n_in = layer_in(l);
    Real logits[kOutDim];
    for (int o = 0; o < kOutDim; ++o) {
      Real acc = b[o];
      const Real* wrow = w + size_t(o) * n_in;
      for (int i = 0; i < n_in; ++i) acc += wrow[i] * x[i];
      logits[o] = acc;
    }
    Real dsig = sigmoid(logits[0]);
    out.sigma = softplus(logits[0]);
    out.rgb = {sigmoid(logits[1]), sigmoid(logits[2]), sigmoid(logits[3])};
    if (tp) tp[0] = dsig;
  }

  // Accumulates parameter gradients and returns d(loss)/d(features) in
  // dfeatures (length feature_dim; SH inputs receive no gradient).
  void backward(const Real* params, const Real* tape, const FieldSample<Real>& out, Real dsigma,
                const Vec3<Real>& drgb, Real* grad, Real* dfeatures) const {
    const Real* tape_in = tape;
    const Real* tape_hidden = tape + in_dim;
    Real dsig_density = tape[tape_size() - 1];

    Real dlogits[kOutDim];
    dlogits[0] = dsigma * dsig_density;
    Real drgb_arr[3] = {drgb.x, drgb.y, drgb.z};
    for (int c = 0; c < 3; ++c) {
      Real s = out.rgb[c];
      dlogits[1 + c] = drgb_arr[c] * s * (1 - s);
    }

    Real dx_buf[2][256];
    int l = cfg.hidden_layers;
    {
      const Real* x = l == 0 ? tape_in : tape_hidden + (l - 1) * 2 * cfg.hidden_width;
      int n_in = layer_in(l);
      const Real* w = params + w_offsets[l];
      Real* gw = grad + w_offsets[l];
      Real* gb = grad + b_offsets[l];
      Real* dx = dx_buf[0];
      for (int i = 0; i < n_in; ++i) dx[i] = 0;
      for (int o = 0; o < kOutDim; ++o) {
        Real d = dlogits[o];
        gb[o] += d;
        const Real* wrow = w + size_t(o) * n_in;
        Real* gwrow = gw + size_t(o) * n_in;
        for (int i = 0; i < n_in; ++i) {
          gwrow[i] += d * x[i];
          dx[i] += d * wrow[i];
        }
      }
    }

    for (int l2 = cfg.hidden_layers - 1; l2 >= 0; --l2) {
      const Real* layer_tape = tape_hidden + l2 * 2 * cfg.hidden_width;
      const Real* dact = layer_tape + cfg.hidden_width;
      const Real* x = l2 == 0 ? tape_in : tape_hidden + (l2 - 1) * 2 * cfg.hidden_width;
      int n_in = layer_in(l2);
      const Real* w = params + w_offsets[l2];
      Real* gw = grad + w_offsets[l2];
      Real* gb = grad + b_offsets[l2];
      Real* dh = dx_buf[(cfg.hidden_layers - 1 - l2) & 1];
      Real* dx = dx_buf[(cfg.hidden_layers - l2) & 1];
      for (int i = 0; i < n_in; ++i) dx[i] = 0;
      for (int o = 0; o < cfg.hidden_width; ++o) {
        Real d = dh[o] * dact[o];
        gb[o] += d;
        const Real* wrow = w + size_t(o) * n_in;
        Real* gwrow = gw + size_t(o) * n_in;
        for (int i = 0; i < n_in; ++i) {
          gwrow[i] += d * x[i];
          dx[i] += d * wrow[i];
        }
      }
    }

    const Real* dx = dx_buf[cfg.hidden_layers & 1];
    for (int i = 0; i < feature_dim; ++i) dfeatures[i] = dx[i];
  }
};

// ---------------------------------------------------------------------------
// Hexplane field: six feature planes per scale, combined by elementwise
// product within a scale and concatenated across scales.

struct HexplaneConfig {
  int base_res = 16;
  int num_scales = 3;     // spatial resolutions base_res * 2^s
  int features = 8;       // per scale
  int time_res = 8;       // vertices along the time axis (>= 2)
  DecoderConfig decoder;

  int feature_dim() const { return features * num_scales; }
};

template <class Real>
struct Hexplane {
  HexplaneConfig cfg;
  ParamStore<Real> params;
  std::vector<std::array<size_t, 6>> plane_offsets;  // [scale][pair]
  DecoderMLP<Real> decoder;

  static constexpr const char* kKind = "hexplane";

  void build(const HexplaneConfig& c, const std::string& prefix = "hexplane") {
    cfg = c;
    if (cfg.time_res < 2) throw std::runtime_error("hexplane time_res must be >= 2");
    plane_offsets.clear();
    for (int s = 0; s < cfg.num_scales; ++s) {
      std::array<size_t, 6> offs{};
      int r = spatial_res(s);
      for (int p = 0; p < 6; ++p) {
        AxisPair pair = AxisPair(p);
        int rb = is_time_pair(pair) ? cfg.time_res : r;
        std::string name = prefix + ".s" + std::to_string(s) + "." + axis_pair_name(pair);
        offs[p] = params.add_block(name, size_t(r) * rb * cfg.features);
      }
      plane_offsets.push_back(offs);
    }
    decoder.build(params, cfg.feature_dim(), cfg.decoder, prefix + ".decoder");
  }

  int spatial_res(int scale) const { return cfg.base_res << scale; }

  PlaneGrid<Real> plane(int scale, int p) const {
    AxisPair pair = AxisPair(p);
    PlaneGrid<Real> g;
    g.axis_pair = pair;
    g.res_a = spatial_res(scale);
    g.res_b = is_time_pair(pair) ? cfg.time_res : spatial_res(scale);
    g.channels = cfg.features;
    g.values = params.data() + plane_offsets[scale][p];
    return g;
  }

  // Spatial planes uniform in (-0.1, 0.1); time-involving planes start at the
  // multiplicative identity so the initial field is static in t.
  void init(uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (int s = 0; s < cfg.num_scales; ++s) {
      for (int p = 0; p < 6; ++p) {
        PlaneGrid<Real> g = plane(s, p);
        Real* v = params.data() + plane_offsets[s][p];
        if (is_time_pair(g.axis_pair))
          for (size_t i = 0; i < g.size(); ++i) v[i] = Real(1);
        else
          for (size_t i = 0; i < g.size(); ++i) v[i] = Real(dist(rng));
      }
    }
    decoder.init(params.data(), rng);
  }

  int feature_dim() const { return cfg.feature_dim(); }

  // (u_x, u_y, u_z, t) plane coordinates from a contracted position.
  static inline void plane_coords(const Vec3<Real>& c, Real t, Real* u) {
    u[0] = (c.x + 2) * Real(0.25);
    u[1] = (c.y + 2) * Real(0.25);
    u[2] = (c.z + 2) * Real(0.25);
    u[3] = t;
  }
  static inline void pair_axes(AxisPair p, int& a, int& b) {
    static const int axes[6][2] = {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}};
    a = axes[int(p)][0];
    b = axes[int(p)][1];
  }

  // Per scale the six planes' bilinear samples multiply elementwise; scales
  // concatenate. `c` is a contracted position in [-2,2]^3, t in [0,1].
  void features(const Vec3<Real>& c, Real t, Real* out) const {
    Real u[4];
    plane_coords(c, t, u);
    Real b_buf[64];
    for (int s = 0; s < cfg.num_scales; ++s) {
      Real* f = out + s * cfg.features;
      for (int k = 0; k < cfg.features; ++k) f[k] = Real(1);
      for (int p = 0; p < 6; ++p) {
        PlaneGrid<Real> g = plane(s, p);
        int a, b;
        pair_axes(g.axis_pair, a, b);
        bilinear_sample(g, u[a], u[b], b_buf);
        for (int k = 0; k < cfg.features; ++k) f[k] *= b_buf[k];
      }
    }
  }

  // Tape: ints 2 per (scale, plane); reals 2 per (scale, plane) + the six
  // sampled feature rows per scale.
  int tape_int_size() const { return cfg.num_scales * 6 * 2; }
  int tape_real_size() const { return cfg.num_scales * 6 * (2 + cfg.features); }

  void features_tape(const Vec3<Real>& c, Real t, Real* out, Real* tape_r,
                     int32_t* tape_i) const {
    Real u[4];
    plane_coords(c, t, u);
    for (int s = 0; s < cfg.num_scales; ++s) {
      Real* f = out + s * cfg.features;
      for (int k = 0; k < cfg.features; ++k) f[k] = Real(1);
      for (int p = 0; p < 6; ++p) {
        PlaneGrid<Real> g = plane(s, p);
        int a, b;
        pair_axes(g.axis_pair, a, b);
        BilinearCtx<Real> ctx = bilinear_locate(g, u[a], u[b]);
        int slot = s * 6 + p;
        tape_i[slot * 2] = ctx.ia;
        tape_i[slot * 2 + 1] = ctx.ib;
        tape_r[slot * 2] = ctx.fa;
        tape_r[slot * 2 + 1] = ctx.fb;
        Real* b_row = tape_r + cfg.num_scales * 6 * 2 + slot * cfg.features;
        bilinear_gather(g, ctx, b_row);
        for (int k = 0; k < cfg.features; ++k) f[k] *= b_row[k];
      }
    }
  }

  FieldSample<Real> sample(const Vec3<Real>& c, Real t, const Vec3<Real>* dir = nullptr) const;

  void features_backward(const Real* tape_r, const int32_t* tape_i, const Real* dfeat,
                         Real* grad) const {
    const Real* rows = tape_r + cfg.num_scales * 6 * 2;
    for (int s = 0; s < cfg.num_scales; ++s) {
      const Real* b_rows = rows + s * 6 * cfg.features;
      for (int p = 0; p < 6; ++p) {
        // product of the other five planes' samples, per channel
        Real other[64];
        for (int k = 0; k < cfg.features; ++k) other[k] = dfeat[s * cfg.features + k];
        for (int q = 0; q < 6; ++q) {
          if (q == p) continue;
          const Real* row = b_rows + q * cfg.features;
          for (int k = 0; k < cfg.features; ++k) other[k] *= row[k];
        }
        int slot = s * 6 + p;
        BilinearCtx<Real> ctx;
        ctx.ia = tape_i[slot * 2];
        ctx.ib = tape_i[slot * 2 + 1];
        ctx.fa = tape_r[slot * 2];
        ctx.fb = tape_r[slot * 2 + 1];
        PlaneGrid<Real> g = plane(s, p);
        bilinear_backward(g, ctx, other, grad + plane_offsets[s][p]);
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Temporal hash field: multiresolution spatial hash whose entries store a
// feature vector of length C+W-1; a window of W features slides with t.

struct TemporalHashConfig {
  int levels = 4;
  int base_res = 16;           // level resolutions base_res * 2^l
  int log2_table = 15;         // 2^H entries per level
  int window = 2;              // W features consumed at a time
  int time_positions = 8;      // C window start positions
  DecoderConfig decoder;

  int entry_dim() const { return time_positions + window - 1; }
  int feature_dim() const { return levels * window; }
};

template <class Real>
struct TemporalHash {
  TemporalHashConfig cfg;
  ParamStore<Real> params;
  std::vector<size_t> level_offsets;
  DecoderMLP<Real> decoder;

  static constexpr const char* kKind = "temporal_hash";
  static constexpr uint32_t kPrimes[3] = {1u, 2654435761u, 805459861u};

  void build(const TemporalHashConfig& c, const std::string& prefix = "hash") {
    cfg = c;
    if (cfg.log2_table < 4) throw std::runtime_error("hash table log2 size must be >= 4");
    if (cfg.window < 1 || cfg.time_positions < 1)
      throw std::runtime_error("hash window and time_positions must be >= 1");
    level_offsets.clear();
    size_t table = size_t(1) << cfg.log2_table;
    for (int l = 0; l < cfg.levels; ++l)
      level_offsets.push_back(
          params.add_block(prefix + ".level" + std::to_string(l), table * cfg.entry_dim()));
    decoder.build(params, cfg.feature_dim(), cfg.decoder, prefix + ".decoder");
  }

  int level_res(int l) const { return cfg.base_res << l; }

  void init(uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    size_t table = size_t(1) << cfg.log2_table;
    for (int l = 0; l < cfg.levels; ++l) {
      Real* v = params.data() + level_offsets[l];
      for (size_t i = 0; i < table * cfg.entry_dim(); ++i) v[i] = Real(dist(rng));
    }
    decoder.init(params.data(), rng);
  }

  int feature_dim() const { return cfg.feature_dim(); }

  uint32_t hash_corner(uint32_t x, uint32_t y, uint32_t z) const {
    uint32_t h = x * kPrimes[0] ^ y * kPrimes[1] ^ z * kPrimes[2];
    return h & ((uint32_t(1) << cfg.log2_table) - 1);
  }

  // Per level: trilinear blend over 8 hashed corners; per corner the stored
  // vector is read through a W-wide window at offset t*(C-1), linearly
  // blended between the two adjacent integer offsets.
  void features(const Vec3<Real>& c, Real t, Real* out) const {
    features_tape(c, t, out, nullptr, nullptr);
  }

  // Tape per level: ints = 8 corner entry indices + window offset; reals = 8
  // corner weights + window fraction.
  int tape_int_size() const { return cfg.levels * 9; }
  int tape_real_size() const { return cfg.levels * 9; }

  void features_tape(const Vec3<Real>& c, Real t, Real* out, Real* tape_r,
                     int32_t* tape_i) const {
    Real pos01[3] = {(c.x + 2) * Real(0.25), (c.y + 2) * Real(0.25), (c.z + 2) * Real(0.25)};

    Real tau = clamp01(t) * Real(cfg.time_positions - 1);
    int32_t o0 = int32_t(tau);
    if (o0 > cfg.time_positions - 2) o0 = std::max(0, cfg.time_positions - 2);
    int32_t o1 = std::min(o0 + 1, cfg.time_positions - 1);
    Real tf = tau - Real(o0);
    int entry = cfg.entry_dim();
    int W = cfg.window;

    for (int l = 0; l < cfg.levels; ++l) {
      int res = level_res(l);
      int32_t i0[3];
      Real fr[3];
      for (int d = 0; d < 3; ++d) grid_locate(pos01[d], res, i0[d], fr[d]);

      const Real* base = params.data() + level_offsets[l];
      Real* f = out + l * W;
      for (int j = 0; j < W; ++j) f[j] = 0;

      for (int corner = 0; corner < 8; ++corner) {
        uint32_t cx = uint32_t(i0[0] + (corner & 1));
        uint32_t cy = uint32_t(i0[1] + ((corner >> 1) & 1));
        uint32_t cz = uint32_t(i0[2] + ((corner >> 2) & 1));
        Real w = ((corner & 1) ? fr[0] : 1 - fr[0]) * (((corner >> 1) & 1) ? fr[1] : 1 - fr[1]) *
                 (((corner >> 2) & 1) ? fr[2] : 1 - fr[2]);
        uint32_t idx = hash_corner(cx, cy, cz);
        const Real* e = base + size_t(idx) * entry;
        for (int j = 0; j < W; ++j)
          f[j] += w * ((1 - tf) * e[o0 + j] + tf * e[o1 + j]);
        if (tape_r) {
          tape_r[l * 9 + corner] = w;
          tape_i[l * 9 + corner] = int32_t(idx);
        }
      }
      if (tape_r) {
        tape_r[l * 9 + 8] = tf;
        tape_i[l * 9 + 8] = o0;
      }
    }
  }

  FieldSample<Real> sample(const Vec3<Real>& c, Real t, const Vec3<Real>* dir = nullptr) const;

  void features_backward(const Real* tape_r, const int32_t* tape_i, const Real* dfeat,
                         Real* grad) const {
    int entry = cfg.entry_dim();
    int W = cfg.window;
    for (int l = 0; l < cfg.levels; ++l) {
      Real tf = tape_r[l * 9 + 8];
      int32_t o0 = tape_i[l * 9 + 8];
      int32_t o1 = std::min(o0 + 1, cfg.time_positions - 1);
      Real* gbase = grad + level_offsets[l];
      const Real* df = dfeat + l * W;
      for (int corner = 0; corner < 8; ++corner) {
        Real w = tape_r[l * 9 + corner];
        size_t off = size_t(tape_i[l * 9 + corner]) * entry;
        for (int j = 0; j < W; ++j) {
          Real d = w * df[j];
          gbase[off + o0 + j] += (1 - tf) * d;
          gbase[off + o1 + j] += tf * d;
        }
      }
    }
  }
};

// Field evaluation: encoder features decoded into a density and a color.
template <class Real, class EncoderT>
inline FieldSample<Real> field_sample(const EncoderT& field, const Vec3<Real>& contracted, Real t,
                                      const Vec3<Real>* dir = nullptr) {
  Real feat[256];
  field.features(contracted, t, feat);
  FieldSample<Real> out;
  field.decoder.forward(field.params.data(), feat, dir, nullptr, out);
  return out;
}

template <class Real>
FieldSample<Real> Hexplane<Real>::sample(const Vec3<Real>& c, Real t,
                                         const Vec3<Real>* dir) const {
  return field_sample<Real>(*this, c, t, dir);
}

template <class Real>
FieldSample<Real> TemporalHash<Real>::sample(const Vec3<Real>& c, Real t,
                                             const Vec3<Real>* dir) const {
  return field_sample<Real>(*this, c, t, dir);
}

}  // namespace dynfield
