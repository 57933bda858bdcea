#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dynfield/camera.hpp"
#include "dynfield/field.hpp"
#include "dynfield/vec.hpp"

namespace dynfield {

// Identity inside the unit ball, (2 - 1/|x|) * x/|x| outside; output norm < 2.
template <class Real>
inline Vec3<Real> contract(const Vec3<Real>& x) {
  Real n2 = x.norm2();
  if (n2 <= Real(1)) return x;
  Real n = std::sqrt(n2);
  return x * ((2 - 1 / n) / n);
}

struct RenderConfig {
  int n_coarse = 48;
  int n_fine = 48;
  double near = 0.05;
  double far = 100.0;
  Vec3f background{1, 1, 1};
  bool jitter = false;  // stratified jitter + stochastic resampling when true
};

// Marching warp: linear in distance up to the unit-ball exit, then linear in
// disparity. Bin edges are uniform in the warped coordinate.
template <class Real>
struct MarchWarp {
  Real near, far, mid;      // mid = unit-ball exit clamped to [near, far]
  Real lin_len;             // warp length of the linear segment
  Real total;

  MarchWarp(const Vec3<Real>& origin, const Vec3<Real>& dir, Real near_, Real far_) {
    near = near_;
    far = far_;
    Real b = origin.dot(dir);
    Real c = origin.norm2() - 1;
    Real disc = b * b - c;
    Real exit_t = disc > 0 ? (-b + std::sqrt(disc)) : Real(0);
    mid = std::clamp(exit_t, near, far);
    if (mid <= 0) mid = far;  // degenerate near=0 ray outside the ball
    lin_len = mid - near;
    total = lin_len + (mid < far ? mid * mid * (1 / mid - 1 / far) : Real(0));
  }

  Real to_warp(Real t) const {
    if (t <= mid) return t - near;
    return lin_len + mid * mid * (1 / mid - 1 / t);
  }
  Real from_warp(Real w) const {
    if (w <= lin_len) return near + w;
    Real inv = 1 / mid - (w - lin_len) / (mid * mid);
    return 1 / std::max(inv, Real(1) / (far * 2));
  }
};

// n equal bins between near and far in the warped coordinate; midpoints, or a
// uniform draw inside each bin when an rng is supplied.
template <class Real>
inline void stratified_samples(const Vec3<Real>& origin, const Vec3<Real>& dir, Real near, Real far,
                               int n, Rng64* rng, Real* edges /*n+1*/, Real* mids /*n*/) {
  MarchWarp<Real> warp(origin, dir, near, far);
  for (int i = 0; i <= n; ++i) edges[i] = warp.from_warp(warp.total * Real(i) / Real(n));
  edges[0] = near;
  edges[n] = far;
  for (int i = 0; i < n; ++i) {
    Real u = rng ? Real(rng->next_double()) : Real(0.5);
    Real w = warp.total * (Real(i) + u) / Real(n);
    mids[i] = warp.from_warp(w);
    mids[i] = std::clamp(mids[i], edges[i], edges[i + 1]);
  }
}

template <class Real>
struct RenderOutput {
  Vec3<Real> rgb;
  Real depth = 0;
  Real acc = 0;
  std::vector<Real> weights;
};

// Transmittance compositing (Kajiya/Max quadrature):
//   alpha_i = 1 - exp(-sigma_i * delta_i), T_i = prod_{j<i} (1 - alpha_j),
//   w_i = T_i alpha_i, rgb = sum w_i c_i + (1 - sum w_i) * background,
//   depth = sum w_i s_i / max(sum w_i, 1e-10).
// Zero-width intervals contribute nothing. `weights` out parameter is
// optional; positions must be nondecreasing within [near, far].
template <class Real>
inline void composite(const Real* positions, const Real* sigma, const Vec3<Real>* rgb, int n,
                      Real far, const Vec3<Real>& background, RenderOutput<Real>& out,
                      Real* weights = nullptr) {
  Real trans = 1;
  Vec3<Real> color{0, 0, 0};
  Real depth_acc = 0, acc = 0;
  for (int i = 0; i < n; ++i) {
    Real delta = (i + 1 < n ? positions[i + 1] : far) - positions[i];
    Real alpha = delta > 0 ? 1 - std::exp(-sigma[i] * delta) : Real(0);
    Real w = trans * alpha;
    color += rgb[i] * w;
    depth_acc += w * positions[i];
    acc += w;
    trans *= 1 - alpha;
    if (weights) weights[i] = w;
  }
  out.rgb = color + background * (1 - acc);
  out.acc = acc;
  out.depth = depth_acc / std::max(acc, Real(1e-10));
}

template <class Real>
inline RenderOutput<Real> composite(const std::vector<Real>& positions,
                                    const std::vector<Real>& sigma,
                                    const std::vector<Vec3<Real>>& rgb, Real far,
                                    const Vec3<Real>& background) {
  RenderOutput<Real> out;
  out.weights.resize(positions.size());
  composite<Real>(positions.data(), sigma.data(), rgb.data(), int(positions.size()), far,
                  background, out, out.weights.data());
  return out;
}

// Reverse pass of composite for d(loss)/d(rgb_out): fills dsigma and drgb per
// sample. The suffix recursion R_i = A_{i+1} alpha_{i+1} + (1-alpha_{i+1}) R_{i+1}
// with A_i = dL/dw_i keeps the transmittance chain division-free.
template <class Real>
inline void composite_backward(const Real* positions, const Real* sigma, const Vec3<Real>* rgb,
                               int n, Real far, const Vec3<Real>& background,
                               const Vec3<Real>& drgb_out, Real* dsigma, Vec3<Real>* drgb) {
  // Forward intermediates.
  std::vector<Real> alpha(n), trans(n);
  Real t = 1;
  for (int i = 0; i < n; ++i) {
    Real delta = (i + 1 < n ? positions[i + 1] : far) - positions[i];
    alpha[i] = delta > 0 ? 1 - std::exp(-sigma[i] * delta) : Real(0);
    trans[i] = t;
    t *= 1 - alpha[i];
  }
  // dL/dw_i = drgb_out . (c_i - background)
  Real r = 0;  // suffix recursion
  std::vector<Real> dalpha(n);
  for (int i = n - 1; i >= 0; --i) {
    Real a = drgb_out.dot(rgb[i] - Vec3<Real>(background));
    dalpha[i] = trans[i] * (a - r);
    r = a * alpha[i] + (1 - alpha[i]) * r;
  }
  for (int i = 0; i < n; ++i) {
    Real delta = (i + 1 < n ? positions[i + 1] : far) - positions[i];
    Real w = trans[i] * alpha[i];
    dsigma[i] = delta > 0 ? dalpha[i] * delta * (1 - alpha[i]) : Real(0);
    drgb[i] = drgb_out * w;
  }
}

// Inverse-CDF samples of the piecewise-constant distribution over the given
// bins (a 1e-5 floor is added per bin). Deterministic mode places samples at
// the midpoints of n equal CDF quantiles.
template <class Real>
inline void pdf_resample(const Real* weights, const Real* edges, int n_bins, int n, Rng64* rng,
                         Real* out) {
  std::vector<Real> cdf(n_bins + 1);
  cdf[0] = 0;
  for (int i = 0; i < n_bins; ++i) cdf[i + 1] = cdf[i] + std::max(weights[i], Real(0)) + Real(1e-5);
  Real total = cdf[n_bins];
  for (int i = 0; i <= n_bins; ++i) cdf[i] /= total;

  int hint = 0;
  for (int k = 0; k < n; ++k) {
    Real u = rng ? Real((k + rng->next_double()) / n) : Real((k + 0.5) / n);
    // CDF is nondecreasing and u is nondecreasing across k, so scan forward.
    while (hint < n_bins - 1 && cdf[hint + 1] < u) ++hint;
    Real lo = cdf[hint], hi = cdf[hint + 1];
    Real frac = hi > lo ? (u - lo) / (hi - lo) : Real(0.5);
    out[k] = edges[hint] + frac * (edges[hint + 1] - edges[hint]);
  }
}

// One full hierarchical render: coarse stratified pass on the proposal field,
// inverse-CDF refinement, fine pass on the main field over the merged sample
// set. Positions are contracted before every field query.
template <class Real, class FieldT, class ProposalT>
struct RayRenderResult {
  RenderOutput<Real> fine;
  RenderOutput<Real> coarse;
};

template <class Real, class FieldT, class ProposalT>
inline RayRenderResult<Real, FieldT, ProposalT> render_ray(const FieldT& field,
                                                           const ProposalT& proposal,
                                                           const Ray& ray,
                                                           const RenderConfig& cfg,
                                                           Rng64* rng = nullptr) {
  Vec3<Real> origin(ray.origin);
  Vec3<Real> dir(ray.direction);
  Real t_time = Real(ray.time);

  int nc = cfg.n_coarse;
  std::vector<Real> edges(nc + 1), mids(nc);
  stratified_samples<Real>(origin, dir, Real(ray.near), Real(ray.far), nc, rng, edges.data(),
                           mids.data());

  std::vector<Real> sigma_c(nc);
  std::vector<Vec3<Real>> rgb_c(nc);
  for (int i = 0; i < nc; ++i) {
    Vec3<Real> p = contract<Real>(origin + dir * mids[i]);
    FieldSample<Real> s = proposal.sample(p, t_time);
    sigma_c[i] = s.sigma;
    rgb_c[i] = s.rgb;
  }
  RayRenderResult<Real, FieldT, ProposalT> result;
  result.coarse = composite<Real>(mids, sigma_c, rgb_c, Real(ray.far), Vec3<Real>(cfg.background));

  int nf = cfg.n_fine;
  std::vector<Real> fine(nf);
  pdf_resample<Real>(result.coarse.weights.data(), edges.data(), nc, nf, rng, fine.data());

  std::vector<Real> merged(nc + nf);
  std::merge(mids.begin(), mids.end(), fine.begin(), fine.end(), merged.begin());

  int nm = nc + nf;
  std::vector<Real> sigma_f(nm);
  std::vector<Vec3<Real>> rgb_f(nm);
  Vec3<Real> view = dir;
  for (int i = 0; i < nm; ++i) {
    Vec3<Real> p = contract<Real>(origin + dir * merged[i]);
    FieldSample<Real> s = field.sample(p, t_time, &view);
    sigma_f[i] = s.sigma;
    rgb_f[i] = s.rgb;
  }
  result.fine = composite<Real>(merged, sigma_f, rgb_f, Real(ray.far), Vec3<Real>(cfg.background));
  return result;
}

}  // namespace dynfield
