#include "dynfield/gradcheck.hpp"

#include <cmath>
#include <random>

#include "dynfield/trainer.hpp"

namespace dynfield {

namespace {

struct CheckRay {
  Ray ray;
  Vec3d gt;
};

template <class MainT>
class LossHarness {
 public:
  LossHarness(MainT& main, Hexplane<double>& proposal, const RenderConfig& render,
              std::vector<CheckRay> rays, double lambda_tv, double lambda_ts)
      : main_(main),
        proposal_(proposal),
        rays_(std::move(rays)),
        lambda_tv_(lambda_tv),
        lambda_ts_(lambda_ts) {
    pipelines_.resize(rays_.size());
    for (auto& p : pipelines_) p.setup(&main_, &proposal_, render);
  }

  // Records the graph (fine sample placement) at the current parameters.
  void record() {
    Vec3d f, c;
    for (size_t i = 0; i < rays_.size(); ++i)
      pipelines_[i].forward(rays_[i].ray, nullptr, f, c, /*frozen=*/false);
    recorded_ = true;
  }

  double loss(bool frozen = true) {
    double inv = 1.0 / (double(rays_.size()) * 3.0);
    double total = 0;
    Vec3d f, c;
    for (size_t i = 0; i < rays_.size(); ++i) {
      pipelines_[i].forward(rays_[i].ray, nullptr, f, c, frozen);
      total += (f - rays_[i].gt).norm2() * inv;
      total += (c - rays_[i].gt).norm2() * inv;
    }
    if constexpr (std::is_same_v<MainT, Hexplane<double>>) {
      RegValues<double> r = plane_regularizers(main_);
      total += lambda_tv_ * r.tv + lambda_ts_ * r.ts;
    }
    RegValues<double> rp = plane_regularizers(proposal_);
    total += lambda_tv_ * rp.tv + lambda_ts_ * rp.ts;
    return total;
  }

  void analytic_gradients(std::vector<double>& grad_main, std::vector<double>& grad_prop) {
    grad_main.assign(main_.params.size(), 0.0);
    grad_prop.assign(proposal_.params.size(), 0.0);
    double inv = 1.0 / (double(rays_.size()) * 3.0);
    Vec3d f, c;
    for (size_t i = 0; i < rays_.size(); ++i) {
      pipelines_[i].forward(rays_[i].ray, nullptr, f, c, /*frozen=*/true);
      Vec3d dfine = (f - rays_[i].gt) * (2.0 * inv);
      Vec3d dcoarse = (c - rays_[i].gt) * (2.0 * inv);
      pipelines_[i].backward(dfine, dcoarse, grad_main.data(), grad_prop.data());
    }
    if constexpr (std::is_same_v<MainT, Hexplane<double>>) {
      plane_regularizers_backward(main_, lambda_tv_, lambda_ts_, grad_main.data());
    }
    plane_regularizers_backward(proposal_, lambda_tv_, lambda_ts_, grad_prop.data());
  }

  MainT& main_;
  Hexplane<double>& proposal_;
  std::vector<CheckRay> rays_;
  std::vector<RayPipeline<double, MainT>> pipelines_;
  double lambda_tv_, lambda_ts_;
  bool recorded_ = false;
};

std::vector<CheckRay> make_rays(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<CheckRay> rays(n);
  for (auto& cr : rays) {
    Vec3d o{gauss(rng), gauss(rng), gauss(rng)};
    o = o.normalized() * (0.2 + 0.6 * uni(rng));
    Vec3d d{gauss(rng), gauss(rng), gauss(rng)};
    cr.ray.origin = o;
    cr.ray.direction = d.normalized();
    cr.ray.near = 0.05;
    cr.ray.far = 100.0;
    cr.ray.time = uni(rng);
    cr.gt = {uni(rng), uni(rng), uni(rng)};
  }
  return rays;
}

template <class MainT>
void check_one_seed(MainT& main, Hexplane<double>& proposal, const RenderConfig& render,
                    const GradCheckConfig& cfg, uint32_t seed, GradCheckResult& result) {
  std::mt19937 rng(seed * 7919u + 13u);
  LossHarness<MainT> harness(main, proposal, render, make_rays(cfg.num_rays, rng), cfg.lambda_tv,
                             cfg.lambda_ts);
  harness.record();

  std::vector<double> grad_main, grad_prop;
  harness.analytic_gradients(grad_main, grad_prop);

  size_t n_main = grad_main.size();
  size_t n_total = n_main + grad_prop.size();
  auto grad_at = [&](size_t i) -> double& {
    return i < n_main ? grad_main[i] : grad_prop[i - n_main];
  };
  auto param_at = [&](size_t i) -> double& {
    return i < n_main ? main.params.values[i] : proposal.params.values[i - n_main];
  };

  // Mostly parameters the recorded rays actually touched; a few untouched
  // ones keep the zero-gradient path honest.
  std::vector<size_t> touched;
  for (size_t i = 0; i < n_total; ++i)
    if (std::abs(grad_at(i)) > 1e-12) touched.push_back(i);
  std::uniform_int_distribution<size_t> pick_any(0, n_total - 1);

  std::vector<size_t> chosen;
  for (int k = 0; k < cfg.params_per_seed; ++k) {
    if (!touched.empty() && k % 5 != 4) {
      std::uniform_int_distribution<size_t> pick(0, touched.size() - 1);
      chosen.push_back(touched[pick(rng)]);
    } else {
      chosen.push_back(pick_any(rng));
    }
  }

  if (cfg.corrupt && !chosen.empty()) grad_at(chosen[0]) += 0.01 * (1.0 + std::abs(grad_at(chosen[0])));

  for (size_t idx : chosen) {
    double& p = param_at(idx);
    double saved = p;
    p = saved + cfg.step;
    double lp = harness.loss();
    p = saved - cfg.step;
    double lm = harness.loss();
    p = saved;

    double numeric = (lp - lm) / (2 * cfg.step);
    double analytic = grad_at(idx);
    double rel = std::abs(analytic - numeric) /
                 std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    result.max_rel_err = std::max(result.max_rel_err, rel);
    ++result.checked;
    if (!(rel < cfg.tolerance)) {
      ++result.failed;
      const ParamBlock& block = idx < n_main ? main.params.block_of(idx)
                                             : proposal.params.block_of(idx - n_main);
      char buf[256];
      snprintf(buf, sizeof(buf), "seed %u param %zu (%s): analytic %.6e numeric %.6e rel %.3e",
               seed, idx, block.name.c_str(), analytic, numeric, rel);
      result.failures.push_back(buf);
    }
  }
}

}  // namespace

GradCheckResult check_gradients(const GradCheckConfig& cfg) {
  GradCheckResult result;

  // Small but representative double-precision model.
  ModelConfig mc;
  mc.kind = cfg.kind;
  mc.hexplane.base_res = 8;
  mc.hexplane.num_scales = 2;
  mc.hexplane.features = 4;
  mc.hexplane.time_res = 4;
  mc.hexplane.decoder.hidden_layers = 2;
  mc.hexplane.decoder.hidden_width = 32;
  mc.hash.levels = 3;
  mc.hash.base_res = 8;
  mc.hash.log2_table = 8;
  mc.hash.window = 2;
  mc.hash.time_positions = 4;
  mc.hash.decoder.hidden_layers = 2;
  mc.hash.decoder.hidden_width = 32;
  mc.proposal.base_res = 4;
  mc.proposal.num_scales = 2;
  mc.proposal.features = 2;
  mc.proposal.time_res = 4;
  mc.proposal.decoder.hidden_layers = 1;
  mc.proposal.decoder.hidden_width = 16;
  mc.render.n_coarse = 8;
  mc.render.n_fine = 8;
  mc.render.background = {0.2f, 0.3f, 0.4f};

  for (int s = 0; s < cfg.num_seeds; ++s) {
    uint32_t seed = cfg.seed + uint32_t(s);
    Model<double> model;
    model.build(mc);
    model.init(seed);
    GradCheckConfig one = cfg;
    if (cfg.corrupt && s > 0) one.corrupt = false;  // one corruption is enough
    if (mc.kind == FieldKind::Hexplane)
      check_one_seed(model.hexplane, model.proposal, mc.render, one, seed, result);
    else
      check_one_seed(model.hash, model.proposal, mc.render, one, seed, result);
  }
  return result;
}

}  // namespace dynfield
