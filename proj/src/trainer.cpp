#include "dynfield/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace dynfield {

namespace {

struct BatchRay {
  Ray ray;
  Vec3f gt;
};

// One worker's slice of the batch: forward + loss terms + backward.
template <class MainT>
void run_batch(const MainT& main_field, const Hexplane<float>& proposal,
               const RenderConfig& render, const std::vector<BatchRay>& batch, uint32_t seed,
               int64_t iteration, int workers, std::vector<std::vector<float>>& grad_main,
               std::vector<std::vector<float>>& grad_prop, std::vector<double>& loss_fine,
               std::vector<double>& loss_coarse) {
  int n = int(batch.size());
  double inv = 1.0 / (double(n) * 3.0);

  parallel_chunks(workers, n, [&](int w, int begin, int end) {
    RayPipeline<float, MainT> pipeline;
    pipeline.setup(&main_field, &proposal, render);
    float* gm = grad_main[w].data();
    float* gp = grad_prop[w].data();
    double lf = 0, lc = 0;
    for (int i = begin; i < end; ++i) {
      Rng64 jitter(seed ^ 0x9e3779b9u, uint64_t(iteration) * uint64_t(n) + uint64_t(i));
      Vec3f fine, coarse;
      pipeline.forward(batch[i].ray, &jitter, fine, coarse);
      Vec3f rf = fine - batch[i].gt;
      Vec3f rc = coarse - batch[i].gt;
      lf += double(rf.norm2()) * inv;
      lc += double(rc.norm2()) * inv;
      Vec3f dfine = rf * float(2.0 * inv);
      Vec3f dcoarse = rc * float(2.0 * inv);
      pipeline.backward(dfine, dcoarse, gm, gp);
    }
    loss_fine[w] = lf;
    loss_coarse[w] = lc;
  });
}

template <class MainT>
TrainResult train_impl(const DynamicDataset& ds, const TrainConfig& cfg, MainT& main_field,
                       Model<float>&& model, const std::string& log_path,
                       const std::string& checkpoint_dir) {
  int workers = resolve_workers(cfg.workers);
  const RenderConfig& render = model.cfg.render;

  PixelWeightTable table = [&] {
    if (cfg.sampler == "isg") {
      MedianImageSet medians = compute_median_images(ds);
      return PixelWeightTable::isg(ds, medians, float(cfg.isg_gamma), float(cfg.isg_floor));
    }
    if (cfg.sampler != "uniform")
      throw std::runtime_error("unknown sampler: " + cfg.sampler);
    return PixelWeightTable::uniform(ds);
  }();

  Hexplane<float>& proposal = model.proposal;
  size_t n_main = main_field.params.size();
  size_t n_prop = proposal.params.size();

  std::vector<std::vector<float>> grad_main(workers, std::vector<float>(n_main, 0.f));
  std::vector<std::vector<float>> grad_prop(workers, std::vector<float>(n_prop, 0.f));
  std::vector<float> gmain(n_main), gprop(n_prop);
  std::vector<double> loss_fine(workers, 0), loss_coarse(workers, 0);
  AdamState<float> adam_main, adam_prop;

  Rng64 batch_rng(cfg.seed, 0x5a17u);
  std::vector<BatchRay> batch(cfg.rays_per_batch);

  std::ofstream log_stream;
  if (!log_path.empty()) {
    log_stream.open(log_path);
    if (!log_stream) throw std::runtime_error("cannot write train log: " + log_path);
  }

  TrainResult result;
  result.num_timesteps = ds.num_timesteps;
  auto t_start = std::chrono::steady_clock::now();

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    auto pixels = table.sample_pixels(cfg.rays_per_batch, batch_rng);
    for (int i = 0; i < cfg.rays_per_batch; ++i) {
      const PixelSample& s = pixels[i];
      const Frame* frame = ds.frame_at(s.camera_id, s.time_index);
      const CameraModel* cam = ds.camera_by_id(s.camera_id);
      batch[i].ray = generate_ray(*cam, s.px + 0.5, s.py + 0.5, frame->time);
      batch[i].ray.near = render.near;
      batch[i].ray.far = render.far;
      batch[i].gt = frame->image.get_pixel(s.px, s.py);
    }

    for (int w = 0; w < workers; ++w) {
      std::fill(grad_main[w].begin(), grad_main[w].end(), 0.f);
      std::fill(grad_prop[w].begin(), grad_prop[w].end(), 0.f);
    }
    run_batch(main_field, proposal, render, batch, cfg.seed, iter, workers, grad_main, grad_prop,
              loss_fine, loss_coarse);

    // Fixed-order reduction keeps parallel training deterministic.
    std::fill(gmain.begin(), gmain.end(), 0.f);
    std::fill(gprop.begin(), gprop.end(), 0.f);
    double lf = 0, lc = 0;
    for (int w = 0; w < workers; ++w) {
      const float* gm = grad_main[w].data();
      const float* gp = grad_prop[w].data();
      for (size_t i = 0; i < n_main; ++i) gmain[i] += gm[i];
      for (size_t i = 0; i < n_prop; ++i) gprop[i] += gp[i];
      lf += loss_fine[w];
      lc += loss_coarse[w];
    }

    RegValues<float> reg_main{}, reg_prop{};
    if constexpr (std::is_same_v<MainT, Hexplane<float>>) {
      if (cfg.lambda_tv > 0 || cfg.lambda_ts > 0) {
        reg_main = plane_regularizers(main_field);
        plane_regularizers_backward(main_field, float(cfg.lambda_tv), float(cfg.lambda_ts),
                                    gmain.data());
      }
    }
    if (cfg.lambda_tv > 0 || cfg.lambda_ts > 0) {
      reg_prop = plane_regularizers(proposal);
      plane_regularizers_backward(proposal, float(cfg.lambda_tv), float(cfg.lambda_ts),
                                  gprop.data());
    }

    double total = lf + lc;
    if (!std::isfinite(total))
      throw std::runtime_error("non-finite loss at iteration " + std::to_string(iter));

    double frac = cfg.iterations > 1 ? double(iter) / double(cfg.iterations - 1) : 0.0;
    float lr = float(cfg.lr * std::pow(cfg.lr_final / cfg.lr, frac));
    adam_step<float>(main_field.params.data(), gmain.data(), n_main, adam_main, lr,
                     float(cfg.beta1), float(cfg.beta2), float(cfg.adam_eps), &main_field.params);
    adam_step<float>(proposal.params.data(), gprop.data(), n_prop, adam_prop, lr,
                     float(cfg.beta1), float(cfg.beta2), float(cfg.adam_eps), &proposal.params);

    bool last = iter + 1 == cfg.iterations;
    if (iter % std::max(1, cfg.log_interval) == 0 || last) {
      TrainLogEntry entry;
      entry.iteration = iter;
      entry.loss = lf;
      entry.loss_coarse = lc;
      entry.tv = double(reg_main.tv) + double(reg_prop.tv);
      entry.ts = double(reg_main.ts) + double(reg_prop.ts);
      entry.elapsed_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      result.log.push_back(entry);
      if (log_stream) {
        json j{{"iteration", entry.iteration}, {"loss", entry.loss},
               {"loss_coarse", entry.loss_coarse}, {"tv", entry.tv}, {"ts", entry.ts},
               {"elapsed_s", entry.elapsed_s}};
        log_stream << j.dump() << "\n";
      }
    }
    if (!checkpoint_dir.empty() && cfg.checkpoint_interval > 0 &&
        (iter + 1) % cfg.checkpoint_interval == 0 && !last) {
      fs::create_directories(checkpoint_dir);
      save_checkpoint(model, ds.num_timesteps,
                      (fs::path(checkpoint_dir) / ("iter" + std::to_string(iter + 1) + ".dfck"))
                          .string());
    }
  }

  if (!checkpoint_dir.empty()) {
    fs::create_directories(checkpoint_dir);
    save_checkpoint(model, ds.num_timesteps, (fs::path(checkpoint_dir) / "final.dfck").string());
  }
  result.model = std::move(model);
  return result;
}

}  // namespace

TrainResult train(const DynamicDataset& ds, const TrainConfig& cfg, const std::string& log_path,
                  const std::string& checkpoint_dir) {
  if (cfg.iterations < 1) throw std::runtime_error("iterations must be >= 1");
  if (cfg.rays_per_batch < 1) throw std::runtime_error("rays_per_batch must be >= 1");
  if (!(cfg.lr > 0)) throw std::runtime_error("learning rate must be positive");
  if (cfg.lambda_tv < 0 || cfg.lambda_ts < 0)
    throw std::runtime_error("regularizer weights must be >= 0");

  Model<float> model;
  model.build(cfg.model_config(ds));
  model.init(cfg.seed);

  if (model.cfg.kind == FieldKind::Hexplane)
    return train_impl(ds, cfg, model.hexplane, std::move(model), log_path, checkpoint_dir);
  return train_impl(ds, cfg, model.hash, std::move(model), log_path, checkpoint_dir);
}

TrainConfig train_config_from_json(const std::string& text) {
  json doc = json::parse(text);
  TrainConfig cfg;
  cfg.iterations = doc.value("iterations", cfg.iterations);
  cfg.rays_per_batch = doc.value("rays_per_batch", cfg.rays_per_batch);
  cfg.lr = doc.value("lr", cfg.lr);
  cfg.lr_final = doc.value("lr_final", cfg.lr_final);
  cfg.beta1 = doc.value("beta1", cfg.beta1);
  cfg.beta2 = doc.value("beta2", cfg.beta2);
  cfg.adam_eps = doc.value("adam_eps", cfg.adam_eps);
  cfg.lambda_tv = doc.value("lambda_tv", cfg.lambda_tv);
  cfg.lambda_ts = doc.value("lambda_ts", cfg.lambda_ts);
  cfg.sampler = doc.value("sampler", cfg.sampler);
  cfg.isg_gamma = doc.value("isg_gamma", cfg.isg_gamma);
  cfg.isg_floor = doc.value("isg_floor", cfg.isg_floor);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.workers = doc.value("workers", cfg.workers);
  cfg.log_interval = doc.value("log_interval", cfg.log_interval);
  cfg.checkpoint_interval = doc.value("checkpoint_interval", cfg.checkpoint_interval);

  if (doc.contains("field")) {
    const json& f = doc["field"];
    std::string kind = f.value("kind", "hexplane");
    if (kind == "hexplane")
      cfg.field.kind = FieldKind::Hexplane;
    else if (kind == "temporal_hash")
      cfg.field.kind = FieldKind::TemporalHash;
    else
      throw std::runtime_error("unknown field kind: " + kind);
    cfg.field.base_res = f.value("base_res", cfg.field.base_res);
    cfg.field.num_scales = f.value("num_scales", cfg.field.num_scales);
    cfg.field.features = f.value("features", cfg.field.features);
    cfg.field.time_res = f.value("time_res", cfg.field.time_res);
    cfg.field.hash_levels = f.value("hash_levels", cfg.field.hash_levels);
    cfg.field.hash_base_res = f.value("hash_base_res", cfg.field.hash_base_res);
    cfg.field.hash_log2_table = f.value("hash_log2_table", cfg.field.hash_log2_table);
    cfg.field.hash_window = f.value("hash_window", cfg.field.hash_window);
    cfg.field.hash_time_positions =
        f.value("hash_time_positions", cfg.field.hash_time_positions);
  }
  if (doc.contains("decoder")) {
    const json& d = doc["decoder"];
    cfg.decoder.hidden_layers = d.value("hidden_layers", cfg.decoder.hidden_layers);
    cfg.decoder.hidden_width = d.value("hidden_width", cfg.decoder.hidden_width);
    cfg.decoder.sh_degree = d.value("sh_degree", cfg.decoder.sh_degree);
  }
  if (doc.contains("proposal")) {
    const json& p = doc["proposal"];
    cfg.proposal.base_res = p.value("base_res", cfg.proposal.base_res);
    cfg.proposal.num_scales = p.value("num_scales", cfg.proposal.num_scales);
    cfg.proposal.features = p.value("features", cfg.proposal.features);
    cfg.proposal.decoder.hidden_layers =
        p.value("hidden_layers", cfg.proposal.decoder.hidden_layers);
    cfg.proposal.decoder.hidden_width = p.value("hidden_width", cfg.proposal.decoder.hidden_width);
  }
  if (doc.contains("render")) {
    const json& r = doc["render"];
    cfg.render.n_coarse = r.value("n_coarse", cfg.render.n_coarse);
    cfg.render.n_fine = r.value("n_fine", cfg.render.n_fine);
    cfg.render.near = r.value("near", cfg.render.near);
    cfg.render.far = r.value("far", cfg.render.far);
  }
  if (doc.contains("background") && !doc["background"].is_null()) {
    const json& b = doc["background"];
    cfg.background = Vec3f{b.at(0), b.at(1), b.at(2)};
  }
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json doc;
  doc["iterations"] = cfg.iterations;
  doc["rays_per_batch"] = cfg.rays_per_batch;
  doc["lr"] = cfg.lr;
  doc["lr_final"] = cfg.lr_final;
  doc["beta1"] = cfg.beta1;
  doc["beta2"] = cfg.beta2;
  doc["adam_eps"] = cfg.adam_eps;
  doc["lambda_tv"] = cfg.lambda_tv;
  doc["lambda_ts"] = cfg.lambda_ts;
  doc["sampler"] = cfg.sampler;
  doc["isg_gamma"] = cfg.isg_gamma;
  doc["isg_floor"] = cfg.isg_floor;
  doc["seed"] = cfg.seed;
  doc["workers"] = cfg.workers;
  doc["log_interval"] = cfg.log_interval;
  doc["checkpoint_interval"] = cfg.checkpoint_interval;
  doc["field"] = {{"kind", cfg.field.kind == FieldKind::Hexplane ? "hexplane" : "temporal_hash"},
                  {"base_res", cfg.field.base_res},
                  {"num_scales", cfg.field.num_scales},
                  {"features", cfg.field.features},
                  {"time_res", cfg.field.time_res},
                  {"hash_levels", cfg.field.hash_levels},
                  {"hash_base_res", cfg.field.hash_base_res},
                  {"hash_log2_table", cfg.field.hash_log2_table},
                  {"hash_window", cfg.field.hash_window},
                  {"hash_time_positions", cfg.field.hash_time_positions}};
  doc["decoder"] = {{"hidden_layers", cfg.decoder.hidden_layers},
                    {"hidden_width", cfg.decoder.hidden_width},
                    {"sh_degree", cfg.decoder.sh_degree}};
  doc["proposal"] = {{"base_res", cfg.proposal.base_res},
                     {"num_scales", cfg.proposal.num_scales},
                     {"features", cfg.proposal.features},
                     {"hidden_layers", cfg.proposal.decoder.hidden_layers},
                     {"hidden_width", cfg.proposal.decoder.hidden_width}};
  doc["render"] = {{"n_coarse", cfg.render.n_coarse},
                   {"n_fine", cfg.render.n_fine},
                   {"near", cfg.render.near},
                   {"far", cfg.render.far}};
  if (cfg.background)
    doc["background"] = {cfg.background->x, cfg.background->y, cfg.background->z};
  return doc.dump(2);
}

}  // namespace dynfield
