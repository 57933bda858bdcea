#include "dynfield/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynfield/gradcheck.hpp"
#include "dynfield/metrics.hpp"
#include "dynfield/synthgen.hpp"
#include "dynfield/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynfield::cli {

namespace {

constexpr int kUsageError = 2;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_resolution(const std::string& res, int& w, int& h) {
  return sscanf(res.c_str(), "%dx%d", &w, &h) == 2 && w > 0 && h > 0;
}

}  // namespace

int cmd_gen(const GenOptions& opt) {
  if (opt.out.empty()) {
    fprintf(stderr, "gen: missing --out directory\n");
    return kUsageError;
  }
  auto rig_kind = synthgen::rig_from_name(opt.rig);
  if (!rig_kind) {
    fprintf(stderr, "gen: unknown rig '%s' (closeup|broadcast|stadium)\n", opt.rig.c_str());
    return kUsageError;
  }
  if (opt.scene != "single_player" && opt.scene != "players") {
    fprintf(stderr, "gen: unknown scene '%s' (single_player|players)\n", opt.scene.c_str());
    return kUsageError;
  }
  if (opt.timesteps < 1) {
    fprintf(stderr, "gen: --timesteps must be >= 1\n");
    return kUsageError;
  }

  synthgen::SceneSpec scene;
  if (!opt.scene_json.empty()) {
    scene = synthgen::scene_from_json(read_text_file(opt.scene_json));
  } else {
    scene = opt.scene == "players" ? synthgen::players_scene() : synthgen::single_player_scene();
  }

  synthgen::CameraRigSpec rig = synthgen::default_rig(*rig_kind);
  if (opt.camera_count > 0) rig.count = opt.camera_count;
  if (opt.eval_count >= 0) rig.eval_count = opt.eval_count;
  if (!opt.res.empty()) {
    int w, h;
    if (!parse_resolution(opt.res, w, h)) {
      fprintf(stderr, "gen: bad --res '%s', expected WxH\n", opt.res.c_str());
      return kUsageError;
    }
    rig.width = w;
    rig.height_px = h;
  }

  auto cameras = synthgen::build_rig(rig);
  synthgen::export_dataset(scene, cameras, opt.timesteps, opt.out, opt.workers);
  printf("gen: wrote %zu cameras x %d timesteps to %s\n", cameras.size(), opt.timesteps,
         opt.out.c_str());
  return 0;
}

int cmd_train(const TrainOptions& opt) {
  if (opt.dataset.empty() || !fs::exists(fs::path(opt.dataset) / "cameras.json")) {
    fprintf(stderr, "train: missing dataset directory '%s'\n", opt.dataset.c_str());
    return kUsageError;
  }
  TrainConfig cfg;
  if (!opt.config.empty()) cfg = train_config_from_json(read_text_file(opt.config));
  if (opt.iterations) cfg.iterations = *opt.iterations;
  if (opt.sampler) cfg.sampler = *opt.sampler;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.workers) cfg.workers = *opt.workers;
  if (opt.field_kind) {
    if (*opt.field_kind == "hexplane")
      cfg.field.kind = FieldKind::Hexplane;
    else if (*opt.field_kind == "temporal_hash")
      cfg.field.kind = FieldKind::TemporalHash;
    else {
      fprintf(stderr, "train: unknown field kind '%s'\n", opt.field_kind->c_str());
      return kUsageError;
    }
  }

  DynamicDataset ds = load_dataset(opt.dataset);
  fs::create_directories(opt.out);
  {
    std::ofstream cfg_out(fs::path(opt.out) / "train_config.json");
    cfg_out << train_config_to_json(cfg) << "\n";
  }
  TrainResult result =
      train(ds, cfg, (fs::path(opt.out) / "train_log.jsonl").string(), opt.out);
  printf("train: %d iterations, final loss %.6f, checkpoint %s\n", cfg.iterations,
         result.log.empty() ? 0.0 : result.log.back().loss,
         (fs::path(opt.out) / "final.dfck").string().c_str());
  return 0;
}

int cmd_render(const RenderOptions& opt) {
  if (opt.checkpoint.empty() || !fs::exists(opt.checkpoint)) {
    fprintf(stderr, "render: missing checkpoint '%s'\n", opt.checkpoint.c_str());
    return kUsageError;
  }
  int num_timesteps = 1;
  Model<float> model = load_checkpoint(opt.checkpoint, &num_timesteps);
  fs::create_directories(opt.out);

  if (!opt.dataset.empty()) {
    DynamicDataset ds = load_dataset(opt.dataset);
    if (!opt.camera) {
      fprintf(stderr, "render: --camera required with --dataset\n");
      return kUsageError;
    }
    const CameraModel* cam = ds.camera_by_id(*opt.camera);
    if (!cam) {
      fprintf(stderr, "render: camera %d not in dataset\n", *opt.camera);
      return kUsageError;
    }
    for (int t = 0; t < ds.num_timesteps; ++t) {
      const Frame* frame = ds.frame_at(cam->id, t);
      ImageBuffer img = render_view(model, *cam, frame->time, model.cfg.render.near,
                                    model.cfg.render.far, opt.workers);
      char name[64];
      snprintf(name, sizeof(name), "cam%03d_t%04d.png", cam->id, t);
      write_png_rgb8((fs::path(opt.out) / name).string(), img);
    }
    printf("render: %d frames to %s\n", ds.num_timesteps, opt.out.c_str());
    return 0;
  }

  // Orbit path around a center, constant height, times spanning the range.
  for (int i = 0; i < opt.frames; ++i) {
    double a = 2 * M_PI * i / std::max(1, opt.frames);
    double tt = opt.frames > 1 ? double(i) / (opt.frames - 1) : 0.0;
    double time = opt.time_begin + (opt.time_end - opt.time_begin) * tt;

    CameraModel cam;
    cam.id = i;
    cam.width = opt.width;
    cam.height = opt.height_px;
    set_intrinsics_from_hfov(cam, opt.hfov_deg);
    Vec3d center{opt.center[0], opt.center[1], opt.center[2]};
    Vec3d eye = center + Vec3d{opt.radius * std::cos(a), opt.height, opt.radius * std::sin(a)};
    cam.c2w = look_at(eye, center);

    ImageBuffer img =
        render_view(model, cam, time, model.cfg.render.near, model.cfg.render.far, opt.workers);
    char name[64];
    snprintf(name, sizeof(name), "orbit_%04d.png", i);
    write_png_rgb8((fs::path(opt.out) / name).string(), img);
  }
  printf("render: %d orbit frames to %s\n", opt.frames, opt.out.c_str());
  return 0;
}

int cmd_eval(const EvalOptions& opt) {
  if (opt.dataset.empty() || !fs::exists(fs::path(opt.dataset) / "cameras.json")) {
    fprintf(stderr, "eval: missing dataset directory '%s'\n", opt.dataset.c_str());
    return kUsageError;
  }
  if (opt.checkpoint.empty() || !fs::exists(opt.checkpoint)) {
    fprintf(stderr, "eval: missing checkpoint '%s'\n", opt.checkpoint.c_str());
    return kUsageError;
  }
  DynamicDataset ds = load_dataset(opt.dataset);
  Model<float> model = load_checkpoint(opt.checkpoint);

  std::vector<int> cameras = opt.cameras;
  if (cameras.empty()) cameras = ds.eval_camera_ids();
  if (cameras.empty()) {
    fprintf(stderr, "eval: dataset has no eval cameras; pass --camera\n");
    return kUsageError;
  }

  bool have_boxes = false;
  for (const auto& f : ds.frames) have_boxes = have_boxes || !f.boxes.empty();
  if (!have_boxes)
    fprintf(stderr, "eval: warning: no boxes found, focused metrics will be null\n");

  std::vector<EvalFrame> frames;
  for (int cam_id : cameras) {
    const CameraModel* cam = ds.camera_by_id(cam_id);
    if (!cam) {
      fprintf(stderr, "eval: camera %d not in dataset\n", cam_id);
      return kUsageError;
    }
    for (int t = 0; t < ds.num_timesteps; ++t) {
      const Frame* frame = ds.frame_at(cam_id, t);
      EvalFrame ef;
      ef.camera_id = cam_id;
      ef.time_index = t;
      ef.gt = frame->image;
      ef.boxes = frame->boxes;
      ef.pred = render_view(model, *cam, frame->time, model.cfg.render.near, model.cfg.render.far,
                            opt.workers);
      if (opt.write_images && !opt.image_dir.empty()) {
        fs::create_directories(opt.image_dir);
        char name[64];
        snprintf(name, sizeof(name), "pred_cam%03d_t%04d.png", cam_id, t);
        write_png_rgb8((fs::path(opt.image_dir) / name).string(), ef.pred);
      }
      frames.push_back(std::move(ef));
    }
  }

  MetricReport report = evaluate(frames, opt.margin);
  write_report(report, opt.out);
  printf("eval: psnr %.3f ssim %.4f", report.mean_psnr, report.mean_ssim);
  if (report.mean_psnr_focused)
    printf(" | focused psnr %.3f ssim %.4f", *report.mean_psnr_focused,
           *report.mean_ssim_focused);
  printf(" -> %s\n", opt.out.c_str());
  return 0;
}

int cmd_check_grad(const CheckGradOptions& opt) {
  std::vector<FieldKind> kinds;
  if (opt.kind == "hexplane")
    kinds = {FieldKind::Hexplane};
  else if (opt.kind == "temporal_hash")
    kinds = {FieldKind::TemporalHash};
  else if (opt.kind == "both")
    kinds = {FieldKind::Hexplane, FieldKind::TemporalHash};
  else {
    fprintf(stderr, "check-grad: unknown kind '%s'\n", opt.kind.c_str());
    return kUsageError;
  }

  bool all_passed = true;
  for (FieldKind kind : kinds) {
    GradCheckConfig cfg;
    cfg.kind = kind;
    cfg.seed = opt.seed;
    cfg.num_seeds = opt.num_seeds;
    cfg.params_per_seed = opt.params_per_seed;
    cfg.corrupt = opt.corrupt;
    GradCheckResult result = check_gradients(cfg);
    printf("check-grad %-13s: %s (%d checked, %d failed, max rel err %.3e)\n",
           field_kind_name(kind), result.passed() ? "passed" : "FAILED", result.checked,
           result.failed, result.max_rel_err);
    for (const auto& f : result.failures) printf("  %s\n", f.c_str());
    all_passed = all_passed && result.passed();
  }
  return all_passed ? 0 : 1;
}

}  // namespace dynfield::cli
