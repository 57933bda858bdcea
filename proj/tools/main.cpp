#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "dynfield/cli.hpp"

using namespace dynfield::cli;

int main(int argc, char** argv) {
  CLI::App app{"dynfield: dynamic radiance fields for synthetic multi-camera scenes"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* cmd_g = app.add_subcommand("gen", "generate a synthetic multi-camera dataset");
  cmd_g->add_option("--scene", gen.scene, "single_player | players");
  cmd_g->add_option("--rig", gen.rig, "closeup | broadcast | stadium");
  cmd_g->add_option("--timesteps", gen.timesteps, "number of timesteps");
  cmd_g->add_option("--res", gen.res, "training camera resolution WxH");
  cmd_g->add_option("--cameras", gen.camera_count, "override training camera count");
  cmd_g->add_option("--eval-cameras", gen.eval_count, "override eval camera count");
  cmd_g->add_option("--scene-json", gen.scene_json, "SceneSpec override file");
  cmd_g->add_option("--out", gen.out, "output dataset directory")->required();
  cmd_g->add_option("--workers", gen.workers, "worker threads (0: all cores)");

  TrainOptions tr;
  auto* cmd_t = app.add_subcommand("train", "train a field on a dataset");
  cmd_t->add_option("--dataset", tr.dataset, "dataset directory")->required();
  cmd_t->add_option("--config", tr.config, "TrainConfig JSON file");
  cmd_t->add_option("--out", tr.out, "run output directory");
  int t_iters = -1;
  std::string t_sampler, t_field;
  int64_t t_seed = -1;
  int t_workers = -1;
  cmd_t->add_option("--iterations", t_iters, "override iteration count");
  cmd_t->add_option("--sampler", t_sampler, "uniform | isg");
  cmd_t->add_option("--field", t_field, "hexplane | temporal_hash");
  cmd_t->add_option("--seed", t_seed, "RNG seed");
  cmd_t->add_option("--workers", t_workers, "worker threads (0: all cores)");

  RenderOptions rn;
  auto* cmd_r = app.add_subcommand("render", "render orbit frames or dataset cameras");
  cmd_r->add_option("--checkpoint", rn.checkpoint, "checkpoint .dfck")->required();
  cmd_r->add_option("--out", rn.out, "output directory");
  cmd_r->add_option("--dataset", rn.dataset, "dataset for camera re-render");
  int r_camera = -1;
  cmd_r->add_option("--camera", r_camera, "camera id for dataset re-render");
  std::vector<double> r_center;
  cmd_r->add_option("--center", r_center, "orbit center (3 values)")->expected(3);
  cmd_r->add_option("--radius", rn.radius, "orbit radius");
  cmd_r->add_option("--height", rn.height, "orbit height above the center");
  cmd_r->add_option("--frames", rn.frames, "frame count");
  cmd_r->add_option("--time-begin", rn.time_begin, "start of the time range");
  cmd_r->add_option("--time-end", rn.time_end, "end of the time range");
  cmd_r->add_option("--width", rn.width, "image width");
  cmd_r->add_option("--height-px", rn.height_px, "image height");
  cmd_r->add_option("--hfov", rn.hfov_deg, "horizontal fov, degrees");
  cmd_r->add_option("--workers", rn.workers, "worker threads (0: all cores)");

  EvalOptions ev;
  auto* cmd_e = app.add_subcommand("eval", "evaluate a checkpoint against held-out frames");
  cmd_e->add_option("--dataset", ev.dataset, "dataset directory")->required();
  cmd_e->add_option("--checkpoint", ev.checkpoint, "checkpoint .dfck")->required();
  cmd_e->add_option("--out", ev.out, "report.json path");
  cmd_e->add_option("--margin", ev.margin, "focus box expansion factor");
  cmd_e->add_option("--camera", ev.cameras, "camera ids (default: dataset eval cameras)");
  cmd_e->add_option("--image-dir", ev.image_dir, "also write predicted frames here");
  cmd_e->add_option("--workers", ev.workers, "worker threads (0: all cores)");

  CheckGradOptions cg;
  auto* cmd_c = app.add_subcommand("check-grad", "finite-difference gradient verification");
  cmd_c->add_option("--kind", cg.kind, "hexplane | temporal_hash | both");
  cmd_c->add_option("--seed", cg.seed, "base seed");
  cmd_c->add_option("--seeds", cg.num_seeds, "number of seeds");
  cmd_c->add_option("--params", cg.params_per_seed, "parameters checked per seed");
  cmd_c->add_flag("--corrupt", cg.corrupt, "corrupt one gradient (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cmd_g) return cmd_gen(gen);
    if (*cmd_t) {
      if (t_iters >= 0) tr.iterations = t_iters;
      if (!t_sampler.empty()) tr.sampler = t_sampler;
      if (!t_field.empty()) tr.field_kind = t_field;
      if (t_seed >= 0) tr.seed = uint32_t(t_seed);
      if (t_workers >= 0) tr.workers = t_workers;
      return cmd_train(tr);
    }
    if (*cmd_r) {
      if (r_camera >= 0) rn.camera = r_camera;
      if (r_center.size() == 3) rn.center = {r_center[0], r_center[1], r_center[2]};
      return cmd_render(rn);
    }
    if (*cmd_e) return cmd_eval(ev);
    if (*cmd_c) return cmd_check_grad(cg);
  } catch (const std::exception& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
