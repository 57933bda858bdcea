#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dynfield::cli {

struct GenOptions {
  std::string scene = "single_player";  // single_player | players
  std::string rig = "closeup";          // closeup | broadcast | stadium
  int timesteps = 8;
  std::string res;        // "WxH" override for training cameras
  std::string out;
  std::string scene_json;  // optional SceneSpec override file
  int camera_count = 0;    // 0: rig default
  int eval_count = -1;     // -1: rig default
  int workers = 0;
};

struct TrainOptions {
  std::string dataset;
  std::string config;  // JSON TrainConfig file
  std::string out = "runs/train";
  std::optional<int> iterations;
  std::optional<std::string> sampler;
  std::optional<uint32_t> seed;
  std::optional<int> workers;
  std::optional<std::string> field_kind;
};

struct RenderOptions {
  std::string checkpoint;
  std::string out = "runs/render";
  std::string dataset;       // re-render this dataset's cameras when set
  std::optional<int> camera; // camera id for dataset re-render
  // orbit path (normalized scene units)
  std::array<double, 3> center = {0, 0, 0};
  double radius = 0.8;
  double height = 0.3;
  int frames = 24;
  double time_begin = 0.0;
  double time_end = 1.0;
  int width = 96;
  int height_px = 72;
  double hfov_deg = 55.0;
  int workers = 0;
};

struct EvalOptions {
  std::string dataset;
  std::string checkpoint;
  std::string out = "report.json";
  double margin = 1.5;
  std::vector<int> cameras;  // empty: dataset eval cameras
  std::string boxes;         // external boxes.json override
  int workers = 0;
  bool write_images = false;
  std::string image_dir;
};

struct CheckGradOptions {
  std::string kind = "both";  // hexplane | temporal_hash | both
  uint32_t seed = 0;
  int num_seeds = 5;
  int params_per_seed = 20;
  bool corrupt = false;
};

int cmd_gen(const GenOptions& opt);
int cmd_train(const TrainOptions& opt);
int cmd_render(const RenderOptions& opt);
int cmd_eval(const EvalOptions& opt);
int cmd_check_grad(const CheckGradOptions& opt);

}  // namespace dynfield::cli
