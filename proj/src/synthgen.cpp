#include "dynfield/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dynfield::synthgen {

namespace {

constexpr double kGravity = 9.8;
constexpr double kRestitution = 0.6;
constexpr double kRayEps = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Hit {
  double t = kInf;
  Vec3d normal;
  Vec3d albedo;
  HitKind kind = HitKind::None;
  int actor_index = -1;
};

bool intersect_sphere(const Vec3d& o, const Vec3d& d, const Sphere& s, double& t_out,
                      Vec3d& n_out) {
  Vec3d oc = o - s.center;
  double b = oc.dot(d);
  double c = oc.norm2() - s.radius * s.radius;
  double disc = b * b - c;
  if (disc < 0) return false;
  double sq = std::sqrt(disc);
  double t = -b - sq;
  if (t < kRayEps) t = -b + sq;
  if (t < kRayEps) return false;
  t_out = t;
  n_out = (o + d * t - s.center) / s.radius;
  return true;
}

bool intersect_capsule(const Vec3d& o, const Vec3d& d, const Capsule& cap, double& t_out,
                       Vec3d& n_out) {
  Vec3d ba = cap.b - cap.a;
  Vec3d oa = o - cap.a;
  double baba = ba.dot(ba);
  double bard = ba.dot(d);
  double baoa = ba.dot(oa);
  double rdoa = d.dot(oa);
  double oaoa = oa.dot(oa);
  double a = baba - bard * bard;
  double b = baba * rdoa - baoa * bard;
  double c = baba * oaoa - baoa * baoa - cap.radius * cap.radius * baba;
  if (a > 1e-12) {
    double h = b * b - a * c;
    if (h >= 0) {
      double t = (-b - std::sqrt(h)) / a;
      double y = baoa + t * bard;
      if (t > kRayEps && y > 0 && y < baba) {
        t_out = t;
        Vec3d p = o + d * t;
        n_out = (p - cap.a - ba * (y / baba)) / cap.radius;
        return true;
      }
    }
  }
  // end caps
  double best = kInf;
  Vec3d n;
  double t;
  Vec3d nn;
  if (intersect_sphere(o, d, {cap.a, cap.radius}, t, nn) && t < best) {
    best = t;
    n = nn;
  }
  if (intersect_sphere(o, d, {cap.b, cap.radius}, t, nn) && t < best) {
    best = t;
    n = nn;
  }
  if (best == kInf) return false;
  t_out = best;
  n_out = n;
  return true;
}

bool intersect_aabb(const Vec3d& o, const Vec3d& d, const Vec3d& bmin, const Vec3d& bmax,
                    double& t_out, Vec3d& n_out) {
  double tmin = -kInf, tmax = kInf;
  int axis = -1;
  for (int i = 0; i < 3; ++i) {
    double oi = o[i], di = d[i], lo = bmin[i], hi = bmax[i];
    if (std::abs(di) < 1e-15) {
      if (oi < lo || oi > hi) return false;
      continue;
    }
    double t0 = (lo - oi) / di, t1 = (hi - oi) / di;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > tmin) {
      tmin = t0;
      axis = i;
    }
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  if (tmax < kRayEps) return false;
  double t = tmin > kRayEps ? tmin : tmax;
  if (t < kRayEps || axis < 0) return false;
  t_out = t;
  Vec3d n{0, 0, 0};
  double sign = d[axis] > 0 ? -1.0 : 1.0;
  if (axis == 0) n.x = sign;
  if (axis == 1) n.y = sign;
  if (axis == 2) n.z = sign;
  n_out = n;
  return true;
}

Vec3d ground_albedo(const SceneSpec& scene, double x, double z) {
  double ax = std::abs(x), az = std::abs(z);
  if (ax > scene.half_length || az > scene.half_width) return scene.apron_color;

  double lw = scene.line_width;
  // boundary lines, center line, center circle, center spot
  if (scene.half_length - ax < lw || scene.half_width - az < lw) return scene.line_color;
  if (ax < lw * 0.5) return scene.line_color;
  double rc = std::sqrt(x * x + z * z);
  if (std::abs(rc - 9.15) < lw * 0.5) return scene.line_color;
  if (rc < 0.25) return scene.line_color;

  long cx = long(std::floor(x / scene.checker_size));
  long cz = long(std::floor(z / scene.checker_size));
  return ((cx + cz) & 1) ? scene.grass_b : scene.grass_a;
}

Vec3d ball_albedo(const BallParams& ball, const Vec3d& normal) {
  int s = (normal.x > 0) + (normal.y > 0) + (normal.z > 0);
  return (s & 1) ? ball.color_b : ball.color_a;
}

// Piecewise ballistic arc of the ball's ground-contact point. Returns the
// bottom position and velocity at time t_sec.
void ball_at(const BallParams& ball, double t_sec, Vec3d& pos, Vec3d& vel) {
  Vec3d p = ball.start;
  Vec3d v = ball.velocity;
  double remaining = t_sec;
  const double v_stop = 0.15;  // below this vertical speed the ball rolls

  for (int bounce = 0; bounce < 64 && remaining > 0; ++bounce) {
    bool grounded = p.y <= 1e-9 && std::abs(v.y) < v_stop;
    if (grounded) {
      p.y = 0;
      v.y = 0;
      p += Vec3d{v.x, 0, v.z} * remaining;
      remaining = 0;
      break;
    }
    // time to ground contact on the current arc: p.y + v.y*tau - g/2*tau^2 = 0
    double disc = v.y * v.y + 2 * kGravity * p.y;
    double tau = (v.y + std::sqrt(std::max(disc, 0.0))) / kGravity;
    if (p.y <= 1e-9 && v.y > 0) {
      // leaving the ground; full arc time
      tau = 2 * v.y / kGravity;
    }
    if (tau >= remaining || tau <= 0) {
      p += v * remaining + Vec3d{0, -0.5 * kGravity, 0} * (remaining * remaining);
      v.y -= kGravity * remaining;
      remaining = 0;
      break;
    }
    p += v * tau + Vec3d{0, -0.5 * kGravity, 0} * (tau * tau);
    p.y = 0;
    v.y = -kRestitution * (v.y - kGravity * tau);
    remaining -= tau;
    if (v.y < v_stop) v.y = 0;
  }
  pos = p;
  vel = v;
}

}  // namespace

ActorState actor_state(const Actor& actor, double t, double duration_s) {
  ActorState state;
  state.kind = actor.kind;
  double t_sec = t * duration_s;

  if (actor.kind == Actor::Kind::Ball) {
    const auto& ball = actor.ball;
    Vec3d bottom, vel;
    ball_at(ball, t_sec, bottom, vel);
    state.spheres.push_back({bottom + Vec3d{0, ball.radius, 0}, ball.radius});
    state.albedo_primary = ball.color_a;
    state.albedo_secondary = ball.color_b;
    return state;
  }

  const auto& pl = actor.player;
  double phase = 2 * M_PI * pl.path_turns * t;
  Vec3d root;
  Vec3d facing;
  if (pl.circular) {
    double a = pl.heading + phase;
    root = pl.start + Vec3d{pl.path_radius * std::cos(a), 0, pl.path_radius * std::sin(a)};
    facing = Vec3d{-std::sin(a), 0, std::cos(a)};
  } else {
    Vec3d dir{std::cos(pl.heading), 0, std::sin(pl.heading)};
    root = pl.start + dir * (pl.path_radius * std::sin(phase));
    facing = dir;
  }

  state.spheres.push_back({root + Vec3d{0, 1.62, 0}, 0.11});  // head
  state.capsules.push_back({root + Vec3d{0, 0.85, 0}, root + Vec3d{0, 1.45, 0}, 0.17});  // torso

  Vec3d lateral = facing.cross(Vec3d{0, 1, 0}).normalized();
  double swing = pl.limb_amp * std::sin(2 * M_PI * pl.limb_freq * t_sec);
  for (int leg = 0; leg < 2; ++leg) {
    double side = leg == 0 ? 1.0 : -1.0;
    double angle = side * swing;
    Vec3d hip = root + lateral * (side * 0.09) + Vec3d{0, 0.85, 0};
    Vec3d leg_dir = facing * std::sin(angle) + Vec3d{0, -std::cos(angle), 0};
    state.capsules.push_back({hip, hip + leg_dir * 0.78, 0.07});
  }

  state.albedo_primary = pl.shirt;
  state.albedo_secondary = pl.skin;
  return state;
}

std::vector<ActorState> pose_actors(const SceneSpec& scene, double t) {
  std::vector<ActorState> states;
  states.reserve(scene.actors.size());
  for (const auto& a : scene.actors) states.push_back(actor_state(a, t, scene.duration_s));
  return states;
}

TraceResult trace_pixel(const SceneSpec& scene, const std::vector<ActorState>& actors,
                        const CameraModel& camera, double px, double py) {
  Ray ray = generate_ray(camera, px, py, 0.0);
  const Vec3d& o = ray.origin;
  const Vec3d& d = ray.direction;

  Hit hit;
  // ground plane y = 0
  if (d.y < -1e-15) {
    double t = -o.y / d.y;
    if (t > kRayEps && t < hit.t) {
      Vec3d p = o + d * t;
      hit = {t, {0, 1, 0}, ground_albedo(scene, p.x, p.z), HitKind::Ground, -1};
    }
  }
  for (const auto& box : scene.stadium) {
    double t;
    Vec3d n;
    if (intersect_aabb(o, d, box.min, box.max, t, n) && t < hit.t)
      hit = {t, n, box.color, HitKind::Stadium, -1};
  }
  for (size_t ai = 0; ai < actors.size(); ++ai) {
    const ActorState& st = actors[ai];
    HitKind kind = st.kind == Actor::Kind::Ball ? HitKind::Ball : HitKind::Player;
    for (size_t si = 0; si < st.spheres.size(); ++si) {
      double t;
      Vec3d n;
      if (intersect_sphere(o, d, st.spheres[si], t, n) && t < hit.t) {
        Vec3d albedo = st.albedo_secondary;
        if (st.kind == Actor::Kind::Ball) {
          BallParams bp;
          bp.color_a = st.albedo_primary;
          bp.color_b = st.albedo_secondary;
          albedo = ball_albedo(bp, n);
        }
        hit = {t, n, albedo, kind, int(ai)};
      }
    }
    for (size_t ci = 0; ci < st.capsules.size(); ++ci) {
      double t;
      Vec3d n;
      if (intersect_capsule(o, d, st.capsules[ci], t, n) && t < hit.t) {
        // torso keeps the shirt color, head and limbs the secondary
        Vec3d albedo = ci == 0 ? st.albedo_primary : st.albedo_secondary;
        hit = {t, n, albedo, kind, int(ai)};
      }
    }
  }

  TraceResult result;
  if (hit.kind == HitKind::None) {
    result.color = Vec3f(scene.sky);
    result.depth = std::numeric_limits<float>::infinity();
    result.kind = HitKind::None;
    return result;
  }
  Vec3d l = -scene.light_dir.normalized();
  double diffuse = std::max(0.0, hit.normal.dot(l));
  Vec3d c = hit.albedo * ((1 - scene.ambient) * diffuse + scene.ambient);
  result.color = Vec3f{float(clamp01(c.x)), float(clamp01(c.y)), float(clamp01(c.z))};
  result.depth = float(hit.t);
  result.kind = hit.kind;
  result.actor_index = hit.actor_index;
  return result;
}

namespace {

// Conservative pixel-space interval of a projected sphere; returns false if
// the sphere is entirely behind the camera.
bool project_sphere(const CameraModel& cam, const Sphere& s, double& px0, double& px1, double& py0,
                    double& py1) {
  Vec3d q = cam.world_to_cam(s.center);
  double depth = -q.z;
  if (depth <= -s.radius) return false;
  if (depth <= s.radius) {
    // straddles the image plane; full-frame conservative bound
    px0 = 0;
    px1 = cam.width;
    py0 = 0;
    py1 = cam.height;
    return true;
  }
  double denom = depth * depth - s.radius * s.radius;
  auto bounds_1d = [&](double a, double& lo, double& hi) {
    double sq = std::sqrt(std::max(a * a + denom, 0.0));
    lo = (a * depth - s.radius * sq) / denom;
    hi = (a * depth + s.radius * sq) / denom;
  };
  double ux0, ux1, uy0, uy1;
  bounds_1d(q.x, ux0, ux1);
  bounds_1d(q.y, uy0, uy1);
  px0 = cam.cx + cam.fx * ux0;
  px1 = cam.cx + cam.fx * ux1;
  // py = cy - fy * v
  py0 = cam.cy - cam.fy * uy1;
  py1 = cam.cy - cam.fy * uy0;
  return true;
}

Sphere bounding_sphere(const Capsule& c) {
  Vec3d mid = (c.a + c.b) * 0.5;
  return {mid, (c.b - c.a).norm() * 0.5 + c.radius};
}

}  // namespace

std::vector<BBox> ground_truth_boxes(const SceneSpec& scene,
                                     const std::vector<ActorState>& actors,
                                     const CameraModel& camera) {
  (void)scene;
  std::vector<BBox> boxes;
  for (const auto& st : actors) {
    double px0 = kInf, px1 = -kInf, py0 = kInf, py1 = -kInf;
    bool any = false;
    auto add = [&](const Sphere& s) {
      double a, b, c, d;
      if (!project_sphere(camera, s, a, b, c, d)) return;
      px0 = std::min(px0, a);
      px1 = std::max(px1, b);
      py0 = std::min(py0, c);
      py1 = std::max(py1, d);
      any = true;
    };
    for (const auto& s : st.spheres) add(s);
    for (const auto& c : st.capsules) add(bounding_sphere(c));
    if (!any) continue;

    // pixel i is covered when its center i+0.5 falls inside the interval
    int x0 = std::max(0, int(std::floor(px0 - 0.5)));
    int y0 = std::max(0, int(std::floor(py0 - 0.5)));
    int x1 = std::min(camera.width, int(std::ceil(px1 - 0.5)) + 1);
    int y1 = std::min(camera.height, int(std::ceil(py1 - 0.5)) + 1);
    if (x0 >= x1 || y0 >= y1) continue;
    boxes.push_back({x0, y0, x1, y1});
  }
  return boxes;
}

void render_frame(const SceneSpec& scene, const CameraModel& camera, double t, ImageBuffer& image,
                  DepthBuffer* depth, int workers) {
  image = ImageBuffer(camera.width, camera.height);
  if (depth) *depth = DepthBuffer(camera.width, camera.height);
  auto actors = pose_actors(scene, t);

  auto run_rows = [&](int y_begin, int y_end) {
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < camera.width; ++x) {
        TraceResult r = trace_pixel(scene, actors, camera, x + 0.5, y + 0.5);
        image.set_pixel(x, y, r.color);
        if (depth) depth->at(x, y) = r.depth;
      }
    }
  };

  workers = std::max(1, workers);
  if (workers == 1) {
    run_rows(0, camera.height);
    return;
  }
  std::vector<std::thread> pool;
  int rows = camera.height;
  for (int w = 0; w < workers; ++w) {
    int y0 = rows * w / workers, y1 = rows * (w + 1) / workers;
    pool.emplace_back(run_rows, y0, y1);
  }
  for (auto& th : pool) th.join();
}

void export_dataset(const SceneSpec& scene, const std::vector<CameraModel>& cameras,
                    int num_timesteps, const std::string& out_path, int workers) {
  if (num_timesteps < 1) throw std::runtime_error("export_dataset: need at least one timestep");
  fs::path root(out_path);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create " + root.string() + ": " + ec.message());

  json jcams = json::array();
  for (const auto& cam : cameras) {
    json jc{{"id", cam.id},       {"width", cam.width}, {"height", cam.height}, {"fx", cam.fx},
            {"fy", cam.fy},       {"cx", cam.cx},       {"cy", cam.cy},
            {"c2w", cam.c2w}};
    if (cam.eval_only) jc["eval"] = true;
    jcams.push_back(jc);
  }
  json doc{{"num_timesteps", num_timesteps},
           {"cameras", jcams},
           {"background", {float(scene.sky.x), float(scene.sky.y), float(scene.sky.z)}}};
  {
    std::ofstream out(root / "cameras.json");
    if (!out) throw std::runtime_error("cannot write " + (root / "cameras.json").string());
    out << doc.dump(2) << "\n";
  }

  json jboxes = json::array();
  for (const auto& cam : cameras) {
    char dir_name[32];
    snprintf(dir_name, sizeof(dir_name), "cam%03d", cam.id);
    fs::create_directories(root / "frames" / dir_name);
    fs::create_directories(root / "depth" / dir_name);
    for (int ti = 0; ti < num_timesteps; ++ti) {
      double t = num_timesteps > 1 ? double(ti) / (num_timesteps - 1) : 0.0;
      ImageBuffer image;
      DepthBuffer depth;
      render_frame(scene, cam, t, image, &depth, workers);
      write_png_rgb8(frame_image_path(out_path, cam.id, ti), image);
      write_pfm(frame_depth_path(out_path, cam.id, ti), depth);

      auto actors = pose_actors(scene, t);
      for (const auto& b : ground_truth_boxes(scene, actors, cam))
        jboxes.push_back(json{{"camera_id", cam.id},
                              {"time_index", ti},
                              {"x0", b.x0},
                              {"y0", b.y0},
                              {"x1", b.x1},
                              {"y1", b.y1}});
    }
  }
  std::ofstream bout(root / "boxes.json");
  if (!bout) throw std::runtime_error("cannot write " + (root / "boxes.json").string());
  bout << json{{"boxes", jboxes}}.dump(2) << "\n";
}

SceneSpec single_player_scene() {
  SceneSpec scene;
  Actor player;
  player.kind = Actor::Kind::Player;
  scene.actors.push_back(player);

  Actor ball;
  ball.kind = Actor::Kind::Ball;
  scene.actors.push_back(ball);

  // Stands: segmented boxes along all four sides.
  auto add_side = [&](bool along_x, double side_sign) {
    const int segments = 6;
    double margin0 = 12, depth = 8;
    double extent = along_x ? scene.half_length : scene.half_width;
    double offset = (along_x ? scene.half_width : scene.half_length) + margin0;
    const Vec3d palette[4] = {
        {0.55, 0.22, 0.22}, {0.22, 0.30, 0.55}, {0.58, 0.58, 0.62}, {0.72, 0.62, 0.30}};
    for (int i = 0; i < segments; ++i) {
      double a0 = -extent + 2 * extent * i / segments;
      double a1 = -extent + 2 * extent * (i + 1) / segments - 1.5;  // gap between segments
      double h = 9.0 + 5.0 * ((i * 7 + (side_sign > 0 ? 0 : 3)) % 4);
      StadiumBox box;
      Vec3d lo, hi;
      if (along_x) {
        lo = {a0, 0, side_sign * offset};
        hi = {a1, h, side_sign * (offset + depth)};
      } else {
        lo = {side_sign * offset, 0, a0};
        hi = {side_sign * (offset + depth), h, a1};
      }
      box.min = {std::min(lo.x, hi.x), 0, std::min(lo.z, hi.z)};
      box.max = {std::max(lo.x, hi.x), h, std::max(lo.z, hi.z)};
      box.color = palette[(i + (side_sign > 0 ? 0 : 2) + (along_x ? 0 : 1)) % 4];
      scene.stadium.push_back(box);
    }
  };
  add_side(true, 1);
  add_side(true, -1);
  add_side(false, 1);
  add_side(false, -1);
  return scene;
}

SceneSpec players_scene() {
  SceneSpec scene = single_player_scene();
  scene.actors.clear();

  struct Placement {
    Vec3d pos;
    double heading;
    bool circular;
    double radius;
  };
  const Placement placements[6] = {
      {{0, 0, 0}, 0.0, true, 1.2},      {{-45, 0, 0}, 1.6, false, 1.5},
      {{45, 0, 0}, -1.6, false, 1.5},   {{-15, 0, 10}, 0.8, true, 2.0},
      {{18, 0, -12}, 2.4, true, 1.6},   {{8, 0, 14}, -0.9, false, 2.5},
  };
  for (int i = 0; i < 6; ++i) {
    Actor a;
    a.kind = Actor::Kind::Player;
    a.player.start = placements[i].pos;
    a.player.heading = placements[i].heading;
    a.player.circular = placements[i].circular;
    a.player.path_radius = placements[i].radius;
    a.player.limb_freq = 1.6 + 0.3 * i;
    if (i % 2) a.player.shirt = {0.80, 0.15, 0.15};
    scene.actors.push_back(a);
  }

  Actor ball1;
  ball1.kind = Actor::Kind::Ball;
  ball1.ball.start = {1.0, 0, 0.5};
  ball1.ball.velocity = {4.0, 3.5, 1.0};
  scene.actors.push_back(ball1);

  Actor ball2;
  ball2.kind = Actor::Kind::Ball;
  ball2.ball.start = {-20, 0, 5};
  ball2.ball.velocity = {-2.0, 2.5, 2.0};
  scene.actors.push_back(ball2);
  return scene;
}

CameraRigSpec default_rig(RigKind kind) {
  CameraRigSpec spec;
  spec.kind = kind;
  switch (kind) {
    case RigKind::Closeup:
      spec.count = 30;
      spec.radius = 4.2;
      spec.height = 1.9;
      spec.look_at = {0, 1.0, 0};
      spec.width = 96;
      spec.height_px = 72;
      spec.hfov_deg = 55.0;
      spec.eval_count = 1;
      spec.eval_radius = 4.2;
      spec.eval_height = 1.9;
      spec.eval_width = 96;
      spec.eval_height_px = 72;
      spec.eval_hfov_deg = 55.0;
      break;
    case RigKind::Broadcast:
      spec.count = 20;
      spec.radius = 68.0;
      spec.height = 14.0;
      spec.look_at = {0, 1.0, 0};
      spec.width = 160;
      spec.height_px = 90;
      spec.hfov_deg = 24.0;
      spec.eval_count = 1;
      spec.eval_radius = 68.0;
      spec.eval_height = 14.0;
      spec.eval_width = 160;
      spec.eval_height_px = 90;
      spec.eval_hfov_deg = 24.0;
      break;
    case RigKind::Stadium:
      spec.count = 30;
      spec.radius = 88.0;
      spec.height = 32.0;
      spec.look_at = {0, 0, 0};
      spec.width = 256;
      spec.height_px = 144;
      spec.hfov_deg = 74.0;
      spec.eval_count = 6;
      spec.eval_radius = 5.0;
      spec.eval_height = 2.0;
      spec.eval_width = 96;
      spec.eval_height_px = 72;
      spec.eval_hfov_deg = 55.0;
      break;
  }
  return spec;
}

std::optional<RigKind> rig_from_name(const std::string& name) {
  if (name == "closeup") return RigKind::Closeup;
  if (name == "broadcast") return RigKind::Broadcast;
  if (name == "stadium") return RigKind::Stadium;
  return std::nullopt;
}

std::vector<CameraModel> build_rig(const CameraRigSpec& spec) {
  if (spec.count < 1) throw std::runtime_error("build_rig: count must be >= 1");
  std::vector<CameraModel> cams;
  for (int i = 0; i < spec.count; ++i) {
    double a = 2 * M_PI * i / spec.count;
    CameraModel cam;
    cam.id = i;
    cam.width = spec.width;
    cam.height = spec.height_px;
    set_intrinsics_from_hfov(cam, spec.hfov_deg);
    Vec3d eye{spec.radius * std::cos(a), spec.height, spec.radius * std::sin(a)};
    cam.c2w = look_at(eye, spec.look_at);
    cams.push_back(cam);
  }
  // Eval cameras sit at half-step offsets so they never coincide with a
  // training position. For the stadium rig these are close-up views near the
  // dynamic content.
  Vec3d eval_target = spec.kind == RigKind::Stadium ? Vec3d{0, 1.0, 0} : spec.look_at;
  for (int i = 0; i < spec.eval_count; ++i) {
    double a = 2 * M_PI * i / std::max(1, spec.eval_count) + M_PI / spec.count;
    CameraModel cam;
    cam.id = spec.count + i;
    cam.width = spec.eval_width;
    cam.height = spec.eval_height_px;
    set_intrinsics_from_hfov(cam, spec.eval_hfov_deg);
    Vec3d eye{spec.eval_radius * std::cos(a), spec.eval_height, spec.eval_radius * std::sin(a)};
    cam.c2w = look_at(eye, eval_target);
    cam.eval_only = true;
    cams.push_back(cam);
  }
  return cams;
}

SceneSpec scene_from_json(const std::string& json_text) {
  json doc = json::parse(json_text);
  std::string preset = doc.value("preset", "single_player");
  SceneSpec scene = preset == "players" ? players_scene() : single_player_scene();

  auto vec3 = [](const json& j) { return Vec3d{j.at(0), j.at(1), j.at(2)}; };
  if (doc.contains("half_length")) scene.half_length = doc["half_length"];
  if (doc.contains("half_width")) scene.half_width = doc["half_width"];
  if (doc.contains("duration_s")) scene.duration_s = doc["duration_s"];
  if (doc.contains("sky")) scene.sky = vec3(doc["sky"]);
  if (doc.contains("ambient")) scene.ambient = doc["ambient"];
  if (doc.contains("light_dir")) scene.light_dir = vec3(doc["light_dir"]);
  if (doc.contains("checker_size")) scene.checker_size = doc["checker_size"];
  if (scene.light_dir.y >= 0)
    throw std::runtime_error("scene light_dir must point downward (negative y)");
  if (scene.half_length <= 0 || scene.half_width <= 0)
    throw std::runtime_error("scene extents must be positive");
  return scene;
}

}  // namespace dynfield::synthgen
