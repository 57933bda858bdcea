#include <cmath>
#include <random>

#include "doctest.h"
#include "dynfield/field.hpp"

using namespace dynfield;

namespace {

// Independent interpolation oracle: explicit weighted sum of the 4 corners.
double bilinear_oracle(const std::vector<double>& values, int ra, int rb, int F, double u,
                       double v, int k) {
  u = std::clamp(u, 0.0, 1.0) * (ra - 1);
  v = std::clamp(v, 0.0, 1.0) * (rb - 1);
  int i = std::min(int(u), ra - 2);
  int j = std::min(int(v), rb - 2);
  double fu = u - i, fv = v - j;
  auto at = [&](int a, int b) { return values[(size_t(a) * rb + b) * F + k]; };
  return (1 - fu) * (1 - fv) * at(i, j) + (1 - fu) * fv * at(i, j + 1) +
         fu * (1 - fv) * at(i + 1, j) + fu * fv * at(i + 1, j + 1);
}

PlaneGrid<double> make_plane(const std::vector<double>& values, int ra, int rb, int F) {
  PlaneGrid<double> g;
  g.res_a = ra;
  g.res_b = rb;
  g.channels = F;
  g.values = values.data();
  return g;
}

HexplaneConfig tiny_hexplane_config() {
  HexplaneConfig cfg;
  cfg.base_res = 4;
  cfg.num_scales = 2;
  cfg.features = 2;
  cfg.time_res = 3;
  cfg.decoder.hidden_layers = 2;
  cfg.decoder.hidden_width = 16;
  return cfg;
}

}  // namespace

TEST_CASE("bilinear_sample is exact at vertices") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> uni(-1, 1);
  int ra = 5, rb = 7, F = 3;
  std::vector<double> values(size_t(ra) * rb * F);
  for (auto& v : values) v = uni(rng);
  PlaneGrid<double> g = make_plane(values, ra, rb, F);

  for (int i = 0; i < ra; ++i)
    for (int j = 0; j < rb; ++j) {
      double out[3];
      bilinear_sample(g, double(i) / (ra - 1), double(j) / (rb - 1), out);
      for (int k = 0; k < F; ++k)
        CHECK(out[k] == doctest::Approx(values[(size_t(i) * rb + j) * F + k]).epsilon(1e-12));
    }
}

TEST_CASE("bilinear_sample at a cell center equals the corner mean") {
  int ra = 3, rb = 3, F = 1;
  std::vector<double> values = {1, 2, 5, 3, 7, 11, 13, 17, 19};
  PlaneGrid<double> g = make_plane(values, ra, rb, F);
  double out;
  // center of cell (0,0): u=v=0.25 maps to grid coords (0.5, 0.5)
  bilinear_sample(g, 0.25, 0.25, &out);
  CHECK(out == doctest::Approx((1 + 2 + 3 + 7) / 4.0).epsilon(1e-12));
}

TEST_CASE("bilinear_sample matches the weighted-sum oracle on a random 5x7 grid") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> uni(-2, 2);
  int ra = 5, rb = 7, F = 2;
  std::vector<double> values(size_t(ra) * rb * F);
  for (auto& v : values) v = uni(rng);
  PlaneGrid<double> g = make_plane(values, ra, rb, F);

  std::uniform_real_distribution<double> coord(-0.2, 1.2);  // exercise clamping too
  for (int trial = 0; trial < 500; ++trial) {
    double u = coord(rng), v = coord(rng);
    double out[2];
    bilinear_sample(g, u, v, out);
    for (int k = 0; k < F; ++k)
      CHECK(out[k] == doctest::Approx(bilinear_oracle(values, ra, rb, F, u, v, k)).epsilon(1e-12));
  }
}

TEST_CASE("hexplane_features: all-ones planes give all-ones features") {
  Hexplane<double> field;
  field.build(tiny_hexplane_config());
  for (int s = 0; s < field.cfg.num_scales; ++s)
    for (int p = 0; p < 6; ++p) {
      PlaneGrid<double> g = field.plane(s, p);
      double* v = field.params.data() + field.plane_offsets[s][p];
      for (size_t i = 0; i < g.size(); ++i) v[i] = 1.0;
    }
  double feat[4];
  field.features({0.3, -0.7, 1.2}, 0.5, feat);
  for (int i = 0; i < 4; ++i) CHECK(feat[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hexplane_features: a zero plane zeroes its scale") {
  Hexplane<double> field;
  field.build(tiny_hexplane_config());
  field.init(3);
  // zero the xz plane of scale 1
  double* v = field.params.data() + field.plane_offsets[1][int(AxisPair::XZ)];
  PlaneGrid<double> g = field.plane(1, int(AxisPair::XZ));
  for (size_t i = 0; i < g.size(); ++i) v[i] = 0.0;

  double feat[4];
  field.features({0.4, 0.1, -0.3}, 0.25, feat);
  CHECK(feat[2] == 0.0);
  CHECK(feat[3] == 0.0);
  CHECK(feat[0] != 0.0);  // scale 0 untouched
}

TEST_CASE("hexplane_features matches a brute-force recomputation") {
  Hexplane<double> field;
  field.build(tiny_hexplane_config());
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> uni(0.2, 1.5);
  for (auto& v : field.params.values) v = uni(rng);

  std::uniform_real_distribution<double> pos(-1.9, 1.9);
  std::uniform_real_distribution<double> tdist(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Vec3<double> c{pos(rng), pos(rng), pos(rng)};
    double t = tdist(rng);
    double feat[4];
    field.features(c, t, feat);

    // oracle: raw plane arrays + the independent bilinear oracle
    double u[4] = {(c.x + 2) / 4, (c.y + 2) / 4, (c.z + 2) / 4, t};
    const int axes[6][2] = {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}};
    for (int s = 0; s < field.cfg.num_scales; ++s) {
      for (int k = 0; k < field.cfg.features; ++k) {
        double prod = 1.0;
        for (int p = 0; p < 6; ++p) {
          PlaneGrid<double> g = field.plane(s, p);
          std::vector<double> vals(g.values, g.values + g.size());
          prod *= bilinear_oracle(vals, g.res_a, g.res_b, g.channels, u[axes[p][0]],
                                  u[axes[p][1]], k);
        }
        CHECK(feat[s * field.cfg.features + k] == doctest::Approx(prod).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("hexplane_features is multilinear in a single plane") {
  Hexplane<double> field;
  field.build(tiny_hexplane_config());
  field.init(17);
  double feat_before[4];
  Vec3<double> c{0.5, -0.4, 0.9};
  field.features(c, 0.7, feat_before);

  const double alpha = 2.75;
  double* v = field.params.data() + field.plane_offsets[0][int(AxisPair::YZ)];
  PlaneGrid<double> g = field.plane(0, int(AxisPair::YZ));
  for (size_t i = 0; i < g.size(); ++i) v[i] *= alpha;

  double feat_after[4];
  field.features(c, 0.7, feat_after);
  for (int k = 0; k < 2; ++k) {
    CHECK(feat_after[k] == doctest::Approx(alpha * feat_before[k]).epsilon(1e-12));
    CHECK(feat_after[2 + k] == doctest::Approx(feat_before[2 + k]).epsilon(1e-12));
  }
}

TEST_CASE("identity time planes make the field static") {
  Hexplane<double> field;
  field.build(tiny_hexplane_config());
  field.init(23);  // init leaves time planes at 1
  Vec3<double> c{-0.8, 0.2, 0.6};
  double f0[4], f1[4], fh[4];
  field.features(c, 0.0, f0);
  field.features(c, 1.0, f1);
  field.features(c, 0.37, fh);
  for (int k = 0; k < 4; ++k) {
    CHECK(f0[k] == doctest::Approx(f1[k]).epsilon(1e-12));
    CHECK(f0[k] == doctest::Approx(fh[k]).epsilon(1e-12));
  }
}

TEST_CASE("hash_features: window covering the whole vector is time-independent") {
  TemporalHashConfig cfg;
  cfg.levels = 2;
  cfg.base_res = 4;
  cfg.log2_table = 6;
  cfg.window = 3;
  cfg.time_positions = 1;  // entry_dim == window
  cfg.decoder.hidden_width = 8;
  cfg.decoder.hidden_layers = 1;
  TemporalHash<double> field;
  field.build(cfg);
  field.init(5);
  REQUIRE(cfg.entry_dim() == 3);

  Vec3<double> c{0.3, 0.9, -0.5};
  double f0[6], f1[6];
  field.features(c, 0.0, f0);
  field.features(c, 0.83, f1);
  for (int k = 0; k < 6; ++k) CHECK(f0[k] == f1[k]);
}

TEST_CASE("hash_features: t=0 reads the window at offset 0 and t=0.5 blends") {
  TemporalHashConfig cfg;
  cfg.levels = 1;
  cfg.base_res = 4;
  cfg.log2_table = 10;
  cfg.window = 2;
  cfg.time_positions = 3;  // offsets 0,1,2; entry_dim 4
  TemporalHash<double> field;
  field.build(cfg);
  field.init(8);

  std::mt19937 rng(4);
  std::uniform_real_distribution<double> pos(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    Vec3<double> c{pos(rng), pos(rng), pos(rng)};

    // brute-force oracle: hash each corner explicitly and blend windows
    double p01[3] = {(c.x + 2) / 4, (c.y + 2) / 4, (c.z + 2) / 4};
    int res = cfg.base_res;
    int i0[3];
    double fr[3];
    for (int d = 0; d < 3; ++d) {
      double x = std::clamp(p01[d], 0.0, 1.0) * (res - 1);
      i0[d] = std::min(int(x), res - 2);
      fr[d] = x - i0[d];
    }
    auto oracle = [&](double t, int k) {
      double tau = t * (cfg.time_positions - 1);
      int o0 = std::min(int(tau), cfg.time_positions - 2);
      double tf = tau - o0;
      double acc = 0;
      for (int corner = 0; corner < 8; ++corner) {
        uint32_t cx = uint32_t(i0[0] + (corner & 1));
        uint32_t cy = uint32_t(i0[1] + ((corner >> 1) & 1));
        uint32_t cz = uint32_t(i0[2] + ((corner >> 2) & 1));
        uint32_t hash = (cx * 1u) ^ (cy * 2654435761u) ^ (cz * 805459861u);
        hash &= (1u << cfg.log2_table) - 1;
        double w = ((corner & 1) ? fr[0] : 1 - fr[0]) * (((corner >> 1) & 1) ? fr[1] : 1 - fr[1]) *
                   (((corner >> 2) & 1) ? fr[2] : 1 - fr[2]);
        const double* e = field.params.data() + field.level_offsets[0] +
                          size_t(hash) * cfg.entry_dim();
        acc += w * ((1 - tf) * e[o0 + k] + tf * e[o0 + 1 + k]);
      }
      return acc;
    };

    double f0[2], fh[2];
    field.features(c, 0.0, f0);
    field.features(c, 0.5, fh);
    for (int k = 0; k < 2; ++k) {
      CHECK(f0[k] == doctest::Approx(oracle(0.0, k)).epsilon(1e-12));
      CHECK(fh[k] == doctest::Approx(oracle(0.5, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("decode: zero parameters give softplus(0) density and mid-gray") {
  ParamStore<double> params;
  DecoderMLP<double> dec;
  DecoderConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 8;
  dec.build(params, 4, cfg, "dec");
  // params default to zero
  double feat[4] = {0.3, -0.2, 0.9, 0.1};
  FieldSample<double> out;
  dec.forward(params.data(), feat, nullptr, nullptr, out);
  CHECK(out.sigma == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(out.rgb.x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.rgb.y == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.rgb.z == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("decode: a -20 density bias empties space") {
  ParamStore<double> params;
  DecoderMLP<double> dec;
  DecoderConfig cfg;
  cfg.hidden_layers = 1;
  cfg.hidden_width = 8;
  dec.build(params, 4, cfg, "dec");
  params.values[dec.b_offsets.back()] = -20.0;
  double feat[4] = {0, 0, 0, 0};
  FieldSample<double> out;
  dec.forward(params.data(), feat, nullptr, nullptr, out);
  CHECK(out.sigma < 1e-8);
}

TEST_CASE("decode matches a brute-force forward pass") {
  ParamStore<double> params;
  DecoderMLP<double> dec;
  DecoderConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 8;
  dec.build(params, 5, cfg, "dec");
  std::mt19937 rng(31);
  dec.init(params.data(), rng);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (auto& b : dec.b_offsets)
    for (int i = 0; i < 8; ++i)
      if (b + i < params.size()) params.values[b + i] = uni(rng) * 0.1;

  for (int trial = 0; trial < 50; ++trial) {
    double feat[5];
    for (double& f : feat) f = uni(rng);
    FieldSample<double> out;
    dec.forward(params.data(), feat, nullptr, nullptr, out);

    // oracle: explicit matrix products
    std::vector<double> x(feat, feat + 5);
    for (int l = 0; l < dec.num_layers(); ++l) {
      int n_in = dec.layer_in(l), n_out = dec.layer_out(l);
      std::vector<double> y(n_out);
      for (int o = 0; o < n_out; ++o) {
        double acc = params.values[dec.b_offsets[l] + o];
        for (int i = 0; i < n_in; ++i)
          acc += params.values[dec.w_offsets[l] + size_t(o) * n_in + i] * x[i];
        if (l < dec.cfg.hidden_layers) acc = 0.5 * (acc + std::sqrt(acc * acc + 4));
        y[o] = acc;
      }
      x = y;
    }
    double sigma = std::log1p(std::exp(x[0]));
    CHECK(out.sigma == doctest::Approx(sigma).epsilon(1e-9));
    for (int c = 0; c < 3; ++c) {
      double col = 1.0 / (1.0 + std::exp(-x[1 + c]));
      CHECK(out.rgb[c] == doctest::Approx(col).epsilon(1e-9));
    }
  }
}

TEST_CASE("decode outputs stay in range for arbitrary inputs") {
  ParamStore<double> params;
  DecoderMLP<double> dec;
  DecoderConfig cfg;
  dec.build(params, 6, cfg, "dec");
  std::mt19937 rng(77);
  dec.init(params.data(), rng);
  std::uniform_real_distribution<double> wild(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    double feat[6];
    for (double& f : feat) f = wild(rng);
    FieldSample<double> out;
    dec.forward(params.data(), feat, nullptr, nullptr, out);
    CHECK(out.sigma >= 0.0);
    for (int c = 0; c < 3; ++c) {
      CHECK(out.rgb[c] >= 0.0);
      CHECK(out.rgb[c] <= 1.0);
    }
  }
}

TEST_CASE("decode dimension mismatch is a configuration error") {
  ParamStore<double> params;
  DecoderMLP<double> dec;
  DecoderConfig cfg;
  cfg.hidden_width = 300;  // exceeds the fixed workspace
  CHECK_THROWS_AS(dec.build(params, 6, cfg, "dec"), std::runtime_error);
}

TEST_CASE("gradients of decode(hexplane_features) match finite differences") {
  Hexplane<double> field;
  field.build(tiny_hexplane_config());
  field.init(101);

  std::mt19937 rng(55);
  std::uniform_real_distribution<double> pos(-1.5, 1.5);
  std::uniform_real_distribution<double> uni(0, 1);
  Vec3<double> c{pos(rng), pos(rng), pos(rng)};
  double t = uni(rng);
  Vec3<double> wc{uni(rng), uni(rng), uni(rng)};
  double ws = uni(rng);

  // scalar head: ws*sigma + wc.rgb
  auto value = [&]() {
    FieldSample<double> s = field.sample(c, t);
    return ws * s.sigma + wc.dot(s.rgb);
  };

  std::vector<double> grad(field.params.size(), 0.0);
  {
    std::vector<double> tape_r(field.tape_real_size());
    std::vector<int32_t> tape_i(field.tape_int_size());
    std::vector<double> dec_tape(field.decoder.tape_size());
    double feat[8], dfeat[8];
    field.features_tape(c, t, feat, tape_r.data(), tape_i.data());
    FieldSample<double> out;
    field.decoder.forward(field.params.data(), feat, nullptr, dec_tape.data(), out);
    field.decoder.backward(field.params.data(), dec_tape.data(), out, ws, wc, grad.data(),
                           dfeat);
    field.features_backward(tape_r.data(), tape_i.data(), dfeat, grad.data());
  }

  // probe >= 20 touched parameters plus a handful of untouched ones
  std::vector<size_t> touched;
  for (size_t i = 0; i < grad.size(); ++i)
    if (std::abs(grad[i]) > 1e-12) touched.push_back(i);
  REQUIRE(touched.size() >= 20);

  std::shuffle(touched.begin(), touched.end(), rng);
  touched.resize(20);
  touched.push_back(0);  // far-away plane vertex, expect zero gradient

  const double h = 1e-4;
  for (size_t idx : touched) {
    double saved = field.params.values[idx];
    field.params.values[idx] = saved + h;
    double lp = value();
    field.params.values[idx] = saved - h;
    double lm = value();
    field.params.values[idx] = saved;
    double numeric = (lp - lm) / (2 * h);
    double rel = std::abs(grad[idx] - numeric) /
                 std::max({std::abs(grad[idx]), std::abs(numeric), 1e-6});
    CHECK(rel < 1e-3);
  }
}
