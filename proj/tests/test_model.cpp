#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "viewsyn/io.hpp"
#include "viewsyn/model.hpp"
#include "viewsyn/synth.hpp"

using namespace viewsyn;
namespace fs = std::filesystem;

namespace {

std::vector<Image> random_frames(int n, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Image> frames;
  for (int k = 0; k < n; ++k) {
    Image img(h, w, 1);
    for (double& v : img.data()) v = unit(rng);
    frames.push_back(std::move(img));
  }
  return frames;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("viewsyn_model_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(DepthActivation, RangeAndInverse) {
  for (double x : {-50.0, -3.0, 0.0, 2.0, 50.0}) {
    const double d = activate_depth(x);
    EXPECT_GT(d, 1.0 / (kDepthAlpha + kDepthBeta) - 1e-15);
    EXPECT_LT(d, 1.0 / kDepthBeta + 1e-12);
  }
  for (double d : {0.2, 1.0, 4.0, 50.0}) EXPECT_NEAR(activate_depth(depth_to_logit(d)), d, 1e-12 * d);
  EXPECT_THROW(depth_to_logit(0.05), std::invalid_argument);
  EXPECT_THROW(depth_to_logit(150.0), std::invalid_argument);
  for (double x : {-2.0, 0.3, 1.7}) {
    auto f = [](const std::vector<double>& v) { return activate_depth(v[0]); };
    EXPECT_NEAR(activate_depth_derivative(x), oracle::central_difference(f, {x}, 0, 1e-6), 1e-8);
  }
}

TEST(InitState, DefaultsMatchPrior) {
  const Intrinsics K = default_intrinsics(24, 16);
  const SnippetState st = init_state(random_frames(3, 16, 24, 1), K, {});
  EXPECT_EQ(st.target_index, 1);
  EXPECT_EQ(st.num_sources(), 2);
  EXPECT_EQ(st.layout.num_levels(), 4);  // 16x24 -> 8x12 -> 4x6 -> 2x3
  const Image depth = st.depth();
  for (double d : depth.data()) EXPECT_NEAR(d, 1.0, 1e-12);
  for (int l = 0; l < st.layout.num_levels(); ++l)
    for (int s = 0; s < 2; ++s)
      for (const Image mask = st.mask(l, s); double e : mask.data()) EXPECT_EQ(e, 0.5);
  for (int s = 0; s < 2; ++s)
    for (double p : st.pose(s).as_array()) EXPECT_EQ(p, 0.0);
}

TEST(InitState, InitialLossIsMeanAbsoluteDifference) {
  const int h = 12, w = 16;
  auto frames = random_frames(3, h, w, 2);
  InitConfig ic;
  ic.num_levels = 1;
  ic.use_explainability = false;
  const SnippetState st = init_state(frames, default_intrinsics(w, h), ic);
  LossConfig lc;
  lc.num_levels = 1;
  lc.use_explainability = false;
  double expected = 0.0;
  for (int s : {0, 2}) {
    double sum = 0.0;
    for (std::size_t k = 0; k < frames[1].size(); ++k) sum += std::abs(frames[1].data()[k] - frames[s].data()[k]);
    expected += sum / frames[1].size();
  }
  EXPECT_NEAR(total_loss(st, lc).levels[0].view_synthesis, expected, 1e-14);
}

TEST(InitState, RejectsBadInput) {
  const Intrinsics K = default_intrinsics(8, 6);
  EXPECT_THROW(init_state(random_frames(1, 6, 8, 3), K, {}), std::invalid_argument);
  auto frames = random_frames(3, 6, 8, 3);
  frames[2] = Image(6, 7, 1);
  EXPECT_THROW(init_state(frames, K, {}), std::invalid_argument);
  InitConfig ic;
  ic.target_index = 3;
  EXPECT_THROW(init_state(random_frames(3, 6, 8, 3), K, ic), std::invalid_argument);
}

TEST(InitState, JitterIsSeeded) {
  InitConfig ic;
  ic.depth_jitter = 0.1;
  ic.seed = 5;
  const Intrinsics K = default_intrinsics(8, 6);
  const auto a = init_state(random_frames(2, 6, 8, 4), K, ic), b = init_state(random_frames(2, 6, 8, 4), K, ic);
  EXPECT_EQ(a.params, b.params);
  ic.seed = 6;
  EXPECT_NE(init_state(random_frames(2, 6, 8, 4), K, ic).params, a.params);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0, 3.0}, g(3, 0.0);
  AdamMoments m(3);
  for (int t = 1; t <= 10; ++t) adam_step(p, g, m, {}, t);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, FirstStepHasMagnitudeLr) {
  for (double g : {5.0, -0.003, 1e3}) {
    std::vector<double> p{0.0}, grad{g};
    AdamMoments m(1);
    AdamConfig cfg;
    adam_step(p, grad, m, cfg, 1);
    EXPECT_NEAR(p[0], -cfg.lr * (g > 0 ? 1 : -1), cfg.lr * 1e-5);
  }
}

TEST(Adam, MatchesScalarReference) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  AdamConfig cfg;
  cfg.lr = 0.01;
  std::vector<double> p{0.3};
  AdamMoments m(1);
  oracle::ScalarAdam ref{cfg.lr};
  double x = 0.3;
  for (int t = 1; t <= 500; ++t) {
    const double g = n(rng);
    std::vector<double> grad{g};
    adam_step(p, grad, m, cfg, t);
    x = ref.step(x, g);
    ASSERT_NEAR(p[0], x, 1e-15 * std::max(1.0, std::abs(x)));
  }
}

TEST(Adam, QuadraticBowl) {
  auto run = [](double lr, int steps) {
    std::vector<double> p{1.0};
    AdamMoments m(1);
    AdamConfig cfg;
    cfg.lr = lr;
    oracle::ScalarAdam ref{lr};
    double x = 1.0;
    for (int t = 1; t <= steps; ++t) {
      std::vector<double> g{2.0 * p[0]};
      adam_step(p, g, m, cfg, t);
      x = ref.step(x, 2.0 * x);
    }
    EXPECT_NEAR(p[0], x, 1e-12);
    return p[0];
  };
  // At lr = 2e-4 each step moves x by at most ~lr, so 2000 steps cover ~0.4.
  const double slow = run(2e-4, 2000);
  EXPECT_GT(slow, 0.5);
  EXPECT_LT(slow, 0.65);
  EXPECT_LT(std::abs(run(2e-3, 2000)), 0.01);
}

TEST(Adam, RejectsBadInput) {
  std::vector<double> p(2), g(3);
  AdamMoments m(2);
  EXPECT_THROW(adam_step(p, g, m, {}, 1), std::invalid_argument);
  std::vector<double> g2(2);
  EXPECT_THROW(adam_step(p, g2, m, {}, 0), std::invalid_argument);
  AdamConfig cfg;
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.lr = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Fit, IdenticalFramesKeepZeroPose) {
  SceneSpec spec;
  spec.intrinsics = default_intrinsics(48, 32);
  spec.trajectory = linear_trajectory(3, {});
  const SnippetSequence seq = render_scene(spec);
  LossConfig lc;
  AdamConfig ac;
  ac.max_iters = 200;
  const FitResult fit = fit_snippet(seq.frames, seq.intrinsics, lc, ac);
  for (int s = 0; s < 2; ++s) {
    const PoseParams p = fit.state.pose(s);
    EXPECT_LT(std::hypot(p.tx, p.ty, p.tz), 1e-3);
    for (double a : {p.rx, p.ry, p.rz}) EXPECT_LT(std::abs(a), 1e-3);
  }
  EXPECT_LT(fit.history.front().view_synthesis(), 1e-12);
}

TEST(Fit, DepthStaysInRangeAndRunsAreReproducible) {
  SceneSpec spec;
  spec.intrinsics = default_intrinsics(32, 24);
  spec.trajectory = linear_trajectory(3, {0, 0, 0, 0.2, 0, 0});
  const SnippetSequence seq = render_scene(spec);
  LossConfig lc;
  AdamConfig ac;
  ac.lr = 0.05;  // aggressive on purpose
  ac.max_iters = 150;
  const SnippetState init = init_state(seq.frames, seq.intrinsics, {});
  const double lo = 1.0 / (kDepthAlpha + kDepthBeta), hi = 1.0 / kDepthBeta;
  const FitResult a = fit_snippet(init, lc, ac, [&](int, const LossReport&) {});
  const Image depth = a.state.depth();
  for (double d : depth.data()) {
    EXPECT_GT(d, lo);
    EXPECT_LT(d, hi);
  }
  const FitResult b = fit_snippet(init, lc, ac);
  EXPECT_EQ(a.state.params, b.state.params);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) EXPECT_EQ(a.history[k].total, b.history[k].total);
}

TEST(Fit, ObserverSeesEveryIterate) {
  SceneSpec spec;
  spec.intrinsics = default_intrinsics(24, 16);
  spec.trajectory = linear_trajectory(2, {0, 0, 0, 0.1, 0, 0});
  const SnippetSequence seq = render_scene(spec);
  AdamConfig ac;
  ac.max_iters = 20;
  ac.tolerance = 0.0;
  int calls = 0;
  const FitResult fit = fit_snippet(init_state(seq.frames, seq.intrinsics, {}), {}, ac, [&](int iter, const LossReport&) {
    EXPECT_EQ(iter, calls);
    ++calls;
  });
  EXPECT_EQ(calls, 21);
  EXPECT_EQ(fit.iterations, 20);
  EXPECT_EQ(fit.history.size(), 21u);
}

TEST(Fit, NonFiniteLossReportsIteration) {
  auto frames = random_frames(3, 8, 12, 9);
  frames[0].at(3, 3) = NAN;
  try {
    fit_snippet(frames, default_intrinsics(12, 8), {}, {});
    FAIL() << "expected FitDivergedError";
  } catch (const FitDivergedError& e) {
    EXPECT_EQ(e.iteration(), 0);
  }
}

TEST(Checkpoint, RoundTripAndLayoutCheck) {
  const fs::path dir = temp_dir("ckpt");
  InitConfig ic;
  ic.depth_jitter = 0.3;
  ic.seed = 3;
  SnippetState st = init_state(random_frames(3, 8, 12, 10), default_intrinsics(12, 8), ic);
  st.set_pose(0, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  save_checkpoint(st, dir / "a.bin");

  SnippetState other = init_state(random_frames(3, 8, 12, 10), default_intrinsics(12, 8), {});
  load_checkpoint(other, dir / "a.bin");
  EXPECT_EQ(other.params, st.params);

  SnippetState wrong = init_state(random_frames(2, 8, 12, 10), default_intrinsics(12, 8), {});
  EXPECT_THROW(load_checkpoint(wrong, dir / "a.bin"), FormatError);

  const auto size = fs::file_size(dir / "a.bin");
  fs::resize_file(dir / "a.bin", size - 3);
  try {
    load_checkpoint(other, dir / "a.bin");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::Truncated);
  }
  std::ofstream(dir / "b.bin") << "NOTACKPT";
  try {
    load_checkpoint(other, dir / "b.bin");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::BadMagic);
  }
}
