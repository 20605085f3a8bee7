#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "viewsyn/gradcheck.hpp"
#include "viewsyn/model.hpp"
#include "viewsyn/parallel.hpp"
#include "viewsyn/reference.hpp"
#include "viewsyn/synth.hpp"

using namespace viewsyn;

namespace {

struct ThreadGuard {
  ~ThreadGuard() { set_num_threads(0); }
};

SnippetState instance(std::uint64_t seed, int h = 24, int w = 32, int levels = 3, int channels = 3) {
  GradCheckOptions o;
  o.height = h;
  o.width = w;
  o.levels = levels;
  o.channels = channels;
  o.seed = seed;
  o.avoid_kinks = false;
  return random_instance(o, true);
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return den > 0 ? num / den : num;
}

}  // namespace

TEST(Parallel, OrderedSumIsLeftToRight) {
  EXPECT_EQ(ordered_sum({1e16, 1.0, -1e16, 1.0}), ((1e16 + 1.0) - 1e16) + 1.0);
  EXPECT_EQ(ordered_sum({}), 0.0);
}

TEST(Parallel, WarpMatchesReference) {
  ThreadGuard guard;
  set_num_threads(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SnippetState s = instance(seed);
    const Image depth = s.depth();
    for (int src = 0; src < s.num_sources(); ++src) {
      const RigidTransform T = pose_to_transform(s.pose(src));
      const WarpResult a = inverse_warp(s.source(src), depth, T, s.intrinsics);
      const WarpResult b = reference::inverse_warp(s.source(src), depth, T, s.intrinsics);
      std::size_t mismatched = 0;
      double worst = 0.0;
      for (std::size_t k = 0; k < a.valid.size(); ++k) {
        if (a.valid[k] != b.valid[k]) {
          ++mismatched;
          continue;
        }
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(a.warped.data()[3 * k + c] - b.warped.data()[3 * k + c]));
      }
      // The two projections differ only by rounding, which can flip a pixel
      // sitting exactly on the border.
      EXPECT_LE(mismatched, 1u);
      EXPECT_LT(worst, 1e-12);
    }
  }
}

TEST(Parallel, BackpropMatchesReference) {
  const SnippetState s = instance(11, 16, 20, 1, 1);
  const Image depth = s.depth();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Image dw(16, 20, 1);
  for (double& v : dw.data()) v = u(rng);
  const PoseParams p = s.pose(0);
  const WarpResult w = inverse_warp(s.source(0), depth, pose_to_transform(p), s.intrinsics);
  Image da(16, 20, 1), db(16, 20, 1);
  const auto ga = pose_gradient(p, backprop_warp(w, depth, dw, da));
  const auto gb = reference::backprop_warp(w, p, depth, dw, db);
  EXPECT_LT(max_rel({ga.begin(), ga.end()}, {gb.begin(), gb.end()}), 1e-12);
  EXPECT_LT(max_rel(std::vector<double>(da.data().begin(), da.data().end()),
                    std::vector<double>(db.data().begin(), db.data().end())),
            1e-12);
}

TEST(Parallel, LossTermsMatchReference) {
  const SnippetState s = instance(3);
  std::vector<WarpResult> warps;
  std::vector<Image> logits;
  for (int src = 0; src < s.num_sources(); ++src) {
    warps.push_back(inverse_warp(s.source(src), s.depth(), pose_to_transform(s.pose(src)), s.intrinsics));
    logits.push_back(s.mask_logits(0, src));
  }
  const ViewSynthesisLoss a = view_synthesis_loss(s.target(), warps, logits);
  const ViewSynthesisLoss b = reference::view_synthesis_loss(s.target(), warps, logits);
  EXPECT_NEAR(a.value, b.value, 1e-12 * b.value);
  for (int src = 0; src < s.num_sources(); ++src) {
    EXPECT_LT(max_rel({a.d_warped[src].data().begin(), a.d_warped[src].data().end()},
                      {b.d_warped[src].data().begin(), b.d_warped[src].data().end()}),
              1e-12);
    EXPECT_LT(max_rel({a.d_mask_logits[src].data().begin(), a.d_mask_logits[src].data().end()},
                      {b.d_mask_logits[src].data().begin(), b.d_mask_logits[src].data().end()}),
              1e-12);
  }
  const ScalarLoss sa = smoothness_loss(s.depth()), sb = reference::smoothness_loss(s.depth());
  EXPECT_NEAR(sa.value, sb.value, 1e-12 * sb.value);
  const ScalarLoss ra = explainability_regularizer(logits[0]), rb = reference::explainability_regularizer(logits[0]);
  EXPECT_NEAR(ra.value, rb.value, 1e-12 * rb.value);
}

TEST(Parallel, TotalLossAndGradientMatchReference) {
  ThreadGuard guard;
  set_num_threads(3);
  for (bool masks : {false, true}) {
    SnippetState s = instance(5);
    LossConfig cfg;
    cfg.num_levels = 3;
    cfg.use_explainability = masks;
    std::vector<double> ga(s.layout.total()), gb(s.layout.total());
    const LossReport a = total_loss(s, cfg, ga);
    const LossReport b = reference::total_loss(s, cfg, gb);
    EXPECT_NEAR(a.total, b.total, 1e-12 * b.total);
    EXPECT_LT(max_rel(ga, gb), 1e-10);
  }
}

TEST(Parallel, ResultsDoNotDependOnThreadCount) {
  ThreadGuard guard;
  const SnippetState s = instance(9, 32, 48, 3, 3);
  LossConfig cfg;
  cfg.num_levels = 3;
  set_num_threads(1);
  std::vector<double> g1(s.layout.total());
  const LossReport r1 = total_loss(s, cfg, g1);
  for (int t : {2, 4}) {
    set_num_threads(t);
    EXPECT_EQ(num_threads(), t);
    std::vector<double> gt(s.layout.total());
    const LossReport rt = total_loss(s, cfg, gt);
    EXPECT_EQ(rt.total, r1.total) << t << " threads";
    EXPECT_EQ(gt, g1) << t << " threads";
  }
}

TEST(Parallel, FitIsReproducibleAcrossThreadCounts) {
  ThreadGuard guard;
  SceneSpec spec;
  spec.intrinsics = default_intrinsics(48, 32);
  spec.trajectory = linear_trajectory(3, {0, 0, 0, 0.1, 0, 0});
  const SnippetSequence seq = render_scene(spec);
  LossConfig cfg;
  cfg.num_levels = 2;
  AdamConfig adam;
  adam.lr = 0.01;
  adam.max_iters = 30;
  InitConfig init;
  init.num_levels = 2;
  set_num_threads(1);
  const FitResult a = fit_snippet(seq.frames, seq.intrinsics, cfg, adam, init);
  set_num_threads(4);
  const FitResult b = fit_snippet(seq.frames, seq.intrinsics, cfg, adam, init);
  EXPECT_EQ(a.state.params, b.state.params);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) EXPECT_EQ(a.history[k].total, b.history[k].total);
}
