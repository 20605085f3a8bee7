// viewsyn: synthetic scenes, snippet fitting, warping, gradient checks and evaluation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "viewsyn/eval.hpp"
#include "viewsyn/gradcheck.hpp"
#include "viewsyn/io.hpp"
#include "viewsyn/model.hpp"
#include "viewsyn/parallel.hpp"
#include "viewsyn/sampler.hpp"
#include "viewsyn/synth.hpp"

namespace fs = std::filesystem;
using namespace viewsyn;

namespace {

struct Options {
  std::string out, in, gt, train;
  int frames = 3;
  std::uint64_t seed = 1;
  int levels = 4;
  double lambda_s = 0.5, lambda_e = 0.2;
  bool no_explainability = false;
  double lr = 2e-4;
  int max_iters = 3000;
  std::optional<double> cap;
  double crop = 1.0;
  int snippet_len = 5;
  int threads = 0;
  int verbose = 0;

  // synth
  std::string scene = "plane";
  std::string texture = "band";
  int width = 96, height = 64, channels = 1;
  double depth = 4.0, far_depth = 8.0, slant = 0.3, noise = 0.0;
  std::vector<double> step{0.2, 0.0, 0.0};
  std::vector<double> turn{0.0, 0.0, 0.0};

  // warp
  int source = 0;
  std::string depth_file, poses_file;

  // gradcheck
  bool inject_bug = false;
  int instances = 1;
};

void log(const Options& o, const std::string& msg) {
  if (o.verbose > 0) std::cerr << msg << '\n';
}

int cmd_synth(const Options& o) {
  SceneSpec spec;
  if (o.scene == "plane") spec.kind = SceneKind::Plane;
  else if (o.scene == "slanted") spec.kind = SceneKind::SlantedPlane;
  else if (o.scene == "two-planes") spec.kind = SceneKind::TwoPlanes;
  spec.texture = o.texture == "high" ? TextureMode::HighFrequency : TextureMode::BandLimited;
  spec.texture_seed = o.seed;
  spec.depth = o.depth;
  spec.far_depth = o.far_depth;
  spec.slant = o.slant;
  spec.channels = o.channels;
  spec.noise_sigma = o.noise;
  spec.intrinsics = default_intrinsics(o.width, o.height);
  spec.trajectory = linear_trajectory(o.frames, {o.turn[0], o.turn[1], o.turn[2], o.step[0], o.step[1], o.step[2]});
  const SnippetSequence seq = render_scene(spec);
  fs::create_directories(o.out);
  const fs::path manifest = save_sequence(seq, o.out);
  log(o, "wrote " + manifest.string());
  return 0;
}

int cmd_fit(const Options& o) {
  const SnippetSequence seq = load_sequence(o.in);
  LossConfig lc;
  lc.lambda_s = o.lambda_s;
  lc.lambda_e = o.lambda_e;
  lc.num_levels = o.levels;
  lc.use_explainability = !o.no_explainability;
  lc.validate();
  AdamConfig ac;
  ac.lr = o.lr;
  ac.max_iters = o.max_iters;
  ac.seed = o.seed;
  InitConfig ic;
  ic.num_levels = o.levels;
  ic.use_explainability = lc.use_explainability;
  ic.target_index = seq.target_index;
  ic.seed = o.seed;

  const SnippetState init = init_state(seq.frames, seq.intrinsics, ic);
  const FitResult fit = fit_snippet(init, lc, ac, [&](int iter, const LossReport& r) {
    if (o.verbose > 1 && iter % 100 == 0) std::cerr << "iter " << iter << " loss " << r.total << '\n';
  });
  const SnippetState& st = fit.state;

  fs::create_directories(o.out);
  const fs::path out(o.out);
  write_wf(st.depth(), out / "depth.wf");

  Trajectory poses(st.frames.size());
  poses[st.target_index] = RigidTransform::identity();
  for (int s = 0; s < st.num_sources(); ++s) poses[st.source_frame(s)] = invert(pose_to_transform(st.pose(s)));
  write_trajectory(poses, out / "poses.txt");

  if (lc.use_explainability)
    for (int l = 0; l < st.layout.num_levels(); ++l)
      for (int s = 0; s < st.num_sources(); ++s) {
        char name[64];
        std::snprintf(name, sizeof name, "mask_s%d_l%d.wf", s, l);
        write_wf(st.mask(l, s), out / name);
      }

  std::ofstream hist(out / "loss_history.txt");
  for (std::size_t k = 0; k < fit.history.size(); ++k) hist << k << ' ' << format_double(fit.history[k].total) << '\n';
  if (!hist) throw IoError("cannot write " + (out / "loss_history.txt").string());
  save_checkpoint(st, out / "checkpoint.bin");

  log(o, "fit: " + std::to_string(fit.iterations) + " iterations" + (fit.converged ? " (converged)" : ""));
  return 0;
}

int cmd_warp(const Options& o) {
  const SnippetSequence seq = load_sequence(o.in);
  const int t = seq.target_index;
  if (o.source < 0 || o.source >= static_cast<int>(seq.frames.size()) || o.source == t)
    throw std::invalid_argument("warp: --source must name a non-target frame");

  Image depth;
  if (!o.depth_file.empty()) depth = read_image(o.depth_file);
  else if (!seq.gt_depth.empty()) depth = seq.gt_depth[t];
  else throw std::invalid_argument("warp: no depth (pass --depth or use a sequence with ground truth)");

  Trajectory traj;
  if (!o.poses_file.empty()) traj = read_trajectory(o.poses_file);
  else traj = seq.gt_poses;
  if (traj.size() != seq.frames.size()) throw std::invalid_argument("warp: need one pose per frame");

  const RigidTransform pose = relative_pose(traj[t], traj[o.source]);
  const WarpResult w = inverse_warp(seq.frames[o.source], depth, pose, seq.intrinsics);
  double l1 = 0.0;
  for (int i = 0; i < w.warped.height(); ++i)
    for (int j = 0; j < w.warped.width(); ++j)
      if (w.valid[static_cast<std::size_t>(i) * w.warped.width() + j])
        for (int c = 0; c < w.warped.channels(); ++c) l1 += std::abs(w.warped.at(i, j, c) - seq.frames[t].at(i, j, c));
  const double denom = static_cast<double>(w.valid_count) * w.warped.channels();

  fs::create_directories(o.out);
  write_wf(w.warped, fs::path(o.out) / "warped.wf");
  Image valid(w.warped.height(), w.warped.width(), 1);
  for (std::size_t k = 0; k < w.valid.size(); ++k) valid.data()[k] = w.valid[k];
  write_pnm(valid, fs::path(o.out) / "valid.pgm");

  std::cout << "valid_count " << w.valid_count << '\n'
            << "mean_l1 " << format_double(denom > 0 ? l1 / denom : 0.0) << '\n';
  return 0;
}

int cmd_gradcheck(const Options& o) {
  LossConfig lc;
  lc.lambda_s = o.lambda_s;
  lc.lambda_e = o.lambda_e;
  lc.use_explainability = !o.no_explainability;
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  std::ostringstream report;
  for (int n = 0; n < o.instances; ++n) {
    GradCheckOptions go;
    go.frames = o.frames;
    go.levels = o.levels;
    go.seed = o.seed + n;
    go.channels = o.channels;
    lc.num_levels = go.levels;
    const SnippetState st = random_instance(go, lc.use_explainability);
    const GradCheckReport r = check_gradients(st, lc, go.step, o.inject_bug);
    for (const GradCheckGroup& g : r.groups)
      report << "instance " << n << ' ' << g.name << " count " << g.count << " max_abs " << format_double(g.max_abs_error)
             << " rel " << format_double(g.rel_error) << (g.rel_error <= kTolerance ? " ok" : " FAIL") << '\n';
    ok = ok && r.passed(kTolerance);
  }
  report << (ok ? "PASS" : "FAIL") << '\n';
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << report.str();
    if (!f) throw IoError("cannot write " + o.out);
  }
  std::cout << report.str();
  if (!ok) std::cerr << "gradcheck: relative error above " << kTolerance << '\n';
  return ok ? 0 : 1;
}

int cmd_eval_depth(const Options& o) {
  const Image pred = read_image(o.in), gt = read_image(o.gt);
  DepthEvalOptions opts;
  opts.cap = o.cap;
  opts.crop = o.crop;
  const DepthMetrics m = depth_metrics(pred, gt, {}, opts);
  std::ostringstream s;
  write_depth_table(s, {{fs::path(o.in).filename().string(), m}});
  s << '\n';
  write_depth_keyvalues(s, m);
  std::cout << s.str();
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << s.str();
    if (!f) throw IoError("cannot write " + o.out);
  }
  return 0;
}

void write_summary(std::ostream& os, const std::string& prefix, const OdometrySummary& s) {
  os << prefix << "mean_ate " << format_double(s.mean_ate) << '\n'
     << prefix << "std_ate " << format_double(s.std_ate) << '\n'
     << prefix << "snippets " << s.snippets << '\n';
}

int cmd_eval_odom(const Options& o) {
  const Trajectory pred = read_trajectory(o.in), gt = read_trajectory(o.gt);
  std::ostringstream s;
  if (pred.size() == gt.size()) {
    write_summary(s, "", evaluate_odometry(pred, gt, o.snippet_len));
    if (static_cast<int>(pred.size()) == o.snippet_len) {
      const AteResult a = snippet_ate(pred, gt);
      s << "scale " << format_double(a.scale) << '\n' << "degenerate " << a.degenerate << '\n';
    }
  } else {
    write_summary(s, "", evaluate_fixed_snippet(pred, gt, o.snippet_len));
  }
  if (!o.train.empty()) {
    const auto train = split_snippets(read_trajectory(o.train), o.snippet_len);
    if (train.empty()) throw std::invalid_argument("eval-odom: training trajectory shorter than a snippet");
    const MeanOdometryBaseline base = mean_odometry_baseline(train);
    write_summary(s, "mean_odometry_", evaluate_fixed_snippet(base.snippet, gt, o.snippet_len));
  }
  std::cout << s.str();
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << s.str();
    if (!f) throw IoError("cannot write " + o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"viewsyn: depth and ego-motion from view synthesis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file (key = value); flags override it");
  app.add_option("--threads", o.threads, "OpenMP threads (0 = default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", o.verbose, "More progress output on stderr");

  auto* synth = app.add_subcommand("synth", "Render a synthetic snippet with ground truth");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--scene", o.scene)->check(CLI::IsMember({"plane", "slanted", "two-planes"}));
  synth->add_option("--texture", o.texture)->check(CLI::IsMember({"band", "high"}));
  synth->add_option("--frames", o.frames)->check(CLI::Range(2, 1000));
  synth->add_option("--seed", o.seed, "Texture seed");
  synth->add_option("--width", o.width)->check(CLI::Range(4, 4096));
  synth->add_option("--height", o.height)->check(CLI::Range(4, 4096));
  synth->add_option("--channels", o.channels)->check(CLI::IsMember({1, 3}));
  synth->add_option("--depth", o.depth, "Plane depth")->check(CLI::PositiveNumber);
  synth->add_option("--far-depth", o.far_depth)->check(CLI::PositiveNumber);
  synth->add_option("--slant", o.slant, "Slant of the slanted plane (radians)");
  synth->add_option("--noise", o.noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--step", o.step, "Per-frame camera translation x y z")->expected(3);
  synth->add_option("--turn", o.turn, "Per-frame camera rotation rx ry rz (radians)")->expected(3);

  auto* fit = app.add_subcommand("fit", "Fit depth, poses and masks to a snippet");
  fit->add_option("--in", o.in, "Sequence manifest or directory")->required()->check(CLI::ExistingPath);
  fit->add_option("--out", o.out, "Output directory")->required();
  fit->add_option("--seed", o.seed);
  fit->add_option("--levels", o.levels)->check(CLI::Range(1, 16));
  fit->add_option("--lambda-s", o.lambda_s)->check(CLI::NonNegativeNumber);
  fit->add_option("--lambda-e", o.lambda_e)->check(CLI::NonNegativeNumber);
  fit->add_flag("--no-explainability", o.no_explainability);
  fit->add_option("--lr", o.lr)->check(CLI::PositiveNumber);
  fit->add_option("--max-iters", o.max_iters)->check(CLI::NonNegativeNumber);

  auto* warp = app.add_subcommand("warp", "Warp a source frame into the target view");
  warp->add_option("--in", o.in, "Sequence manifest or directory")->required()->check(CLI::ExistingPath);
  warp->add_option("--out", o.out, "Output directory")->required();
  warp->add_option("--source", o.source, "Frame index to warp");
  warp->add_option("--depth", o.depth_file, "Target depth (default: ground truth)")->check(CLI::ExistingFile);
  warp->add_option("--poses", o.poses_file, "Trajectory file (default: ground truth)")->check(CLI::ExistingFile);

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--seed", o.seed);
  grad->add_option("--frames", o.frames)->check(CLI::Range(2, 8));
  grad->add_option("--levels", o.levels)->check(CLI::Range(1, 4));
  grad->add_option("--lambda-s", o.lambda_s)->check(CLI::NonNegativeNumber);
  grad->add_option("--lambda-e", o.lambda_e)->check(CLI::NonNegativeNumber);
  grad->add_flag("--no-explainability", o.no_explainability);
  grad->add_option("--instances", o.instances)->check(CLI::Range(1, 1000));
  grad->add_option("--out", o.out, "Also write the report here");
  grad->add_flag("--inject-grad-bug", o.inject_bug, "Test hook: corrupt the analytic gradient");

  auto* ed = app.add_subcommand("eval-depth", "Depth metrics with median scaling");
  ed->add_option("--in", o.in, "Predicted depth (WF01)")->required()->check(CLI::ExistingFile);
  ed->add_option("--gt", o.gt, "Ground-truth depth (WF01)")->required()->check(CLI::ExistingFile);
  ed->add_option("--cap", o.cap, "Ignore ground truth beyond this depth")->check(CLI::PositiveNumber);
  ed->add_option("--crop", o.crop, "Central crop fraction")->check(CLI::Range(0.0, 1.0));
  ed->add_option("--out", o.out, "Also write the report here");

  auto* eo = app.add_subcommand("eval-odom", "Snippet ATE with scale alignment");
  eo->add_option("--in", o.in, "Predicted trajectory")->required()->check(CLI::ExistingFile);
  eo->add_option("--gt", o.gt, "Ground-truth trajectory")->required()->check(CLI::ExistingFile);
  eo->add_option("--snippet-len", o.snippet_len)->check(CLI::Range(2, 1000));
  eo->add_option("--train", o.train, "Trajectory for the mean-odometry baseline")->check(CLI::ExistingFile);
  eo->add_option("--out", o.out, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_num_threads(o.threads);
    if (*synth) return cmd_synth(o);
    if (*fit) return cmd_fit(o);
    if (*warp) return cmd_warp(o);
    if (*grad) return cmd_gradcheck(o);
    if (*ed) return cmd_eval_depth(o);
    if (*eo) return cmd_eval_odom(o);
  } catch (const FitDivergedError& e) {
    std::cerr << "viewsyn: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "viewsyn: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
