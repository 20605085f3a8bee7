#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "viewsyn/io.hpp"

using namespace viewsyn;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("viewsyn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(VIEWSYN_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(out);
  r.out.assign(std::istreambuf_iterator<char>(is), {});
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::map<std::string, double> key_values(const std::string& text) {
  std::map<std::string, double> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string k;
    double v;
    if (ls >> k >> v && ls.eof()) kv[k] = v;
  }
  return kv;
}

}  // namespace

TEST(Cli, SynthIsByteIdenticalAcrossRuns) {
  const fs::path dir = work_dir("synth");
  ASSERT_EQ(run("--threads 1 synth --out " + (dir / "a").string() + " --seed 3 --noise 0.01", dir).code, 0);
  ASSERT_EQ(run("--threads 1 synth --out " + (dir / "b").string() + " --seed 3 --noise 0.01", dir).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / e.path().filename())) << e.path().filename();
    ++files;
  }
  EXPECT_GE(files, 10u);
  const SnippetSequence seq = load_sequence(dir / "a");
  EXPECT_EQ(seq.frames.size(), 3u);
  EXPECT_EQ(seq.target_index, 1);
}

TEST(Cli, UsageErrorsExitTwo) {
  const fs::path dir = work_dir("usage");
  EXPECT_EQ(run("synth", dir).code, 2);
  EXPECT_EQ(run("synth --out x --bogus", dir).code, 2);
  EXPECT_EQ(run("", dir).code, 2);
  EXPECT_EQ(run("--help", dir).code, 0);
}

TEST(Cli, RuntimeErrorsExitOne) {
  const fs::path dir = work_dir("runtime");
  std::ofstream(dir / "sequence.txt") << "target 0\n";
  EXPECT_EQ(run("fit --in " + dir.string() + " --out " + (dir / "o").string(), dir).code, 1);
}

TEST(Cli, ZeroMotionAndIdentityFit) {
  const fs::path dir = work_dir("still");
  ASSERT_EQ(run("synth --out " + (dir / "seq").string() + " --step 0 0 0 --width 48 --height 32", dir).code, 0);
  const SnippetSequence seq = load_sequence(dir / "seq");
  EXPECT_EQ(seq.frames[0], seq.frames[1]);
  EXPECT_EQ(seq.frames[2], seq.frames[1]);

  const fs::path out = dir / "fit";
  ASSERT_EQ(run("fit --in " + (dir / "seq").string() + " --out " + out.string() +
                    " --no-explainability --levels 2 --lr 0.01 --max-iters 40",
                dir)
                .code,
            0);
  for (const auto& e : fs::directory_iterator(out)) EXPECT_NE(e.path().filename().string().substr(0, 5), "mask_");
  EXPECT_TRUE(fs::exists(out / "depth.wf"));
  EXPECT_TRUE(fs::exists(out / "checkpoint.bin"));
  const Trajectory poses = read_trajectory(out / "poses.txt");
  ASSERT_EQ(poses.size(), 3u);
  for (const auto& p : poses) EXPECT_LT((p.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  std::ifstream hist(out / "loss_history.txt");
  int k;
  double loss;
  hist >> k >> loss;
  EXPECT_EQ(k, 0);
  EXPECT_LT(loss, 1e-9);
}

TEST(Cli, FitWritesMasksPerLevelAndSource) {
  const fs::path dir = work_dir("masks");
  ASSERT_EQ(run("synth --out " + (dir / "seq").string() + " --width 48 --height 32 --step 0.1 0 0", dir).code, 0);
  const fs::path out = dir / "fit";
  ASSERT_EQ(run("fit --in " + (dir / "seq").string() + " --out " + out.string() + " --levels 2 --max-iters 5", dir).code,
            0);
  for (int s = 0; s < 2; ++s)
    for (int l = 0; l < 2; ++l) {
      const fs::path m = out / ("mask_s" + std::to_string(s) + "_l" + std::to_string(l) + ".wf");
      ASSERT_TRUE(fs::exists(m)) << m;
      EXPECT_EQ(read_wf(m).width(), 48 >> l);
    }
}

TEST(Cli, WarpWithGroundTruth) {
  const fs::path dir = work_dir("warp");
  ASSERT_EQ(run("synth --out " + (dir / "seq").string() + " --step 0.2 0 0", dir).code, 0);
  const CliResult r = run("warp --in " + (dir / "seq").string() + " --out " + (dir / "w").string() + " --source 0", dir);
  ASSERT_EQ(r.code, 0);
  const auto kv = key_values(r.out);
  EXPECT_GT(kv.at("valid_count"), 96 * 64 / 2);
  EXPECT_LT(kv.at("mean_l1"), 1e-3);
  EXPECT_TRUE(fs::exists(dir / "w" / "warped.wf"));
  EXPECT_TRUE(fs::exists(dir / "w" / "valid.pgm"));
  EXPECT_EQ(run("warp --in " + (dir / "seq").string() + " --out " + (dir / "w").string() + " --source 1", dir).code, 1);
}

TEST(Cli, GradcheckPassesAndNegativeControlFails) {
  const fs::path dir = work_dir("grad");
  const CliResult a = run("--threads 1 gradcheck --seed 4 --instances 2", dir);
  EXPECT_EQ(a.code, 0);
  EXPECT_NE(a.out.find("PASS"), std::string::npos);
  const CliResult b = run("--threads 1 gradcheck --seed 4 --instances 2", dir);
  EXPECT_EQ(a.out, b.out);
  const CliResult bad = run("gradcheck --seed 4 --instances 1 --inject-grad-bug", dir);
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST(Cli, EvalDepth) {
  const fs::path dir = work_dir("evald");
  Image gt(6, 8, 1), twice(6, 8, 1);
  for (std::size_t k = 0; k < gt.size(); ++k) gt.data()[k] = 1.0 + 0.25 * k, twice.data()[k] = 2.0 * gt.data()[k];
  write_wf(gt, dir / "gt.wf");
  write_wf(twice, dir / "twice.wf");
  const CliResult same = run("eval-depth --in " + (dir / "gt.wf").string() + " --gt " + (dir / "gt.wf").string(), dir);
  ASSERT_EQ(same.code, 0);
  auto kv = key_values(same.out);
  EXPECT_EQ(kv.at("abs_rel"), 0.0);
  EXPECT_EQ(kv.at("rmse"), 0.0);
  EXPECT_EQ(kv.at("delta1"), 1.0);
  EXPECT_EQ(kv.at("valid_count"), 48.0);
  const CliResult scaled = run("eval-depth --in " + (dir / "twice.wf").string() + " --gt " + (dir / "gt.wf").string() +
                             " --out " + (dir / "r.txt").string(),
                         dir);
  ASSERT_EQ(scaled.code, 0);
  kv = key_values(scaled.out);
  EXPECT_EQ(kv.at("abs_rel"), 0.0);
  EXPECT_EQ(kv.at("scale"), 0.5);
  EXPECT_EQ(slurp(dir / "r.txt"), scaled.out);
  const CliResult capped = run("eval-depth --in " + (dir / "gt.wf").string() + " --gt " + (dir / "gt.wf").string() +
                             " --cap 5 --crop 1",
                         dir);
  EXPECT_EQ(key_values(capped.out).at("valid_count"), 17.0);
}

TEST(Cli, EvalOdom) {
  const fs::path dir = work_dir("evalo");
  auto line = [](double x, double y) {
    std::ostringstream s;
    s << "1 0 0 " << x << " 0 1 0 " << y << " 0 0 1 0\n";
    return s.str();
  };
  std::ofstream(dir / "gt.txt") << line(0, 0) << line(1, 1) << line(2, 0);
  std::ofstream(dir / "pred.txt") << line(0, 0) << line(1, 0) << line(2, 0);
  const CliResult same = run("eval-odom --in " + (dir / "gt.txt").string() + " --gt " + (dir / "gt.txt").string() +
                           " --snippet-len 3",
                       dir);
  ASSERT_EQ(same.code, 0);
  auto kv = key_values(same.out);
  EXPECT_LT(kv.at("mean_ate"), 1e-15);
  EXPECT_EQ(kv.at("snippets"), 1.0);
  EXPECT_EQ(kv.at("degenerate"), 0.0);

  const CliResult hand = run("eval-odom --in " + (dir / "pred.txt").string() + " --gt " + (dir / "gt.txt").string() +
                           " --snippet-len 3 --train " + (dir / "gt.txt").string(),
                       dir);
  ASSERT_EQ(hand.code, 0);
  kv = key_values(hand.out);
  EXPECT_NEAR(kv.at("mean_ate"), std::sqrt(1.0 / 3.0), 1e-15);
  EXPECT_NEAR(kv.at("scale"), 1.0, 1e-15);
  EXPECT_LT(kv.at("mean_odometry_mean_ate"), 1e-12);
}
