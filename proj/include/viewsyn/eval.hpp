#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "viewsyn/geometry.hpp"
#include "viewsyn/image.hpp"

namespace viewsyn {

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t valid_count = 0;
  double scale = 1.0;  ///< factor applied to the prediction
};

/// median(gt) / median(pred) over pixels where `valid` is non-zero (all
/// pixels when `valid` is empty). Throws std::invalid_argument when no pixel
/// is valid or a valid depth is not positive.
double median_scale(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> valid = {});

struct DepthEvalOptions {
  std::optional<double> cap;        ///< ignore pixels whose ground truth exceeds this
  double crop = 1.0;                ///< keep the central crop*H x crop*W window
  std::optional<double> fixed_scale;  ///< skip median scaling and use this factor
};

/// Median-scales `pred` (unless a fixed scale is given), then computes the
/// standard depth error and accuracy metrics over pixels with gt > 0 that
/// pass the valid mask, cap and crop.
DepthMetrics depth_metrics(const Image& pred, const Image& gt, std::span<const std::uint8_t> valid = {},
                           const DepthEvalOptions& options = {});

/// Per-image scaling (the default protocol) averaged over a set of images,
/// or with one scale shared by the whole set when `global_scale` is true.
DepthMetrics depth_metrics_dataset(std::span<const Image> preds, std::span<const Image> gts,
                                   const DepthEvalOptions& options = {}, bool global_scale = false);

/// Column order: Abs Rel, Sq Rel, RMSE, RMSE log, d<1.25, d<1.25^2, d<1.25^3.
void write_depth_table(std::ostream& os, const std::vector<std::pair<std::string, DepthMetrics>>& rows);
/// "key value" lines for every field of `m`.
void write_depth_keyvalues(std::ostream& os, const DepthMetrics& m);

struct AteResult {
  double ate = 0.0;
  double scale = 0.0;
  std::vector<double> residuals;  ///< per-frame translation error after scaling
  bool degenerate = false;        ///< prediction had zero translation everywhere
};

/// Re-bases both trajectories on their first frame, fits one non-negative
/// scale to the predicted translations in the least-squares sense, and
/// returns the RMS translation error over all frames.
AteResult snippet_ate(const Trajectory& pred, const Trajectory& gt);

/// Expresses every pose relative to `traj[index]`.
Trajectory rebase(const Trajectory& traj, std::size_t index);

/// Stride-1 windows of `length` frames, each re-based on its central frame
/// (index length / 2). Too-short input yields an empty list.
std::vector<Trajectory> split_snippets(const Trajectory& traj, int length);

struct MeanOdometryBaseline {
  std::vector<PoseParams> mean_steps;  ///< averaged frame-to-frame motion
  Trajectory snippet;                  ///< the steps composed from the identity
};

/// Averages frame-to-frame motion (translation and Euler angles, per axis)
/// across training snippets of equal length.
MeanOdometryBaseline mean_odometry_baseline(std::span<const Trajectory> train_snippets);

/// |x| of the last camera position after re-basing on the first frame.
double side_rotation_magnitude(const Trajectory& snippet);

struct OdometrySummary {
  double mean_ate = 0.0;
  double std_ate = 0.0;
  std::size_t snippets = 0;
  std::vector<double> per_snippet;
};

/// Splits both trajectories into snippets and evaluates snippet_ate on each.
OdometrySummary evaluate_odometry(const Trajectory& pred, const Trajectory& gt, int snippet_length);
/// Evaluates a fixed snippet prediction against every gt snippet.
OdometrySummary evaluate_fixed_snippet(const Trajectory& prediction, const Trajectory& gt, int snippet_length);

}  // namespace viewsyn
