#include "viewsyn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "viewsyn/io.hpp"

namespace viewsyn {

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double upper = v[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + n / 2);
  return 0.5 * (lower + upper);
}

// Pixels that take part in depth evaluation.
std::vector<std::size_t> eval_pixels(const Image& gt, std::span<const std::uint8_t> valid,
                                     const DepthEvalOptions& options) {
  if (!(options.crop > 0.0 && options.crop <= 1.0)) throw std::invalid_argument("depth eval: crop must be in (0, 1]");
  const int h = gt.height(), w = gt.width();
  const int crop_h = std::max(1, static_cast<int>(std::lround(options.crop * h)));
  const int crop_w = std::max(1, static_cast<int>(std::lround(options.crop * w)));
  const int top = (h - crop_h) / 2, left = (w - crop_w) / 2;
  std::vector<std::size_t> out;
  for (int i = top; i < top + crop_h; ++i)
    for (int j = left; j < left + crop_w; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * w + j;
      if (!valid.empty() && !valid[k]) continue;
      const double g = gt.data()[k];
      if (!(g > 0.0)) continue;
      if (options.cap && g > *options.cap) continue;
      out.push_back(k);
    }
  return out;
}

void check_shapes(const Image& pred, const Image& gt, std::span<const std::uint8_t> valid) {
  if (pred.channels() != 1 || !pred.same_shape(gt)) throw std::invalid_argument("depth eval: shape mismatch");
  if (!valid.empty() && valid.size() != gt.pixel_count())
    throw std::invalid_argument("depth eval: mask size mismatch");
}

}  // namespace

double median_scale(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> valid) {
  if (pred.size() != gt.size() || (!valid.empty() && valid.size() != gt.size()))
    throw std::invalid_argument("median_scale: size mismatch");
  std::vector<double> p, g;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (!valid.empty() && !valid[k]) continue;
    if (!(pred[k] > 0.0) || !(gt[k] > 0.0)) throw std::invalid_argument("median_scale: depths must be positive");
    p.push_back(pred[k]);
    g.push_back(gt[k]);
  }
  if (p.empty()) throw std::invalid_argument("median_scale: no valid pixels");
  return median(g) / median(p);
}

DepthMetrics depth_metrics(const Image& pred, const Image& gt, std::span<const std::uint8_t> valid,
                           const DepthEvalOptions& options) {
  check_shapes(pred, gt, valid);
  const std::vector<std::size_t> pixels = eval_pixels(gt, valid, options);
  if (pixels.empty()) throw std::invalid_argument("depth_metrics: no valid pixels");

  std::vector<double> p, g;
  for (std::size_t k : pixels) {
    if (!(pred.data()[k] > 0.0)) throw std::invalid_argument("depth_metrics: predicted depth must be positive");
    p.push_back(pred.data()[k]);
    g.push_back(gt.data()[k]);
  }
  DepthMetrics m;
  m.scale = options.fixed_scale ? *options.fixed_scale : median(g) / median(p);
  m.valid_count = p.size();
  double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0;
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double pk = p[k] * m.scale, gk = g[k];
    const double diff = pk - gk;
    abs_rel += std::abs(diff) / gk;
    sq_rel += diff * diff / gk;
    sq += diff * diff;
    const double ld = std::log(pk) - std::log(gk);
    sq_log += ld * ld;
    const double ratio = std::max(pk / gk, gk / pk);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
  }
  const double n = static_cast<double>(p.size());
  m.abs_rel = abs_rel / n;
  m.sq_rel = sq_rel / n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sq_log / n);
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  return m;
}

DepthMetrics depth_metrics_dataset(std::span<const Image> preds, std::span<const Image> gts,
                                   const DepthEvalOptions& options, bool global_scale) {
  if (preds.size() != gts.size() || preds.empty())
    throw std::invalid_argument("depth_metrics_dataset: need matching non-empty lists");
  DepthEvalOptions opts = options;
  if (global_scale && !opts.fixed_scale) {
    std::vector<double> p, g;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      check_shapes(preds[i], gts[i], {});
      for (std::size_t k : eval_pixels(gts[i], {}, options)) {
        p.push_back(preds[i].data()[k]);
        g.push_back(gts[i].data()[k]);
      }
    }
    opts.fixed_scale = median_scale(p, g);
  }
  DepthMetrics avg;
  avg.scale = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const DepthMetrics m = depth_metrics(preds[i], gts[i], {}, opts);
    avg.abs_rel += m.abs_rel;
    avg.sq_rel += m.sq_rel;
    avg.rmse += m.rmse;
    avg.rmse_log += m.rmse_log;
    avg.delta1 += m.delta1;
    avg.delta2 += m.delta2;
    avg.delta3 += m.delta3;
    avg.valid_count += m.valid_count;
    avg.scale += m.scale;
  }
  const double n = static_cast<double>(preds.size());
  for (double* f : {&avg.abs_rel, &avg.sq_rel, &avg.rmse, &avg.rmse_log, &avg.delta1, &avg.delta2, &avg.delta3})
    *f /= n;
  avg.scale /= n;
  return avg;
}

void write_depth_table(std::ostream& os, const std::vector<std::pair<std::string, DepthMetrics>>& rows) {
  std::size_t name_w = 6;
  for (const auto& r : rows) name_w = std::max(name_w, r.first.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %9s %9s %9s %9s %9s %9s %9s\n", static_cast<int>(name_w), "Method", "AbsRel",
                "SqRel", "RMSE", "RMSElog", "d<1.25", "d<1.25^2", "d<1.25^3");
  os << buf;
  for (const auto& [name, m] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f\n", static_cast<int>(name_w),
                  name.c_str(), m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3);
    os << buf;
  }
}

void write_depth_keyvalues(std::ostream& os, const DepthMetrics& m) {
  os << "abs_rel " << format_double(m.abs_rel) << '\n'
     << "sq_rel " << format_double(m.sq_rel) << '\n'
     << "rmse " << format_double(m.rmse) << '\n'
     << "rmse_log " << format_double(m.rmse_log) << '\n'
     << "delta1 " << format_double(m.delta1) << '\n'
     << "delta2 " << format_double(m.delta2) << '\n'
     << "delta3 " << format_double(m.delta3) << '\n'
     << "valid_count " << m.valid_count << '\n'
     << "scale " << format_double(m.scale) << '\n';
}

Trajectory rebase(const Trajectory& traj, std::size_t index) {
  const RigidTransform origin_inv = invert(traj.at(index));
  Trajectory out;
  out.reserve(traj.size());
  for (const RigidTransform& t : traj) out.push_back(origin_inv * t);
  return out;
}

AteResult snippet_ate(const Trajectory& pred, const Trajectory& gt) {
  if (pred.size() != gt.size() || pred.size() < 2)
    throw std::invalid_argument("snippet_ate: trajectories must have equal length >= 2");
  const Trajectory p = rebase(pred, 0), g = rebase(gt, 0);
  double dot = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    dot += p[k].translation().dot(g[k].translation());
    norm += p[k].translation().squaredNorm();
  }
  AteResult r;
  if (norm == 0.0) {
    r.degenerate = true;
    r.scale = 0.0;
  } else {
    r.scale = std::max(0.0, dot / norm);
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double e = (r.scale * p[k].translation() - g[k].translation()).norm();
    r.residuals.push_back(e);
    sq += e * e;
  }
  r.ate = std::sqrt(sq / static_cast<double>(p.size()));
  return r;
}

std::vector<Trajectory> split_snippets(const Trajectory& traj, int length) {
  if (length < 2) throw std::invalid_argument("split_snippets: length must be at least 2");
  std::vector<Trajectory> out;
  if (static_cast<int>(traj.size()) < length) return out;
  for (std::size_t start = 0; start + length <= traj.size(); ++start) {
    const Trajectory window(traj.begin() + start, traj.begin() + start + length);
    out.push_back(rebase(window, length / 2));
  }
  return out;
}

MeanOdometryBaseline mean_odometry_baseline(std::span<const Trajectory> train_snippets) {
  if (train_snippets.empty()) throw std::invalid_argument("mean_odometry_baseline: no training snippets");
  const std::size_t length = train_snippets.front().size();
  if (length < 2) throw std::invalid_argument("mean_odometry_baseline: snippets need at least two frames");
  MeanOdometryBaseline out;
  out.mean_steps.assign(length - 1, PoseParams{});
  for (const Trajectory& snip : train_snippets) {
    if (snip.size() != length) throw std::invalid_argument("mean_odometry_baseline: snippets differ in length");
    for (std::size_t k = 0; k + 1 < length; ++k) {
      const auto step = transform_to_pose(invert(snip[k]) * snip[k + 1]).as_array();
      auto acc = out.mean_steps[k].as_array();
      for (int i = 0; i < 6; ++i) acc[i] += step[i];
      out.mean_steps[k] = PoseParams::from_array(acc);
    }
  }
  const double n = static_cast<double>(train_snippets.size());
  for (PoseParams& p : out.mean_steps) {
    auto a = p.as_array();
    for (double& v : a) v /= n;
    p = PoseParams::from_array(a);
  }
  out.snippet.push_back(RigidTransform::identity());
  for (const PoseParams& step : out.mean_steps) out.snippet.push_back(out.snippet.back() * pose_to_transform(step));
  return out;
}

double side_rotation_magnitude(const Trajectory& snippet) {
  if (snippet.size() < 2) throw std::invalid_argument("side_rotation_magnitude: need at least two frames");
  const Trajectory r = rebase(snippet, 0);
  return std::abs(r.back().translation().x());
}

namespace {

OdometrySummary summarize(std::vector<double> ates) {
  OdometrySummary s;
  s.snippets = ates.size();
  if (ates.empty()) return s;
  double sum = 0.0;
  for (double a : ates) sum += a;
  s.mean_ate = sum / ates.size();
  double var = 0.0;
  for (double a : ates) var += (a - s.mean_ate) * (a - s.mean_ate);
  s.std_ate = std::sqrt(var / ates.size());
  s.per_snippet = std::move(ates);
  return s;
}

}  // namespace

OdometrySummary evaluate_odometry(const Trajectory& pred, const Trajectory& gt, int snippet_length) {
  if (pred.size() != gt.size()) throw std::invalid_argument("evaluate_odometry: trajectories differ in length");
  const auto ps = split_snippets(pred, snippet_length), gs = split_snippets(gt, snippet_length);
  std::vector<double> ates;
  for (std::size_t k = 0; k < gs.size(); ++k) ates.push_back(snippet_ate(ps[k], gs[k]).ate);
  return summarize(std::move(ates));
}

OdometrySummary evaluate_fixed_snippet(const Trajectory& prediction, const Trajectory& gt, int snippet_length) {
  if (static_cast<int>(prediction.size()) != snippet_length)
    throw std::invalid_argument("evaluate_fixed_snippet: prediction length differs from the snippet length");
  std::vector<double> ates;
  for (const Trajectory& g : split_snippets(gt, snippet_length)) ates.push_back(snippet_ate(prediction, g).ate);
  return summarize(std::move(ates));
}

}  // namespace viewsyn
