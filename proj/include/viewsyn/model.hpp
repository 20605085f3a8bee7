#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "viewsyn/losses.hpp"
#include "viewsyn/state.hpp"

namespace viewsyn {

struct InitConfig {
  double depth_prior = 1.0;   ///< initial activated depth everywhere
  int num_levels = 4;         ///< clipped to what the image size allows
  bool use_explainability = true;
  int target_index = -1;      ///< -1 picks the central frame
  double depth_jitter = 0.0;  ///< std-dev of Gaussian noise added to the initial depth logits
  std::uint64_t seed = 0;
};

/// Constant depth at the prior, zero poses, zero mask logits (Ê = 0.5).
/// Throws std::invalid_argument for fewer than two frames or mismatched sizes.
SnippetState init_state(std::vector<Image> frames, const Intrinsics& K, const InitConfig& config);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iters = 3000;
  double tolerance = 1e-7;     ///< stop when the best loss in the last `window` iterations improves on the earlier best by less than this (relative)
  int window = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;

  explicit AdamMoments(std::size_t n = 0) : first(n, 0.0), second(n, 0.0) {}
};

/// One bias-corrected Adam update at step t (t >= 1).
void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               const AdamConfig& config, int t);

class FitDivergedError : public std::runtime_error {
 public:
  FitDivergedError(int iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

struct FitResult {
  SnippetState state;
  std::vector<LossReport> history;  ///< one report per evaluated iterate, history[0] is the initial state
  int iterations = 0;
  bool converged = false;
};

/// Called after every step with the iteration index and its report.
using FitObserver = std::function<void(int, const LossReport&)>;

/// Minimises the multi-scale objective for `state` with Adam.
/// Throws FitDivergedError if the loss becomes non-finite.
FitResult fit_snippet(SnippetState state, const LossConfig& loss_config, const AdamConfig& adam_config,
                      const FitObserver& observer = {});

FitResult fit_snippet(std::vector<Image> frames, const Intrinsics& K, const LossConfig& loss_config,
                      const AdamConfig& adam_config, InitConfig init_config = {});

/// Binary checkpoint of a SnippetState's parameters (layout in README).
void save_checkpoint(const SnippetState& state, const std::filesystem::path& path);
/// Restores parameters into `state`; throws if the stored layout differs.
void load_checkpoint(SnippetState& state, const std::filesystem::path& path);

}  // namespace viewsyn
