#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mxsr/adam.hpp"
#include "mxsr/dataset.hpp"
#include "mxsr/network.hpp"

namespace mxsr {

struct LossResult {
  double loss = 0.0;
  Tensor4 grad;
};

// Mean squared error and its gradient 2 (pred - target) / N.
LossResult mse_loss(const Tensor4& pred, const Tensor4& target);

struct TrainConfig {
  PresetOptions model;
  std::size_t iterations = 100000;
  double lr_initial = 1e-4;
  std::size_t lr_drop_at = 50000;
  double lr_drop_factor = 10.0;
  BatchConfig batch;
  std::uint64_t seed = 1;
  AdamHyper adam;
  PairOptions train_pairs;

  std::filesystem::path train_dir;
  std::filesystem::path test_dir;
  std::filesystem::path out_dir;  // empty: no files written

  std::size_t log_every = 100;
  std::size_t eval_every = 0;  // 0: evaluate only at the end
  std::size_t checkpoint_every = 10000;
  bool deterministic = true;

  // Small-net protocol: 1e5 iterations, drop at 5e4, batch 2, 40px HR crops,
  // flips and rotations.
  static TrainConfig toy(const Activation& kind, std::size_t scale = 4);
  // Full-size protocol: 1e6 iterations, drop at 5e5, batch 4, 75px (x3) or
  // 76px (x4) HR crops, flips, rotations and intensity scaling.
  static TrainConfig full(Preset preset, std::size_t scale);

  // ConfigurationError on invalid values.
  void validate() const;
};

// lr_initial before lr_drop_at, lr_initial / lr_drop_factor from then on.
double lr_at(std::size_t iter, const TrainConfig& cfg);

struct LossRecord {
  std::size_t iter;
  double loss;
  double lr;
};

struct EvalRecord {
  std::size_t iter;
  std::string set;
  double psnr;
  double ssim;
};

struct TrainResult {
  Network network;
  AdamState optimizer;
  std::vector<LossRecord> losses;  // one per iteration
  std::vector<EvalRecord> evals;
};

enum class CheckpointKind { periodic, final, diverged };

struct CheckpointEvent {
  std::size_t iter;
  CheckpointKind kind;
};

// Optional sinks. `log` receives the metrics-log lines
// "iter <n> loss <float> lr <float>" and
// "eval iter <n> set <name> psnr <float> ssim <float>".
struct TrainHooks {
  std::ostream* log = nullptr;
  std::function<void(const CheckpointEvent&, const Network&, const AdamState&)> on_checkpoint;
};

std::string format_loss_line(const LossRecord& r);
std::string format_eval_line(const EvalRecord& r);

// Runs cfg.iterations steps of sample -> forward -> MSE on (base + residual)
// vs HR -> backward -> ADAM. Reproducible from cfg.seed. When the loss stops
// being finite the last good parameters go to on_checkpoint as a `diverged`
// event and DataError is thrown.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset* test_set = nullptr,
                  const TrainHooks& hooks = {});

// File-driven variant: loads cfg.train_dir / cfg.test_dir and, when out_dir
// is set, writes checkpoints/, logs/train.log and reports/.
TrainResult train(const TrainConfig& cfg);

struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t max_coords_per_tensor = 0;  // 0 checks every coordinate
  std::uint64_t seed = 7;
  bool check_input = true;
  // Applied to the analytic gradients before comparison (mutation testing).
  std::function<void(NetworkGrads&)> corrupt;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<double> tensor_errors;  // weights0, bias0, weights1, ..., input
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  // stencils that changed an activation selection
};

// Compares analytic gradients of L = 0.5 * sum((forward_unclamped(probe, base) - target)^2)
// against central differences for every parameter (and the probe). base and
// target are random but fixed by options.seed. Coordinates whose +/- eps
// evaluations change any activation selection are skipped and counted.
// Relative error per entry: |a - n| / max(|a|, |n|, 1e-3 * max_abs(tensor)).
GradCheckReport grad_check_report(Network& net, const Tensor4& probe, const GradCheckOptions& options = {});
double grad_check(Network& net, const Tensor4& probe, double eps = 1e-5);

}  // namespace mxsr
