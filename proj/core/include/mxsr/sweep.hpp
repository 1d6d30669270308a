#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mxsr/activations.hpp"
#include "mxsr/dataset.hpp"
#include "mxsr/training.hpp"

namespace mxsr {

struct SweepOptions {
  std::vector<std::size_t> widths;
  std::vector<Activation> kinds;
  std::vector<std::uint64_t> seeds{1};
  // When set, widths[i] is the ReLU-family width of budget level i and every
  // other unit gets round(widths[i] * default_toy_width(kind) / 12), which
  // keeps the parameter counts of one level close together.
  bool match_budget = true;
};

struct SweepCell {
  Activation kind;
  std::size_t budget = 0;  // index into SweepOptions::widths
  std::size_t width = 0;
  std::size_t params = 0;
  std::vector<double> psnr;  // one per seed
  double median_psnr = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<std::string> warnings;

  const SweepCell* find(const Activation& kind, std::size_t budget) const;
  // median(a) - median(b) per budget level; nullopt where a cell is missing.
  std::vector<std::optional<double>> gaps(const Activation& a, const Activation& b) const;

  std::string to_csv() const;
  // Whitespace-separated columns "params psnr" grouped by kind, blank line
  // between groups, ready for gnuplot.
  std::string to_plot_data() const;
};

std::size_t sweep_width(std::size_t width, const Activation& kind, bool match_budget);

// Trains one toy network per (kind, width, seed) with `base` as the training
// configuration (model.activation, model.width and seed are overridden) and
// scores it on `test`. Cells that violate channel arity are skipped with a
// warning.
SweepResult sweep(const SweepOptions& options, const TrainConfig& base, const Dataset& train_set,
                  const Dataset& test_set,
                  const std::function<void(const std::string&)>& progress = {});

double median(std::vector<double> v);

}  // namespace mxsr
