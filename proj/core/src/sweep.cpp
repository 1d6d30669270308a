#include "mxsr/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mxsr/error.hpp"
#include "mxsr/evaluate.hpp"

namespace mxsr {

double median(std::vector<double> v) {
  if (v.empty()) throw ConfigurationError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t sweep_width(std::size_t width, const Activation& kind, bool match_budget) {
  if (!match_budget) return width;
  const double w = static_cast<double>(width) * static_cast<double>(default_toy_width(kind)) / 12.0;
  return static_cast<std::size_t>(std::llround(w));
}

const SweepCell* SweepResult::find(const Activation& kind, std::size_t budget) const {
  for (const auto& c : cells) {
    if (c.kind.type == kind.type && c.kind.depth == kind.depth && c.budget == budget) return &c;
  }
  return nullptr;
}

std::vector<std::optional<double>> SweepResult::gaps(const Activation& a, const Activation& b) const {
  std::size_t levels = 0;
  for (const auto& c : cells) levels = std::max(levels, c.budget + 1);
  std::vector<std::optional<double>> out(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    const SweepCell* ca = find(a, i);
    const SweepCell* cb = find(b, i);
    if (ca && cb) out[i] = ca->median_psnr - cb->median_psnr;
  }
  return out;
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << "kind,budget,width,params,seeds,median_psnr\n";
  char buf[32];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%.4f", c.median_psnr);
    out << to_string(c.kind) << "," << c.budget << "," << c.width << "," << c.params << "," << c.psnr.size() << ","
        << buf << "\n";
  }
  return out.str();
}

std::string SweepResult::to_plot_data() const {
  std::ostringstream out;
  std::string current;
  char buf[64];
  for (const auto& c : cells) {
    const std::string name = to_string(c.kind);
    if (name != current) {
      if (!current.empty()) out << "\n\n";
      out << "# " << name << "\n";
      current = name;
    }
    std::snprintf(buf, sizeof buf, "%zu %.4f\n", c.params, c.median_psnr);
    out << buf;
  }
  return out.str();
}

SweepResult sweep(const SweepOptions& options, const TrainConfig& base, const Dataset& train_set,
                  const Dataset& test_set, const std::function<void(const std::string&)>& progress) {
  if (options.seeds.empty()) throw ConfigurationError("sweep needs at least one seed");
  SweepResult res;
  for (const auto& kind : options.kinds) {
    for (std::size_t level = 0; level < options.widths.size(); ++level) {
      TrainConfig cfg = base;
      cfg.model.preset = Preset::toy;
      cfg.model.activation = kind;
      cfg.model.width = sweep_width(options.widths[level], kind, options.match_budget);
      SweepCell cell{kind, level, cfg.model.width, 0, {}, 0.0};
      try {
        cfg.validate();
        cell.params = count_params(make_spec(cfg.model));
      } catch (const Error& e) {
        res.warnings.push_back("skipping " + to_string(kind) + " width " + std::to_string(cfg.model.width) + ": " +
                               e.what());
        if (progress) progress("warning: " + res.warnings.back());
        continue;
      }
      for (std::uint64_t seed : options.seeds) {
        cfg.seed = seed;
        TrainResult tr = train(cfg, train_set, nullptr, {});
        const EvalReport rep = evaluate(tr.network, test_set);
        cell.psnr.push_back(rep.mean_psnr);
        if (progress) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "%s width %zu params %zu seed %llu psnr %.4f", to_string(kind).c_str(),
                        cell.width, cell.params, static_cast<unsigned long long>(seed), rep.mean_psnr);
          progress(buf);
        }
      }
      cell.median_psnr = median(cell.psnr);
      res.cells.push_back(std::move(cell));
    }
  }
  return res;
}

}  // namespace mxsr
