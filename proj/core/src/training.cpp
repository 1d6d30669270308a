#include "mxsr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mxsr/checkpoint.hpp"
#include "mxsr/error.hpp"
#include "mxsr/evaluate.hpp"

namespace mxsr {

LossResult mse_loss(const Tensor4& pred, const Tensor4& target) {
  if (!(pred.shape() == target.shape())) {
    throw DimensionError("mse_loss: prediction " + to_string(pred.shape()) + " vs target " +
                         to_string(target.shape()));
  }
  LossResult r{0.0, Tensor4(pred.shape())};
  const double n = static_cast<double>(pred.size());
  auto p = pred.values();
  auto t = target.values();
  auto g = r.grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    r.loss += d * d;
    g[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

TrainConfig TrainConfig::toy(const Activation& kind, std::size_t scale) {
  TrainConfig c;
  c.model.preset = Preset::toy;
  c.model.activation = kind;
  c.model.scale = scale;
  c.iterations = 100000;
  c.lr_drop_at = 50000;
  c.batch.batch = 2;
  c.batch.crop_hr = 40;
  if (c.batch.crop_hr % scale != 0) c.batch.crop_hr -= c.batch.crop_hr % scale;
  c.batch.augment = {};
  return c;
}

TrainConfig TrainConfig::full(Preset preset, std::size_t scale) {
  TrainConfig c;
  c.model.preset = preset;
  c.model.activation = Activation::mu();
  c.model.scale = scale;
  c.iterations = 1000000;
  c.lr_drop_at = 500000;
  c.batch.batch = 4;
  c.batch.crop_hr = scale == 3 ? 75 : 76;
  if (c.batch.crop_hr % scale != 0) c.batch.crop_hr -= c.batch.crop_hr % scale;
  c.batch.augment.flip_rotate = true;
  c.batch.augment.intensity = true;
  return c;
}

void TrainConfig::validate() const {
  if (model.scale == 0) throw ConfigurationError("scale must be >= 1");
  if (batch.batch == 0) throw ConfigurationError("batch must be >= 1");
  if (batch.crop_hr == 0 || batch.crop_hr % model.scale != 0) {
    throw ConfigurationError("crop size " + std::to_string(batch.crop_hr) + " is not a multiple of scale " +
                             std::to_string(model.scale));
  }
  if (!(lr_initial > 0.0) || !std::isfinite(lr_initial)) throw ConfigurationError("learning rate must be positive");
  if (!(lr_drop_factor > 0.0)) throw ConfigurationError("learning-rate drop factor must be positive");
  if (batch.augment.intensity && !(batch.augment.intensity_lo <= batch.augment.intensity_hi)) {
    throw ConfigurationError("intensity range is empty");
  }
  make_spec(model).validate();
}

double lr_at(std::size_t iter, const TrainConfig& cfg) {
  return iter < cfg.lr_drop_at ? cfg.lr_initial : cfg.lr_initial / cfg.lr_drop_factor;
}

std::string format_loss_line(const LossRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "iter %zu loss %.8g lr %.8g", r.iter, r.loss, r.lr);
  return buf;
}

std::string format_eval_line(const EvalRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "eval iter %zu set %s psnr %.8g ssim %.8g", r.iter, r.set.c_str(), r.psnr, r.ssim);
  return buf;
}

namespace {

EvalRecord run_eval(std::size_t iter, Network& net, const Dataset& test) {
  const EvalReport rep = evaluate(net, test);
  return {iter, test.name, rep.mean_psnr, rep.mean_ssim};
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset* test_set,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.pairs.empty()) throw DataError("training set '" + train_set.name + "' is empty");
  if (train_set.scale != cfg.model.scale) {
    throw ConfigurationError("training set was degraded by " + std::to_string(train_set.scale) +
                             " but the model upscales by " + std::to_string(cfg.model.scale));
  }

  TrainResult res{build_network(cfg.model, cfg.seed), {}, {}, {}};
  Network& net = res.network;
  res.optimizer = AdamState::for_network(net, cfg.adam);
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<ConvParams> last_good = net.params();
  res.losses.reserve(cfg.iterations);

  auto emit = [&](const std::string& line) {
    if (hooks.log) *hooks.log << line << '\n' << std::flush;
  };
  auto checkpoint = [&](std::size_t iter, CheckpointKind kind) {
    if (hooks.on_checkpoint) hooks.on_checkpoint({iter, kind}, net, res.optimizer);
  };

  std::size_t last_eval = static_cast<std::size_t>(-1);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const Batch b = sample_batch(train_set, cfg.batch, rng);
    const Tensor4 out = net.forward(b.lr_input, b.base, {.training = true, .clamp = false});
    const LossResult loss = mse_loss(out, b.hr);
    const double lr = lr_at(it - 1, cfg);
    if (!std::isfinite(loss.loss)) {
      net.params() = last_good;
      net.clear_cache();
      checkpoint(it, CheckpointKind::diverged);
      throw DataError("training diverged at iteration " + std::to_string(it) + " (loss is not finite)");
    }
    last_good = net.params();
    const NetworkGrads grads = net.backward(loss.grad);
    adam_step(net, grads, res.optimizer, lr);
    net.clear_cache();

    res.losses.push_back({it, loss.loss, lr});
    if (cfg.log_every != 0 && (it == 1 || it % cfg.log_every == 0 || it == cfg.iterations)) {
      emit(format_loss_line(res.losses.back()));
    }
    if (test_set && cfg.eval_every != 0 && it % cfg.eval_every == 0) {
      res.evals.push_back(run_eval(it, net, *test_set));
      emit(format_eval_line(res.evals.back()));
      last_eval = it;
    }
    if (cfg.checkpoint_every != 0 && it % cfg.checkpoint_every == 0 && it != cfg.iterations) {
      checkpoint(it, CheckpointKind::periodic);
    }
  }
  if (test_set && last_eval != cfg.iterations) {
    res.evals.push_back(run_eval(cfg.iterations, net, *test_set));
    emit(format_eval_line(res.evals.back()));
  }
  checkpoint(cfg.iterations, CheckpointKind::final);
  return res;
}

TrainResult train(const TrainConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  if (cfg.train_dir.empty()) throw ConfigurationError("no training directory given");
  const Dataset train_set = load_dataset(cfg.train_dir, cfg.model.scale, cfg.train_pairs);
  std::optional<Dataset> test_set;
  if (!cfg.test_dir.empty()) test_set = load_dataset(cfg.test_dir, cfg.model.scale);

  TrainHooks hooks;
  std::ofstream log;
  if (!cfg.out_dir.empty()) {
    for (const char* sub : {"checkpoints", "logs", "reports"}) fs::create_directories(cfg.out_dir / sub);
    const fs::path log_path = cfg.out_dir / "logs" / "train.log";
    log.open(log_path);
    if (!log) throw IoError(log_path.string(), "cannot open for writing");
    hooks.log = &log;
    hooks.on_checkpoint = [&](const CheckpointEvent& ev, const Network& net, const AdamState& adam) {
      char name[64];
      switch (ev.kind) {
        case CheckpointKind::periodic:
          std::snprintf(name, sizeof name, "iter_%08zu.mxsr", ev.iter);
          break;
        case CheckpointKind::final:
          std::snprintf(name, sizeof name, "final.mxsr");
          break;
        case CheckpointKind::diverged:
          std::snprintf(name, sizeof name, "diverged_%08zu.mxsr", ev.iter);
          break;
      }
      save_checkpoint(cfg.out_dir / "checkpoints" / name, net, &adam);
    };
  }

  TrainResult res = train(cfg, train_set, test_set ? &*test_set : nullptr, hooks);
  if (!cfg.out_dir.empty() && test_set) {
    const EvalReport rep = evaluate(res.network, *test_set);
    std::ofstream(cfg.out_dir / "reports" / "final_eval.txt") << rep.to_text();
    std::ofstream(cfg.out_dir / "reports" / "final_eval.csv") << rep.to_csv();
  }
  return res;
}

namespace {

// Indices to probe in a buffer of n entries: all of them, or a seeded sample.
std::vector<std::size_t> pick_coords(std::size_t n, std::size_t limit, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (limit == 0 || limit >= n) return idx;
  for (std::size_t i = 0; i < limit; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport grad_check_report(Network& net, const Tensor4& probe, const GradCheckOptions& options) {
  const std::size_t r = net.scale();
  const Shape4 hr_shape{probe.n(), 1, probe.h() * r, probe.w() * r};
  Rng rng(options.seed);
  Tensor4 base(hr_shape), target(hr_shape);
  for (double& v : base.values()) v = rng.uniform();
  for (double& v : target.values()) v = rng.uniform();

  Tensor4 x = probe;
  const ForwardOptions fwd{.training = true, .clamp = false};
  auto loss_at = [&](std::vector<std::uint8_t>* sig) {
    const Tensor4 out = net.forward(x, base, fwd);
    double l = 0.0;
    auto o = out.values();
    auto t = target.values();
    for (std::size_t i = 0; i < o.size(); ++i) l += 0.5 * (o[i] - t[i]) * (o[i] - t[i]);
    if (sig) *sig = net.activation_signature();
    return l;
  };

  const Tensor4 out = net.forward(x, base, fwd);
  const std::vector<std::uint8_t> signature = net.activation_signature();
  Tensor4 g = sub(out, target);
  NetworkGrads grads = net.backward(g);
  if (options.corrupt) options.corrupt(grads);

  std::vector<std::span<double>> values;
  std::vector<std::span<const double>> analytic;
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    values.push_back(net.params()[i].weights.values());
    analytic.push_back(grads.layers[i].weights.values());
    values.push_back(net.params()[i].bias);
    analytic.push_back(grads.layers[i].bias);
  }
  if (options.check_input) {
    values.push_back(x.values());
    analytic.push_back(grads.input.values());
  }

  GradCheckReport report;
  std::vector<std::uint8_t> sig_p, sig_m;
  for (std::size_t t = 0; t < values.size(); ++t) {
    auto v = values[t];
    auto a = analytic[t];
    if (a.size() != v.size()) throw StateError("grad_check: gradient buffer size mismatch");
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i : pick_coords(v.size(), options.max_coords_per_tensor, rng)) {
      const double orig = v[i];
      v[i] = orig + options.eps;
      const double lp = loss_at(&sig_p);
      v[i] = orig - options.eps;
      const double lm = loss_at(&sig_m);
      v[i] = orig;
      if (sig_p != signature || sig_m != signature) {
        ++report.skipped_kinks;
        continue;
      }
      pairs.emplace_back(a[i], (lp - lm) / (2.0 * options.eps));
    }
    double scale = 0.0;
    for (const auto& [an, nu] : pairs) scale = std::max({scale, std::abs(an), std::abs(nu)});
    double worst = 0.0;
    for (const auto& [an, nu] : pairs) {
      const double diff = std::abs(an - nu);
      if (scale == 0.0) continue;
      worst = std::max(worst, diff / std::max({std::abs(an), std::abs(nu), 1e-3 * scale}));
    }
    report.checked += pairs.size();
    report.tensor_errors.push_back(worst);
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  net.clear_cache();
  return report;
}

double grad_check(Network& net, const Tensor4& probe, double eps) {
  GradCheckOptions o;
  o.eps = eps;
  return grad_check_report(net, probe, o).max_rel_error;
}

}  // namespace mxsr
