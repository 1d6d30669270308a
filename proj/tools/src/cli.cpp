#include "mxsr_cli/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mxsr/checkpoint.hpp"
#include "mxsr/error.hpp"
#include "mxsr/evaluate.hpp"
#include "mxsr/image_io.hpp"
#include "mxsr/parallel.hpp"
#include "mxsr/sparsity.hpp"
#include "mxsr/sweep.hpp"
#include "mxsr/training.hpp"

namespace mxsr::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string preset = "toy";
  std::string activation = "mu";
  std::size_t width = 0;
  std::size_t depth = 6;
  std::size_t scale = 4;
  std::string train_dir;
  std::string test_dir;
  std::string out;
  std::size_t iters = 0;
  std::size_t batch = 0;
  std::size_t crop = 0;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool deterministic = false;

  double lr = 0.0;
  std::size_t lr_drop_at = 0;
  std::size_t log_every = 100;
  std::size_t eval_every = 0;
  std::size_t checkpoint_every = 10000;
  std::string degradation = "bicubic";
  bool dry_run = false;

  std::string checkpoint;
  std::string input;
  std::string output;
  std::string baseline;

  std::vector<std::size_t> widths;
  std::vector<std::string> kinds{"relu", "mu"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool no_match_budget = false;

  bool all = false;
  std::size_t max_coords = 0;
  double tolerance = 1e-4;
  std::size_t cell = 8;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void add_model(CLI::App* s, Options& o) {
  s->add_option("--preset", o.preset, "toy, espcn-mu, vdsr-mu or dnsr")->capture_default_str();
  s->add_option("--activation", o.activation, "relu, lrelu, elu, mu, mu-d, mu-m, mu-s, mu-r:<n> (toy only)")
      ->capture_default_str();
  s->add_option("--width", o.width, "toy filter count (0 picks the unit's default)");
  s->add_option("--depth", o.depth, "toy conv count")->capture_default_str();
  s->add_option("--scale", o.scale, "upscaling factor")->check(CLI::IsMember({3, 4}))->capture_default_str();
}

void add_common(CLI::App* s, Options& o) {
  s->add_option("--config", o.config, "key = value file; flags given here override it");
  s->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_flag("--deterministic", o.deterministic, "bitwise reproducible runs (always the case; accepted for scripts)");
}

void add_training(CLI::App* s, Options& o) {
  s->add_option("--train-dir", o.train_dir, "training images (directory or manifest)");
  s->add_option("--test-dir", o.test_dir, "test images (directory or manifest)");
  s->add_option("--iters", o.iters, "iterations (default from the protocol)");
  s->add_option("--batch", o.batch, "batch size (default from the protocol)");
  s->add_option("--crop", o.crop, "HR crop side (default from the protocol)");
  s->add_option("--seed", o.seed, "seed for initialization and sampling")->capture_default_str();
  s->add_option("--lr", o.lr, "initial learning rate (default 1e-4)");
  s->add_option("--lr-drop-at", o.lr_drop_at, "iteration of the 10x learning-rate drop (default half of --iters)");
  s->add_option("--degradation", o.degradation, "bicubic or nearest")->capture_default_str();
}

Network network_from_options(const Options& o, std::uint64_t seed) {
  PresetOptions p;
  p.preset = parse_preset(o.preset);
  p.activation = parse_activation(o.activation);
  p.width = o.width;
  p.depth = o.depth;
  p.scale = o.scale;
  return build_network(p, seed);
}

Network load_network(const Options& o, bool scale_given) {
  Checkpoint ck = load_checkpoint(o.checkpoint);
  if (scale_given && ck.network.scale() != o.scale) {
    throw ConfigurationError("checkpoint upscales by " + std::to_string(ck.network.scale()) + " but --scale is " +
                             std::to_string(o.scale));
  }
  return std::move(ck.network);
}

void require_path(const std::string& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::exists(p)) throw IoError(p, "does not exist");
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError(p.string(), "cannot open for writing");
  f << text;
  if (!f) throw IoError(p.string(), "write failed");
}

fs::path reports_dir(const std::string& out) {
  const fs::path d = fs::path(out) / "reports";
  fs::create_directories(d);
  return d;
}

TrainConfig training_config(const Options& o, CLI::App* s) {
  const Preset preset = parse_preset(o.preset);
  TrainConfig cfg = preset == Preset::toy ? TrainConfig::toy(parse_activation(o.activation), o.scale)
                                          : TrainConfig::full(preset, o.scale);
  cfg.model.width = o.width;
  cfg.model.depth = o.depth;
  if (s->count("--iters")) {
    cfg.iterations = o.iters;
    cfg.lr_drop_at = o.iters / 2;
  }
  if (s->count("--lr-drop-at")) cfg.lr_drop_at = o.lr_drop_at;
  if (s->count("--lr")) cfg.lr_initial = o.lr;
  if (s->count("--batch")) cfg.batch.batch = o.batch;
  if (s->count("--crop")) cfg.batch.crop_hr = o.crop;
  cfg.seed = o.seed;
  cfg.train_pairs.degradation = parse_degradation(o.degradation);
  cfg.train_dir = o.train_dir;
  cfg.test_dir = o.test_dir;
  cfg.out_dir = o.out;
  cfg.deterministic = true;
  return cfg;
}

std::string describe(const TrainConfig& c) {
  std::ostringstream s;
  s << "preset = " << to_string(c.model.preset) << "\n"
    << "activation = " << to_string(c.model.activation) << "\n"
    << "width = " << c.model.width << "\n"
    << "depth = " << c.model.depth << "\n"
    << "scale = " << c.model.scale << "\n"
    << "iters = " << c.iterations << "\n"
    << "lr = " << c.lr_initial << "\n"
    << "lr-drop-at = " << c.lr_drop_at << "\n"
    << "batch = " << c.batch.batch << "\n"
    << "crop = " << c.batch.crop_hr << "\n"
    << "seed = " << c.seed << "\n"
    << "degradation = " << to_string(c.train_pairs.degradation) << "\n"
    << "train-dir = " << c.train_dir.string() << "\n";
  if (!c.test_dir.empty()) s << "test-dir = " << c.test_dir.string() << "\n";
  return s.str();
}

int cmd_train(const Options& o, CLI::App* s, std::ostream& out) {
  if (o.dry_run) {
    // paths may point at data that only exists on the training machine
    if (o.train_dir.empty()) throw UsageError("--train-dir is required");
  } else {
    require_path(o.train_dir, "--train-dir");
    if (!o.test_dir.empty()) require_path(o.test_dir, "--test-dir");
  }
  if (o.out.empty()) throw UsageError("--out is required for train");
  TrainConfig cfg = training_config(o, s);
  cfg.log_every = o.log_every;
  cfg.eval_every = o.eval_every;
  cfg.checkpoint_every = o.checkpoint_every;
  cfg.validate();
  if (o.dry_run) {
    out << describe(cfg);
    return 0;
  }
  write_file(reports_dir(o.out) / "config.txt", describe(cfg));

  const TrainResult res = train(cfg);
  out << "trained " << to_string(cfg.model.preset) << " (" << count_params(res.network) << " parameters) for "
      << cfg.iterations << " iterations\n";
  if (!res.losses.empty()) out << format_loss_line(res.losses.back()) << "\n";
  for (const auto& e : res.evals) out << format_eval_line(e) << "\n";
  out << "outputs in " << o.out << "\n";
  return 0;
}

int cmd_eval(const Options& o, CLI::App* s, std::ostream& out) {
  require_path(o.test_dir, "--test-dir");
  PairOptions pairs;
  pairs.degradation = parse_degradation(o.degradation);
  EvalReport rep;
  if (!o.baseline.empty()) {
    if (!o.checkpoint.empty()) throw UsageError("--baseline and --checkpoint are exclusive");
    const ResampleMethod m = o.baseline == "bicubic"   ? ResampleMethod::bicubic
                             : o.baseline == "nearest" ? ResampleMethod::nearest
                                                       : throw UsageError("--baseline must be bicubic or nearest");
    rep = evaluate_interpolation(load_dataset(o.test_dir, o.scale, pairs), m);
  } else {
    require_path(o.checkpoint, "--checkpoint");
    Network net = load_network(o, s->count("--scale") > 0);
    rep = evaluate(net, fs::path(o.test_dir), net.scale(), pairs);
  }
  out << rep.to_text();
  if (!o.out.empty()) {
    const fs::path d = reports_dir(o.out);
    const std::string stem = "eval_" + rep.dataset + "_x" + std::to_string(rep.scale);
    write_file(d / (stem + ".txt"), rep.to_text());
    write_file(d / (stem + ".csv"), rep.to_csv());
  }
  return rep.failures.empty() ? 0 : 1;
}

int cmd_upscale(const Options& o, std::ostream& out) {
  require_path(o.checkpoint, "--checkpoint");
  require_path(o.input, "--input");
  if (o.output.empty()) throw UsageError("--output is required");
  Network net = load_network(o, false);
  const Image lr = load_image(o.input);
  const Image sr = upscale_image(net, lr);
  save_image(sr, o.output);
  out << "wrote " << o.output << " (" << sr.w() << "x" << sr.h() << ")\n";
  return 0;
}

int cmd_sweep(const Options& o, CLI::App* s, std::ostream& out, std::ostream& err) {
  require_path(o.train_dir, "--train-dir");
  require_path(o.test_dir, "--test-dir");
  if (o.widths.empty()) throw UsageError("--widths is required");
  SweepOptions so;
  so.widths = o.widths;
  for (const auto& k : o.kinds) so.kinds.push_back(parse_activation(k));
  so.seeds = o.seeds;
  so.match_budget = !o.no_match_budget;
  Options po = o;
  po.preset = "toy";
  TrainConfig base = training_config(po, s);
  base.log_every = 0;
  base.checkpoint_every = 0;
  base.validate();

  const Dataset train_set = load_dataset(o.train_dir, o.scale, base.train_pairs);
  const Dataset test_set = load_dataset(o.test_dir, o.scale);
  const SweepResult res = sweep(so, base, train_set, test_set, [&](const std::string& l) { err << l << "\n"; });
  out << res.to_csv();
  if (so.kinds.size() >= 2) {
    const auto gaps = res.gaps(so.kinds[1], so.kinds[0]);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      if (!gaps[i]) continue;
      char buf[128];
      std::snprintf(buf, sizeof buf, "gap %s - %s budget %zu: %+.4f dB\n", to_string(so.kinds[1]).c_str(),
                    to_string(so.kinds[0]).c_str(), i, *gaps[i]);
      out << buf;
    }
  }
  if (!o.out.empty()) {
    const fs::path d = reports_dir(o.out);
    write_file(d / "sweep.csv", res.to_csv());
    write_file(d / "sweep.dat", res.to_plot_data());
  }
  return 0;
}

struct GradCase {
  std::string name;
  PresetOptions model;
  std::size_t max_coords;
};

int cmd_gradcheck(const Options& o, CLI::App* s, std::ostream& out) {
  std::vector<GradCase> cases;
  const std::size_t big = s->count("--max-coords") ? o.max_coords : 24;
  if (o.all) {
    for (const auto& a : all_activation_kinds()) {
      PresetOptions p;
      p.activation = a;
      p.scale = o.scale;
      cases.push_back({"toy/" + to_string(a), p, o.max_coords});
    }
    for (Preset pr : {Preset::espcn_mu, Preset::vdsr_mu, Preset::dnsr}) {
      PresetOptions p;
      p.preset = pr;
      p.scale = o.scale;
      cases.push_back({to_string(pr), p, pr == Preset::espcn_mu ? o.max_coords : big});
    }
  } else {
    PresetOptions p;
    p.preset = parse_preset(o.preset);
    p.activation = parse_activation(o.activation);
    p.width = o.width;
    p.depth = o.depth;
    p.scale = o.scale;
    cases.push_back({p.preset == Preset::toy ? "toy/" + to_string(p.activation) : to_string(p.preset), p,
                     p.preset == Preset::toy || p.preset == Preset::espcn_mu ? o.max_coords : big});
  }
  for (auto& c : cases) make_spec(c.model).validate();

  bool ok = true;
  for (const auto& c : cases) {
    Network net = build_network(c.model, o.seed);
    Rng rng(o.seed + 1);
    Tensor4 probe(Shape4{1, 1, 5, 5});
    for (double& v : probe.values()) v = rng.uniform(-0.5, 0.5);
    GradCheckOptions go;
    go.seed = o.seed;
    go.max_coords_per_tensor = c.max_coords;
    const GradCheckReport rep = grad_check_report(net, probe, go);
    const bool pass = rep.max_rel_error < o.tolerance && rep.checked > 0;
    ok = ok && pass;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s max_rel_error %.3e checked %zu skipped %zu %s\n", c.name.c_str(),
                  rep.max_rel_error, rep.checked, rep.skipped_kinks, pass ? "PASS" : "FAIL");
    out << buf;
  }
  return ok ? 0 : 1;
}

int cmd_sparsity(const Options& o, CLI::App* s, std::ostream& out) {
  require_path(o.input, "--input");
  Network net = o.checkpoint.empty() ? network_from_options(o, o.seed) : load_network(o, s->count("--scale") > 0);
  ImagePair pair = make_pair(load_image(o.input), net.scale());
  pair.name = fs::path(o.input).stem().string();
  const SparsityMap map = sparsity_map(net, pair);
  out << map.to_text();
  if (!o.out.empty()) {
    const fs::path d = reports_dir(o.out);
    save_image(map.render(o.cell), d / ("sparsity_" + pair.name + ".pgm"));
    write_file(d / ("sparsity_" + pair.name + ".csv"), map.to_csv());
  }
  return 0;
}

int cmd_params(const Options& o, std::ostream& out) {
  if (o.all) {
    struct Row {
      const char* label;
      Preset preset;
      Activation act;
    };
    const Row rows[] = {{"toy-relu", Preset::toy, Activation::relu()},   {"toy-mu", Preset::toy, Activation::mu()},
                        {"toy-mu-d", Preset::toy, Activation::mu_d()},   {"espcn-mu", Preset::espcn_mu, Activation::mu()},
                        {"vdsr-mu", Preset::vdsr_mu, Activation::mu()}, {"dnsr", Preset::dnsr, Activation::mu()}};
    for (const auto& r : rows) {
      PresetOptions p;
      p.preset = r.preset;
      p.activation = r.act;
      p.scale = o.scale;
      const std::size_t n = count_params(make_spec(p));
      char buf[96];
      std::snprintf(buf, sizeof buf, "%-10s %8zu  (%.1fK)\n", r.label, n, static_cast<double>(n) / 1000.0);
      out << buf;
    }
    return 0;
  }
  PresetOptions p;
  p.preset = parse_preset(o.preset);
  p.activation = parse_activation(o.activation);
  p.width = o.width;
  p.depth = o.depth;
  p.scale = o.scale;
  out << count_params(make_spec(p)) << "\n";
  return 0;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot read config file");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigurationError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigurationError(path + ":" + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

int run(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Maxout-unit super-resolution toolkit"};
  app.name("mxsr");
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a network and write checkpoints, logs and reports");
  add_common(train, o);
  add_model(train, o);
  add_training(train, o);
  train->add_option("--out", o.out, "output directory");
  train->add_option("--log-every", o.log_every, "iterations between loss lines")->capture_default_str();
  train->add_option("--eval-every", o.eval_every, "iterations between test evaluations (0: end only)");
  train->add_option("--checkpoint-every", o.checkpoint_every, "iterations between checkpoints")->capture_default_str();
  train->add_flag("--dry-run", o.dry_run, "validate the configuration and print it without training");

  auto* eval = app.add_subcommand("eval", "score a checkpoint or an interpolation baseline on a test set");
  add_common(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  eval->add_option("--baseline", o.baseline, "bicubic or nearest instead of a checkpoint");
  eval->add_option("--test-dir", o.test_dir, "test images (directory or manifest)");
  eval->add_option("--scale", o.scale, "upscaling factor")->check(CLI::IsMember({3, 4}))->capture_default_str();
  eval->add_option("--degradation", o.degradation, "bicubic or nearest")->capture_default_str();
  eval->add_option("--out", o.out, "output directory for reports");

  auto* upscale = app.add_subcommand("upscale", "super-resolve one image (luma by the network, chroma bicubic)");
  add_common(upscale, o);
  upscale->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  upscale->add_option("--input", o.input, "low-resolution image");
  upscale->add_option("--output", o.output, "output image (.png, .bmp, .ppm, .pgm)");

  auto* sweep_cmd = app.add_subcommand("sweep", "PSNR versus parameter count for several units");
  add_common(sweep_cmd, o);
  add_training(sweep_cmd, o);
  sweep_cmd->add_option("--scale", o.scale, "upscaling factor")->check(CLI::IsMember({3, 4}))->capture_default_str();
  sweep_cmd->add_option("--depth", o.depth, "toy conv count")->capture_default_str();
  sweep_cmd->add_option("--widths", o.widths, "budget levels (ReLU-family widths)")->delimiter(',');
  sweep_cmd->add_option("--kinds", o.kinds, "units to compare; the first is the reference")->delimiter(',');
  sweep_cmd->add_option("--seeds", o.seeds, "seeds per cell; the cell reports the median")->delimiter(',');
  sweep_cmd->add_flag("--no-match-budget", o.no_match_budget, "use the widths literally for every unit");
  sweep_cmd->add_option("--out", o.out, "output directory for reports");

  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic gradients with central differences");
  add_common(gradcheck, o);
  add_model(gradcheck, o);
  gradcheck->add_flag("--all", o.all, "every activation unit on the toy net plus the large presets");
  gradcheck->add_option("--seed", o.seed, "seed for weights, probe and target")->capture_default_str();
  gradcheck->add_option("--max-coords", o.max_coords, "coordinates per tensor (0: all; large presets default 24)");
  gradcheck->add_option("--tolerance", o.tolerance, "maximum relative error")->capture_default_str();

  auto* sparsity = app.add_subcommand("sparsity", "per-channel activation ratios of a network on one image");
  add_common(sparsity, o);
  add_model(sparsity, o);
  sparsity->add_option("--checkpoint", o.checkpoint, "checkpoint file (default: a freshly initialized net)");
  sparsity->add_option("--input", o.input, "HR image; it is degraded before the forward pass");
  sparsity->add_option("--seed", o.seed, "initialization seed without a checkpoint")->capture_default_str();
  sparsity->add_option("--cell", o.cell, "grid cell size in pixels")->capture_default_str();
  sparsity->add_option("--out", o.out, "output directory for the grid and table");

  auto* params = app.add_subcommand("params", "closed-form parameter count of a preset");
  add_common(params, o);
  add_model(params, o);
  params->add_flag("--all", o.all, "table of the standard configurations");

  std::vector<std::string> args = input_args;
  try {
    const std::string config = find_config(args);
    if (!config.empty() && !args.empty()) {
      CLI::App* sub = nullptr;
      for (auto* c : app.get_subcommands([](CLI::App*) { return true; })) {
        if (c->get_name() == args[0]) sub = c;
      }
      if (!sub) throw UsageError("--config must follow a subcommand");
      std::vector<std::string> injected;
      for (const auto& [key, value] : read_config(config)) {
        const std::string flag = "--" + key;
        if (key == "config" || sub->get_option_no_throw(flag) == nullptr) {
          throw UsageError(config + ": unknown key '" + key + "' for " + args[0]);
        }
        if (given_on_command_line(args, flag)) continue;
        injected.push_back(flag + "=" + value);
      }
      args.insert(args.begin() + 1, injected.begin(), injected.end());
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'mxsr --help' for usage\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigurationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    set_num_threads(o.threads);
    if (*train) return cmd_train(o, train, out);
    if (*eval) return cmd_eval(o, eval, out);
    if (*upscale) return cmd_upscale(o, out);
    if (*sweep_cmd) return cmd_sweep(o, sweep_cmd, out, err);
    if (*gradcheck) return cmd_gradcheck(o, gradcheck, out);
    if (*sparsity) return cmd_sparsity(o, sparsity, out);
    if (*params) return cmd_params(o, out);
  } catch (const ConfigurationError& e) {
    // bad flag values surface here once they are interpreted
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const SpecificationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mxsr::cli
