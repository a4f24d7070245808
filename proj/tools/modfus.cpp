// Command-line front end: synthesis, diffusion training, probing, and the
// evaluation protocols, each as one reproducible run directory.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "modfus/checkpoint.hpp"
#include "modfus/daffus.hpp"
#include "modfus/dataset.hpp"
#include "modfus/diffusion.hpp"
#include "modfus/errors.hpp"
#include "modfus/evalharness.hpp"
#include "modfus/report.hpp"
#include "modfus/schedule.hpp"
#include "modfus/synth.hpp"
#include "modfus/train.hpp"
#include "modfus/unet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace modfus;

namespace {

struct SynthCfg {
  std::vector<std::string> schemes{"bpsk", "qpsk", "pam4", "gfsk"};
  std::vector<double> snrs{18.0};
  std::size_t count = 100;
  std::size_t length = 128;
  int sps = 8;
  double rolloff = 0.35;
  int span = 8;
  double cfo_max = 0.005;
  int tau_max = 4;
  bool random_phase = true;
};

struct DiffusionCfg {
  std::string schedule = "cosine";
  int steps = 100;
  int epochs = 2000;
  int batch = 64;
  double lr = 2e-4;
  double weight_decay = 0.01;
};

struct HeadCfg {
  std::string variant = "daffus";
  int t = 1;
  int epochs = 50;
  double lr = 0.01;
  int batch = 32;
  int n = 10;
  int trials = 10;
  bool stochastic = false;
  int d = 128;
};

struct EvalCfg {
  std::vector<int> t_values{1, 100};
  std::vector<std::string> variants{"single:b1", "single:b2", "single:b3",  "single:b4",
                                    "single:b5", "single:b6", "single:b7",  "single:b8",
                                    "fusion_down", "fusion_all", "daffus"};
  std::vector<std::size_t> lengths{64, 128};
  std::vector<double> rayleigh_sigma2{0.6, 0.9, 1.2};
  std::vector<double> rician_k{2, 6, 10, 14, 18};
  std::vector<std::string> colors{"white", "pink", "red", "blue"};
  double noise_snr = 10.0;
  std::uint64_t crop_seed = 0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "runs";
  SynthCfg synth;
  DiffusionCfg diffusion;
  HeadCfg head;
  EvalCfg eval;
};

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      s += v[k];
    } else if constexpr (std::is_same_v<T, double>) {
      s += format_double(v[k]);
    } else {
      s += std::to_string(v[k]);
    }
  }
  return s;
}

// Canonical serialization; its hash identifies the run.
std::string config_ini(const RunConfig& c) {
  std::ostringstream o;
  o << "seed = " << c.seed << "\n";
  o << "out = " << c.out << "\n";
  o << "\n[synth]\n";
  o << "schemes = " << join(c.synth.schemes) << "\n";
  o << "snrs = " << join(c.synth.snrs) << "\n";
  o << "count = " << c.synth.count << "\n";
  o << "length = " << c.synth.length << "\n";
  o << "sps = " << c.synth.sps << "\n";
  o << "rolloff = " << format_double(c.synth.rolloff) << "\n";
  o << "span = " << c.synth.span << "\n";
  o << "cfo_max = " << format_double(c.synth.cfo_max) << "\n";
  o << "tau_max = " << c.synth.tau_max << "\n";
  o << "random_phase = " << (c.synth.random_phase ? "true" : "false") << "\n";
  o << "\n[diffusion]\n";
  o << "schedule = " << c.diffusion.schedule << "\n";
  o << "steps = " << c.diffusion.steps << "\n";
  o << "epochs = " << c.diffusion.epochs << "\n";
  o << "batch = " << c.diffusion.batch << "\n";
  o << "lr = " << format_double(c.diffusion.lr) << "\n";
  o << "weight_decay = " << format_double(c.diffusion.weight_decay) << "\n";
  o << "\n[head]\n";
  o << "variant = " << c.head.variant << "\n";
  o << "t = " << c.head.t << "\n";
  o << "epochs = " << c.head.epochs << "\n";
  o << "lr = " << format_double(c.head.lr) << "\n";
  o << "batch = " << c.head.batch << "\n";
  o << "n = " << c.head.n << "\n";
  o << "trials = " << c.head.trials << "\n";
  o << "stochastic = " << (c.head.stochastic ? "true" : "false") << "\n";
  o << "d = " << c.head.d << "\n";
  o << "\n[eval]\n";
  o << "t_values = " << join(c.eval.t_values) << "\n";
  o << "variants = " << join(c.eval.variants) << "\n";
  o << "lengths = " << join(c.eval.lengths) << "\n";
  o << "rayleigh_sigma2 = " << join(c.eval.rayleigh_sigma2) << "\n";
  o << "rician_k = " << join(c.eval.rician_k) << "\n";
  o << "colors = " << join(c.eval.colors) << "\n";
  o << "noise_snr = " << format_double(c.eval.noise_snr) << "\n";
  o << "crop_seed = " << c.eval.crop_seed << "\n";
  return o.str();
}

// Config-file sections resolve against subcommands of the same name. The
// [diffusion]/[head]/[eval] targets below exist only for that lookup: hidden
// from help, never dispatched, options named exactly like the file keys.
// [synth] lands on the real synth subcommand, whose options carry matching
// second names.
void register_config(CLI::App& app, RunConfig& c) {
  app.add_option("--seed", c.seed, "global random seed")->envname("MODFUS_SEED");
  app.add_option("--out", c.out, "directory run outputs go under");

  CLI::App* d = app.add_subcommand("diffusion")->group("");
  d->add_option("--schedule", c.diffusion.schedule);
  d->add_option("--steps", c.diffusion.steps);
  d->add_option("--epochs", c.diffusion.epochs);
  d->add_option("--batch", c.diffusion.batch);
  d->add_option("--lr", c.diffusion.lr);
  d->add_option("--weight_decay", c.diffusion.weight_decay);

  CLI::App* h = app.add_subcommand("head")->group("");
  h->add_option("--variant", c.head.variant);
  h->add_option("--t", c.head.t);
  h->add_option("--epochs", c.head.epochs);
  h->add_option("--lr", c.head.lr);
  h->add_option("--batch", c.head.batch);
  h->add_option("--n", c.head.n);
  h->add_option("--trials", c.head.trials);
  h->add_option("--stochastic", c.head.stochastic);
  h->add_option("--d", c.head.d);

  CLI::App* e = app.add_subcommand("eval")->group("");
  e->add_option("--t_values", c.eval.t_values)->delimiter(',');
  e->add_option("--variants", c.eval.variants)->delimiter(',');
  e->add_option("--lengths", c.eval.lengths)->delimiter(',');
  e->add_option("--rayleigh_sigma2", c.eval.rayleigh_sigma2)->delimiter(',');
  e->add_option("--rician_k", c.eval.rician_k)->delimiter(',');
  e->add_option("--colors", c.eval.colors)->delimiter(',');
  e->add_option("--noise_snr", c.eval.noise_snr);
  e->add_option("--crop_seed", c.eval.crop_seed);
}

// Subcommand flags override config-file values only when actually given.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* sub, const std::string& name, T& target, const std::string& desc) {
    auto tmp = std::make_shared<T>(target);
    CLI::Option* opt = sub->add_option(name, *tmp, desc);
    appliers_.push_back([opt, tmp, &target] {
      if (opt->count() > 0) target = *tmp;
    });
    return opt;
  }

  CLI::Option* add_flag(CLI::App* sub, const std::string& name, bool& target,
                        const std::string& desc) {
    auto tmp = std::make_shared<bool>(false);
    CLI::Option* opt = sub->add_flag(name, *tmp, desc);
    appliers_.push_back([opt, tmp, &target] {
      if (opt->count() > 0) target = *tmp;
    });
    return opt;
  }

  void apply() {
    for (auto& f : appliers_) f();
  }

 private:
  std::vector<std::function<void()>> appliers_;
};

struct RunDir {
  fs::path dir;
  std::string hash;  // 16 hex digits over the resolved config

  fs::path file(const std::string& name) const { return dir / name; }
};

RunDir make_run_dir(const RunConfig& cfg, const std::string& cmd, const std::string& run_name) {
  const std::string ini = config_ini(cfg);
  RunDir rd;
  rd.hash = hash_hex(hash_bytes(ini));
  std::string name = run_name;
  if (name.empty()) {
    // Wall-clock stamps stay in directory names; file contents must be
    // byte-reproducible.
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    name = cmd + "-" + stamp + "-" + rd.hash.substr(0, 8);
  }
  rd.dir = fs::path(cfg.out) / name;
  fs::create_directories(rd.dir);
  std::ofstream ini_out(rd.file("config.ini"), std::ios::binary);
  ini_out << ini;
  if (!ini_out) throw std::invalid_argument("cannot write " + rd.file("config.ini").string());
  return rd;
}

json base_meta(const RunConfig& cfg, const std::string& cmd, const RunDir& rd) {
  json j;
  j["command"] = cmd;
  j["config_hash"] = rd.hash;
  j["seed"] = cfg.seed;
  return j;
}

void write_meta(const RunDir& rd, const json& j) {
  std::ofstream out(rd.file("metadata.json"), std::ios::binary);
  out << j.dump(2) << "\n";
  if (!out) throw std::invalid_argument("cannot write metadata.json");
}

json meta_strings(const std::map<std::string, std::string>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

ProbeSpec probe_spec(const RunConfig& cfg) {
  ProbeSpec spec;
  spec.split.n_per_type_per_snr = cfg.head.n;
  spec.split.trials = cfg.head.trials;
  spec.split.seed = cfg.seed;
  spec.head.epochs = cfg.head.epochs;
  spec.head.lr = cfg.head.lr;
  spec.head.batch_size = cfg.head.batch;
  spec.head.seed = cfg.seed;
  spec.head.t = cfg.head.t;
  spec.head.stochastic = cfg.head.stochastic;
  spec.head.d = cfg.head.d;
  spec.variant = variant_from_string(cfg.head.variant);
  return spec;
}

NoiseSchedule checkpoint_schedule(const Checkpoint& ck) {
  return build_schedule(ck.schedule_kind, ck.total_steps);
}

Checkpoint load_heads_checkpoint(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (!ck.heads.has_value()) {
    throw std::invalid_argument("checkpoint has no trained heads: " + path);
  }
  return ck;
}

void print_report(const EvalReport& r) {
  std::printf("accuracy %.4f", r.accuracy);
  if (!r.per_trial.empty()) {
    std::printf(" +/- %.4f over %zu trials", r.accuracy_std, r.per_trial.size());
  }
  std::printf("\n");
  for (const auto& [snr, acc] : r.accuracy_by_snr) {
    std::printf("  snr %s dB: %.4f\n", format_double(snr).c_str(), acc);
  }
}

int cmd_synth(const RunConfig& cfg, const std::string& run_name, const std::string& out_file) {
  SynthSpec spec;
  spec.schemes = cfg.synth.schemes;
  spec.snrs_db = cfg.synth.snrs;
  spec.count_per_scheme_per_snr = cfg.synth.count;
  spec.length = cfg.synth.length;
  spec.pulse.sps = cfg.synth.sps;
  spec.pulse.rolloff = cfg.synth.rolloff;
  spec.pulse.span = cfg.synth.span;
  spec.impairments.cfo_max = cfg.synth.cfo_max;
  spec.impairments.tau_max = cfg.synth.tau_max;
  spec.impairments.random_phase = cfg.synth.random_phase;

  const Dataset ds = synth_dataset(spec, cfg.seed);
  const RunDir rd = make_run_dir(cfg, "synth", run_name);
  const fs::path path = out_file.empty() ? rd.file("dataset.mfds") : fs::path(out_file);
  save(ds, path.string());

  json meta = base_meta(cfg, "synth", rd);
  meta["dataset"] = path.string();
  meta["num_signals"] = ds.size();
  meta["length"] = ds.signal_length();
  meta["classes"] = ds.class_names;
  write_meta(rd, meta);

  std::printf("wrote %zu signals of length %zu to %s\n", ds.size(), ds.signal_length(),
              path.string().c_str());
  std::printf("classes: %s\n", join(ds.class_names).c_str());
  std::printf("snrs: %s dB, %zu per class per snr\n", join(cfg.synth.snrs).c_str(),
              cfg.synth.count);
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_train_diffusion(const RunConfig& cfg, const std::string& run_name,
                        const std::string& ds_path, const std::string& resume,
                        const std::string& out_file) {
  const Dataset ds = load(ds_path);
  if (ds.signal_length() % kUNetLengthMultiple != 0) {
    throw std::invalid_argument("signal length must be a multiple of " +
                                std::to_string(kUNetLengthMultiple));
  }
  const ScheduleKind kind = schedule_kind_from_string(cfg.diffusion.schedule);
  const NoiseSchedule sched = build_schedule(kind, cfg.diffusion.steps);

  UNetParams<float> params;
  int start_epoch = 0;
  if (!resume.empty()) {
    Checkpoint prev = load_checkpoint(resume);
    if (prev.schedule_kind != kind || prev.total_steps != cfg.diffusion.steps) {
      throw std::invalid_argument("resume checkpoint was trained under a different schedule");
    }
    params = std::move(prev.params);
    start_epoch = prev.epoch;
  } else {
    params = unet_init<float>(UNetConfig{}, cfg.seed);
  }

  TrainHyper hyper;
  hyper.epochs = cfg.diffusion.epochs;
  hyper.batch_size = cfg.diffusion.batch;
  hyper.lr = cfg.diffusion.lr;
  hyper.weight_decay = cfg.diffusion.weight_decay;
  hyper.seed = cfg.seed;

  const TrainResult result = train_diffusion(params, ds, sched, hyper, start_epoch);

  const RunDir rd = make_run_dir(cfg, "train-diffusion", run_name);
  Checkpoint ck;
  ck.params = std::move(params);
  ck.epoch = std::max(start_epoch, cfg.diffusion.epochs);
  ck.schedule_kind = kind;
  ck.total_steps = cfg.diffusion.steps;
  ck.class_names = ds.class_names;
  const fs::path ck_path = out_file.empty() ? rd.file("model.mfck") : fs::path(out_file);
  save_checkpoint(ck, ck_path.string());

  std::string loss_csv = "epoch,loss\n";
  for (std::size_t k = 0; k < result.epoch_losses.size(); ++k) {
    loss_csv += std::to_string(result.first_epoch + static_cast<int>(k)) + "," +
                format_double(result.epoch_losses[k]) + "\n";
  }
  std::ofstream loss_out(rd.file("loss.csv"), std::ios::binary);
  loss_out << loss_csv;

  json meta = base_meta(cfg, "train-diffusion", rd);
  meta["dataset"] = ds_path;
  meta["checkpoint"] = ck_path.string();
  meta["epochs_run"] = result.epoch_losses.size();
  meta["epoch"] = ck.epoch;
  if (!result.epoch_losses.empty()) {
    meta["first_loss"] = result.epoch_losses.front();
    meta["final_loss"] = result.epoch_losses.back();
  }
  write_meta(rd, meta);

  if (!result.epoch_losses.empty()) {
    std::printf("trained epochs %d..%d, loss %.6f -> %.6f\n", result.first_epoch, ck.epoch - 1,
                result.epoch_losses.front(), result.epoch_losses.back());
  } else {
    std::printf("checkpoint already at epoch %d, nothing to train\n", start_epoch);
  }
  std::printf("checkpoint: %s\n", ck_path.string().c_str());
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_probe(const RunConfig& cfg, const std::string& run_name, const std::string& ck_path,
              const std::string& ds_path, const std::string& out_file) {
  const Checkpoint ck = load_checkpoint(ck_path);
  const Dataset ds = load(ds_path);
  const NoiseSchedule sched = checkpoint_schedule(ck);
  const ProbeSpec spec = probe_spec(cfg);

  const EvalReport report = run_limited_label(ck.params, ds, sched, spec);

  // The saved heads are trial 0's, retrained on its split so the artifact
  // matches a row of the report.
  const LabeledSplit split0 = split_limited_label(ds, spec.split, 0);
  HeadHyper hyper0 = spec.head;
  hyper0.seed = Rng(spec.head.seed).derive(0x7ea15u, 0).seed();
  const Heads heads = train_head(ck.params, subset(ds, split0.labeled), sched, hyper0,
                                 spec.variant);

  const RunDir rd = make_run_dir(cfg, "probe", run_name);
  Checkpoint with_heads = ck;
  with_heads.heads = heads;
  with_heads.class_names = ds.class_names;
  const fs::path heads_path = out_file.empty() ? rd.file("model_heads.mfck") : fs::path(out_file);
  save_checkpoint(with_heads, heads_path.string());

  write_csv(rd.file("report.csv").string(), report_rows(report, "probe"));

  Series acc_snr{"accuracy", {}, {}};
  for (const auto& [snr, acc] : report.accuracy_by_snr) {
    acc_snr.x.push_back(snr);
    acc_snr.y.push_back(acc);
  }
  write_line_svg(rd.file("accuracy_by_snr.svg").string(), "Accuracy by SNR", "SNR (dB)",
                 "accuracy", {acc_snr});
  std::vector<std::vector<double>> conf;
  for (const auto& row : report.confusion) {
    conf.emplace_back(row.begin(), row.end());
  }
  write_heatmap_svg(rd.file("confusion.svg").string(), "Confusion (all trials)", ds.class_names,
                    ds.class_names, conf);

  json meta = base_meta(cfg, "probe", rd);
  meta["checkpoint"] = ck_path;
  meta["dataset"] = ds_path;
  meta["heads_checkpoint"] = heads_path.string();
  meta["report"] = meta_strings(report.metadata);
  meta["accuracy"] = report.accuracy;
  meta["accuracy_std"] = report.accuracy_std;
  write_meta(rd, meta);

  print_report(report);
  std::printf("heads: %s\n", heads_path.string().c_str());
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_ablate(const RunConfig& cfg, const std::string& run_name, const std::string& ck_path,
               const std::string& ds_path) {
  const Checkpoint ck = load_checkpoint(ck_path);
  const Dataset ds = load(ds_path);
  const NoiseSchedule sched = checkpoint_schedule(ck);
  const ProbeSpec spec = probe_spec(cfg);

  std::vector<VariantSpec> variants;
  for (const auto& name : cfg.eval.variants) variants.push_back(variant_from_string(name));

  const AblationResult grid = run_ablation(ck.params, ds, sched, cfg.eval.t_values, variants,
                                           spec);

  const RunDir rd = make_run_dir(cfg, "ablate", run_name);
  std::vector<MetricRow> rows;
  for (std::size_t ti = 0; ti < grid.t_values.size(); ++ti) {
    for (std::size_t vi = 0; vi < grid.variants.size(); ++vi) {
      rows.push_back({variant_to_string(grid.variants[vi]), -1,
                      "accuracy_t=" + std::to_string(grid.t_values[ti]),
                      grid.accuracy[ti][vi]});
    }
  }
  write_csv(rd.file("ablation.csv").string(), rows);

  std::vector<std::string> col_labels, row_labels;
  for (int t : grid.t_values) col_labels.push_back("t=" + std::to_string(t));
  for (const auto& v : grid.variants) row_labels.push_back(variant_to_string(v));
  std::vector<std::vector<double>> cells(row_labels.size(),
                                         std::vector<double>(col_labels.size(), 0.0));
  for (std::size_t ti = 0; ti < grid.t_values.size(); ++ti) {
    for (std::size_t vi = 0; vi < grid.variants.size(); ++vi) {
      cells[vi][ti] = grid.accuracy[ti][vi];
    }
  }
  write_heatmap_svg(rd.file("ablation.svg").string(), "Accuracy by step and variant", row_labels,
                    col_labels, cells);

  std::vector<Series> series;
  for (std::size_t vi = 0; vi < grid.variants.size(); ++vi) {
    Series s{variant_to_string(grid.variants[vi]), {}, {}};
    for (std::size_t ti = 0; ti < grid.t_values.size(); ++ti) {
      s.x.push_back(grid.t_values[ti]);
      s.y.push_back(grid.accuracy[ti][vi]);
    }
    series.push_back(std::move(s));
  }
  write_line_svg(rd.file("accuracy_by_t.svg").string(), "Accuracy vs diffusion step", "t",
                 "accuracy", series);

  json meta = base_meta(cfg, "ablate", rd);
  meta["checkpoint"] = ck_path;
  meta["dataset"] = ds_path;
  meta["t_values"] = grid.t_values;
  meta["variants"] = cfg.eval.variants;
  write_meta(rd, meta);

  for (std::size_t ti = 0; ti < grid.t_values.size(); ++ti) {
    for (std::size_t vi = 0; vi < grid.variants.size(); ++vi) {
      std::printf("t=%d %s: %.4f\n", grid.t_values[ti],
                  variant_to_string(grid.variants[vi]).c_str(), grid.accuracy[ti][vi]);
    }
  }
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_eval_shift(const RunConfig& cfg, const std::string& run_name, const std::string& ck_path,
                   const std::string& ds_b_path) {
  const Checkpoint ck = load_heads_checkpoint(ck_path);
  const Dataset ds_b = load(ds_b_path);
  const NoiseSchedule sched = checkpoint_schedule(ck);

  const EvalReport report =
      run_distribution_shift(ck.params, *ck.heads, ck.class_names, ds_b, sched);

  const RunDir rd = make_run_dir(cfg, "eval-shift", run_name);
  write_csv(rd.file("report.csv").string(), report_rows(report, "shift"));
  std::vector<std::vector<double>> conf;
  for (const auto& row : report.confusion) conf.emplace_back(row.begin(), row.end());
  write_heatmap_svg(rd.file("confusion.svg").string(), "Confusion under shift", ds_b.class_names,
                    ds_b.class_names, conf);

  json meta = base_meta(cfg, "eval-shift", rd);
  meta["checkpoint"] = ck_path;
  meta["dataset_b"] = ds_b_path;
  meta["report"] = meta_strings(report.metadata);
  meta["accuracy"] = report.accuracy;
  write_meta(rd, meta);

  print_report(report);
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_eval_channel(const RunConfig& cfg, const std::string& run_name, const std::string& ck_path,
                     const std::string& ds_path) {
  const Checkpoint ck = load_heads_checkpoint(ck_path);
  const Dataset ds = load(ds_path);
  const NoiseSchedule sched = checkpoint_schedule(ck);

  ChannelGrid grid;
  grid.rayleigh_sigma2 = cfg.eval.rayleigh_sigma2;
  grid.rician_k = cfg.eval.rician_k;
  grid.colors.clear();
  for (const auto& name : cfg.eval.colors) grid.colors.push_back(noise_color_from_string(name));
  grid.noise_snr_db = cfg.eval.noise_snr;

  const auto conditions = run_channel_robustness(ck.params, *ck.heads, ds, sched, grid, cfg.seed);

  const RunDir rd = make_run_dir(cfg, "eval-channel", run_name);
  std::vector<MetricRow> rows;
  for (const auto& cond : conditions) {
    const auto r = report_rows(cond.report, cond.name);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_csv(rd.file("report.csv").string(), rows);

  Series rayleigh{"rayleigh", {}, {}}, rician{"rician", {}, {}};
  for (const auto& cond : conditions) {
    const auto& meta = cond.report.metadata;
    if (auto it = meta.find("rayleigh_sigma2"); it != meta.end()) {
      rayleigh.x.push_back(std::stod(it->second));
      rayleigh.y.push_back(cond.report.accuracy);
    }
    if (auto it = meta.find("rician_k"); it != meta.end()) {
      rician.x.push_back(std::stod(it->second));
      rician.y.push_back(cond.report.accuracy);
    }
  }
  if (!rayleigh.x.empty()) {
    write_line_svg(rd.file("rayleigh.svg").string(), "Accuracy vs Rayleigh sigma^2", "sigma^2",
                   "accuracy", {rayleigh});
  }
  if (!rician.x.empty()) {
    write_line_svg(rd.file("rician.svg").string(), "Accuracy vs Rician K", "K", "accuracy",
                   {rician});
  }

  json meta = base_meta(cfg, "eval-channel", rd);
  meta["checkpoint"] = ck_path;
  meta["dataset"] = ds_path;
  json accs = json::object();
  for (const auto& cond : conditions) accs[cond.name] = cond.report.accuracy;
  meta["accuracy"] = accs;
  write_meta(rd, meta);

  for (const auto& cond : conditions) {
    std::printf("%-20s %.4f\n", cond.name.c_str(), cond.report.accuracy);
  }
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_eval_length(const RunConfig& cfg, const std::string& run_name, const std::string& ck_path,
                    const std::string& ds_path) {
  const Checkpoint ck = load_checkpoint(ck_path);
  const Dataset ds = load(ds_path);
  const NoiseSchedule sched = checkpoint_schedule(ck);
  const ProbeSpec spec = probe_spec(cfg);

  const VariableLengthResult result =
      run_variable_length(ck.params, ds, sched, cfg.eval.lengths, cfg.eval.crop_seed, spec);

  const RunDir rd = make_run_dir(cfg, "eval-length", run_name);
  std::vector<MetricRow> rows;
  Series acc_len{"accuracy", {}, {}};
  for (std::size_t li = 0; li < result.lengths.size(); ++li) {
    const std::string cond = "len=" + std::to_string(result.lengths[li]);
    const auto r = report_rows(result.reports[li], cond);
    rows.insert(rows.end(), r.begin(), r.end());
    acc_len.x.push_back(static_cast<double>(result.lengths[li]));
    acc_len.y.push_back(result.reports[li].accuracy);
  }
  write_csv(rd.file("report.csv").string(), rows);
  write_line_svg(rd.file("accuracy_by_length.svg").string(), "Accuracy vs signal length",
                 "length", "accuracy", {acc_len});

  json meta = base_meta(cfg, "eval-length", rd);
  meta["checkpoint"] = ck_path;
  meta["dataset"] = ds_path;
  meta["crop_seed"] = cfg.eval.crop_seed;
  json offsets = json::object();
  for (std::size_t li = 0; li < result.lengths.size(); ++li) {
    offsets[std::to_string(result.lengths[li])] = result.offsets[li];
  }
  meta["crop_offsets"] = offsets;
  write_meta(rd, meta);

  for (std::size_t li = 0; li < result.lengths.size(); ++li) {
    std::printf("len=%zu: %.4f\n", result.lengths[li], result.reports[li].accuracy);
  }
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_generate(const RunConfig& cfg, const std::string& run_name, const std::string& ck_path,
                 std::size_t count, std::size_t length, const std::string& out_file) {
  const Checkpoint ck = load_checkpoint(ck_path);
  const NoiseSchedule sched = checkpoint_schedule(ck);
  if (length % kUNetLengthMultiple != 0) {
    throw std::invalid_argument("length must be a multiple of " +
                                std::to_string(kUNetLengthMultiple));
  }

  const EpsPredictor model = [&](const IQSignal& s_t, int t) {
    return to_signal(unet_forward(ck.params, to_tensor<float>(s_t), t));
  };

  Dataset ds;
  ds.class_names = {"generated"};
  const Rng base(cfg.seed);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = base.derive(0x6e0au, k);
    ds.signals.push_back(generate(model, length, sched, rng));
    ds.labels.push_back(0);
    ds.snrs.push_back(std::numeric_limits<double>::infinity());
  }

  const RunDir rd = make_run_dir(cfg, "generate", run_name);
  const fs::path path = out_file.empty() ? rd.file("generated.mfds") : fs::path(out_file);
  save(ds, path.string());

  double power = 0.0;
  for (const auto& s : ds.signals) power += mean_power(s);
  power /= static_cast<double>(ds.size());

  json meta = base_meta(cfg, "generate", rd);
  meta["checkpoint"] = ck_path;
  meta["dataset"] = path.string();
  meta["count"] = count;
  meta["length"] = length;
  meta["mean_power"] = power;
  write_meta(rd, meta);

  std::printf("generated %zu signals of length %zu, mean power %.4f\n", count, length, power);
  std::printf("dataset: %s\n", path.string().c_str());
  std::printf("run: %s\n", rd.dir.string().c_str());
  return 0;
}

int cmd_inspect(const std::string& ck_path, bool tensors) {
  const Checkpoint ck = load_checkpoint(ck_path);
  std::printf("file: %s\n", ck_path.c_str());
  const auto& c = ck.params.config;
  std::printf("config: down=[%d,%d,%d,%d] up=[%d,%d,%d,%d] kernel=%d time_dim=%d groups=%d\n",
              c.down_channels[0], c.down_channels[1], c.down_channels[2], c.down_channels[3],
              c.up_channels[0], c.up_channels[1], c.up_channels[2], c.up_channels[3],
              c.kernel_size, c.time_dim, c.norm_groups);
  std::printf("schedule: %s T=%d\n", schedule_kind_to_string(ck.schedule_kind).c_str(),
              ck.total_steps);
  std::printf("epoch: %d\n", ck.epoch);
  std::printf("parameters: %zu\n", parameter_count(ck.params));
  if (ck.heads.has_value()) {
    std::printf("heads: %s t=%d d=%d classes=%s\n",
                variant_to_string(ck.heads->variant).c_str(), ck.heads->t, ck.heads->fusion.d_out,
                join(ck.class_names).c_str());
  } else {
    std::printf("heads: none\n");
  }
  if (tensors) {
    for_each_tensor(ck.params, [](const std::string& name, const std::vector<int>& shape,
                                  const std::vector<float>& data) {
      std::string dims;
      for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) dims += "x";
        dims += std::to_string(shape[k]);
      }
      std::printf("  %-24s %-12s %zu\n", name.c_str(), dims.c_str(), data.size());
    });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modfus: diffusion-based RF modulation representation pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file; flags override file values");
  app.allow_config_extras(false);

  RunConfig cfg;
  register_config(app, cfg);
  Overrides ovr;

  std::string run_name, out_file, resume;
  std::string a_dataset, a_checkpoint;
  std::size_t gen_count = 16, gen_length = 128;
  bool show_tensors = false;

  auto add_run_name = [&](CLI::App* sub) {
    sub->add_option("--run-name", run_name, "run directory name (default: <cmd>-<time>-<hash>)");
  };

  CLI::App* synth = app.add_subcommand("synth", "synthesize a modulated dataset");
  add_run_name(synth);
  synth->add_option("--out-file", out_file, "dataset path (default: in the run directory)");
  // Second names mirror the config-file keys: a [synth] section resolves
  // against this subcommand, not the dotted root options.
  ovr.add(synth, "--schemes", cfg.synth.schemes, "modulation schemes")->delimiter(',');
  ovr.add(synth, "--snr,--snrs", cfg.synth.snrs, "SNR grid in dB")->delimiter(',');
  ovr.add(synth, "--count", cfg.synth.count, "signals per scheme per SNR");
  ovr.add(synth, "--len,--length", cfg.synth.length, "samples per signal");
  ovr.add(synth, "--sps", cfg.synth.sps, "samples per symbol");
  ovr.add(synth, "--rolloff", cfg.synth.rolloff, "RRC roll-off");
  ovr.add(synth, "--span", cfg.synth.span, "RRC span in symbols");
  ovr.add(synth, "--cfo-max,--cfo_max", cfg.synth.cfo_max, "max CFO in cycles/sample");
  ovr.add(synth, "--tau-max,--tau_max", cfg.synth.tau_max, "max timing offset in samples");
  ovr.add(synth, "--random-phase,--random_phase", cfg.synth.random_phase,
          "uniform phase rotation on/off");

  CLI::App* train = app.add_subcommand("train-diffusion", "train the noise-prediction backbone");
  train->add_option("dataset", a_dataset, "training dataset (.mfds)")->required();
  add_run_name(train);
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_option("--out-file", out_file, "checkpoint path (default: in the run directory)");
  ovr.add(train, "--epochs", cfg.diffusion.epochs, "total epoch target");
  ovr.add(train, "--batch", cfg.diffusion.batch, "minibatch size");
  ovr.add(train, "--lr", cfg.diffusion.lr, "learning rate");
  ovr.add(train, "--weight-decay", cfg.diffusion.weight_decay, "decoupled weight decay");
  ovr.add(train, "--schedule", cfg.diffusion.schedule, "noise schedule (cosine, linear_beta)");
  ovr.add(train, "--steps", cfg.diffusion.steps, "total diffusion steps");

  CLI::App* probe = app.add_subcommand("probe", "limited-label probe on a frozen backbone");
  probe->add_option("checkpoint", a_checkpoint, "backbone checkpoint (.mfck)")->required();
  probe->add_option("dataset", a_dataset, "labeled dataset (.mfds)")->required();
  add_run_name(probe);
  probe->add_option("--out-file", out_file, "heads checkpoint path");
  ovr.add(probe, "--n", cfg.head.n, "labeled signals per class per SNR");
  ovr.add(probe, "--trials", cfg.head.trials, "Monte Carlo trials");
  ovr.add(probe, "--variant", cfg.head.variant, "feature variant");
  ovr.add(probe, "--t", cfg.head.t, "diffusion step for features");
  ovr.add(probe, "--head-epochs", cfg.head.epochs, "head training epochs");
  ovr.add(probe, "--head-lr", cfg.head.lr, "head learning rate");
  ovr.add(probe, "--head-batch", cfg.head.batch, "head batch size");
  ovr.add_flag(probe, "--stochastic", cfg.head.stochastic, "stochastic feature extraction");

  CLI::App* ablate = app.add_subcommand("ablate", "accuracy over the (t, variant) grid");
  ablate->add_option("checkpoint", a_checkpoint, "backbone checkpoint")->required();
  ablate->add_option("dataset", a_dataset, "labeled dataset")->required();
  add_run_name(ablate);
  ovr.add(ablate, "--t-values", cfg.eval.t_values, "diffusion steps to probe")->delimiter(',');
  ovr.add(ablate, "--variants", cfg.eval.variants, "feature variants")->delimiter(',');
  ovr.add(ablate, "--n", cfg.head.n, "labeled signals per class per SNR");
  ovr.add(ablate, "--trials", cfg.head.trials, "Monte Carlo trials");
  ovr.add(ablate, "--head-epochs", cfg.head.epochs, "head training epochs");

  CLI::App* shift = app.add_subcommand("eval-shift", "evaluate trained heads on a shifted set");
  shift->add_option("checkpoint", a_checkpoint, "checkpoint with heads")->required();
  shift->add_option("dataset", a_dataset, "test dataset from the shifted config")->required();
  add_run_name(shift);

  CLI::App* channel = app.add_subcommand("eval-channel", "fading and colored-noise robustness");
  channel->add_option("checkpoint", a_checkpoint, "checkpoint with heads")->required();
  channel->add_option("dataset", a_dataset, "clean test dataset")->required();
  add_run_name(channel);
  ovr.add(channel, "--rayleigh-sigma2", cfg.eval.rayleigh_sigma2, "Rayleigh variances")
      ->delimiter(',');
  ovr.add(channel, "--rician-k", cfg.eval.rician_k, "Rician K factors")->delimiter(',');
  ovr.add(channel, "--colors", cfg.eval.colors, "noise colors")->delimiter(',');
  ovr.add(channel, "--noise-snr", cfg.eval.noise_snr, "SNR for noise conditions (dB)");

  CLI::App* length = app.add_subcommand("eval-length", "accuracy across cropped lengths");
  length->add_option("checkpoint", a_checkpoint, "backbone checkpoint")->required();
  length->add_option("dataset", a_dataset, "labeled dataset at full length")->required();
  add_run_name(length);
  ovr.add(length, "--lengths", cfg.eval.lengths, "crop lengths")->delimiter(',');
  ovr.add(length, "--crop-seed", cfg.eval.crop_seed, "seed for crop offsets");
  ovr.add(length, "--n", cfg.head.n, "labeled signals per class per SNR");
  ovr.add(length, "--trials", cfg.head.trials, "Monte Carlo trials");
  ovr.add(length, "--t", cfg.head.t, "diffusion step for features");
  ovr.add(length, "--variant", cfg.head.variant, "feature variant");

  CLI::App* gen = app.add_subcommand("generate", "sample signals from the reverse chain");
  gen->add_option("checkpoint", a_checkpoint, "backbone checkpoint")->required();
  add_run_name(gen);
  gen->add_option("--count", gen_count, "signals to draw");
  gen->add_option("--len", gen_length, "samples per signal");
  gen->add_option("--out-file", out_file, "dataset path (default: in the run directory)");

  CLI::App* inspect = app.add_subcommand("inspect-checkpoint", "print checkpoint contents");
  inspect->add_option("checkpoint", a_checkpoint, "checkpoint path")->required();
  inspect->add_flag("--tensors", show_tensors, "list every tensor");

  // Global options (--seed, --config, dotted keys) may follow the subcommand.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;  // usage error
  }

  try {
    ovr.apply();
    if (app.got_subcommand(synth)) return cmd_synth(cfg, run_name, out_file);
    if (app.got_subcommand(train)) {
      return cmd_train_diffusion(cfg, run_name, a_dataset, resume, out_file);
    }
    if (app.got_subcommand(probe)) {
      return cmd_probe(cfg, run_name, a_checkpoint, a_dataset, out_file);
    }
    if (app.got_subcommand(ablate)) return cmd_ablate(cfg, run_name, a_checkpoint, a_dataset);
    if (app.got_subcommand(shift)) return cmd_eval_shift(cfg, run_name, a_checkpoint, a_dataset);
    if (app.got_subcommand(channel)) {
      return cmd_eval_channel(cfg, run_name, a_checkpoint, a_dataset);
    }
    if (app.got_subcommand(length)) {
      return cmd_eval_length(cfg, run_name, a_checkpoint, a_dataset);
    }
    if (app.got_subcommand(gen)) {
      return cmd_generate(cfg, run_name, a_checkpoint, gen_count, gen_length, out_file);
    }
    if (app.got_subcommand(inspect)) return cmd_inspect(a_checkpoint, show_tensors);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  // Only the hidden config-section subcommands reach this point.
  std::fprintf(stderr, "error: nothing to run; see --help for subcommands\n");
  return 1;
}
