#include "camboost/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "camboost/error.hpp"
#include "camboost/explain.hpp"

namespace camboost {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTrainDataStream = 1;
constexpr std::uint64_t kTestDataStream = 2;
constexpr std::uint64_t kLabelStream = 3;
constexpr std::uint64_t kInitStream = 4;
constexpr std::uint64_t kShuffleStream = 5;

fs::path out_dir(const RunConfig& config) {
  fs::path dir = config.get("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

fs::path data_dir(const RunConfig& config) {
  const auto d = config.get("data_dir");
  return d.empty() ? fs::path(config.get("out")) : fs::path(d);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  return out;
}

void write_resolved(const RunConfig& config, const fs::path& dir, const std::string& command) {
  auto out = open_out(dir / ("resolved_config_" + command + ".txt"));
  out << "# command=" << command << "\n# effective_seed=" << effective_seed(config) << '\n';
  out << config.resolved_text();
}

std::size_t post_warmup_sum(const std::vector<EpochRecord>& history, int warmup, std::size_t EpochRecord::*field) {
  std::size_t total = 0;
  for (const auto& r : history) {
    if (r.epoch > warmup) total += r.*field;
  }
  return total;
}

}  // namespace

std::uint64_t effective_seed(const RunConfig& config) {
  if (const char* env = std::getenv("CAMBOOST_SEED"); env && *env) {
    RunConfig probe;
    probe.set("seed", env);
    return probe.get_u64("seed");
  }
  return config.get_u64("seed");
}

SyntheticSpec synthetic_spec_from(const RunConfig& config, bool test_split) {
  SyntheticSpec spec;
  spec.num_classes = config.get_size("classes");
  spec.height = config.get_size("height");
  spec.width = config.get_size("width");
  spec.num_samples = config.get_size(test_split ? "n_test" : "n_train");
  spec.blob_min = config.get_size("blob_min");
  spec.blob_max = config.get_size("blob_max");
  spec.min_positives = config.get_size("min_positives");
  spec.max_positives = config.get_size("max_positives");
  spec.jitter = config.get_size("jitter");
  spec.noise = config.get_double("noise");
  spec.seed = mix_seed(effective_seed(config), test_split ? kTestDataStream : kTrainDataStream);
  spec.validate();
  return spec;
}

NetConfig net_config_from(const RunConfig& config) {
  NetConfig net;
  net.in_channels = 1;
  net.height = config.get_size("height");
  net.width = config.get_size("width");
  net.conv_channels = config.get_sizes("conv_channels");
  net.kernel_size = config.get_size("kernel");
  net.num_classes = config.get_size("classes");
  net.head_bias = config.get_bool("head_bias");
  net.validate();
  return net;
}

std::optional<BoostParams> boost_from(const RunConfig& config) {
  BoostParams p{config.get_double("alpha"), config.get_double("beta")};
  p.validate();
  return p;
}

double default_delta_rel(LLPolicy policy) {
  switch (policy) {
    case LLPolicy::Reject:
      return 2.0;
    case LLPolicy::CorrectTemp:
      return 1.0;
    case LLPolicy::CorrectPerm:
      return 0.5;
  }
  return 0.5;
}

TrainConfig train_config_from(const RunConfig& config) {
  TrainConfig t;
  const auto epochs = config.get_int("epochs");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  t.epochs = static_cast<int>(epochs);
  t.batch_size = config.get_size("batch");
  t.learning_rate = config.get_double("lr");
  t.head_lr_multiplier = config.get_double("head_lr_mult");
  t.full_labels = config.get_bool("full_labels");
  const auto boost = boost_from(config);
  if (config.get_bool("boost_train")) t.boost_in_training = boost;
  if (config.get_bool("boost_infer")) t.boost_in_inference = boost;
  t.skip_boost_for_positiveless_classes = config.get_bool("skip_boost_positiveless");
  t.validation_fraction = config.get_double("val_fraction");
  const auto ll = config.get("ll");
  if (ll != "none" && !ll.empty()) {
    LLConfig c;
    c.policy = parse_policy(ll);
    c.delta_rel = config.get("delta_rel").empty() ? default_delta_rel(c.policy) : config.get_double("delta_rel");
    const auto warmup = config.get_int("warmup");
    if (warmup < 0) throw ConfigError("warmup must be >= 0");
    c.warmup_epochs = static_cast<int>(warmup);
    c.exclude_observed_negatives = config.get_bool("exclude_observed_negatives");
    t.ll = c;
  }
  t.seed = mix_seed(effective_seed(config), kShuffleStream);
  t.validate();
  return t;
}

Benchmark generate_benchmark(const RunConfig& config) {
  Benchmark b{generate_dataset(synthetic_spec_from(config, false)), generate_dataset(synthetic_spec_from(config, true))};
  const auto labels = config.get("labels");
  if (labels == "single") {
    make_single_positive(b.train, mix_seed(effective_seed(config), kLabelStream));
  } else if (labels != "full") {
    throw ConfigError("labels must be 'single' or 'full', got '" + labels + "'");
  }
  return b;
}

RunOutcome train_and_evaluate(const RunConfig& config, const Dataset& train_set, const Dataset& test) {
  const TrainConfig tc = train_config_from(config);
  const CamNet init = init_net(net_config_from(config), mix_seed(effective_seed(config), kInitStream));
  RunOutcome out;
  out.result = train(init, train_set, tc);
  const auto& model = out.result.best;
  out.test_map_unboosted = evaluate(model, test, 0, test.size(), std::nullopt).map;
  if (tc.boost_in_inference) {
    out.test_map_boosted = evaluate(model, test, 0, test.size(), tc.boost_in_inference).map;
    out.test_map = *out.test_map_boosted;
  } else {
    out.test_map = out.test_map_unboosted;
  }
  return out;
}

AblationResult run_ablation(const RunConfig& config, const Dataset& train_set, const Dataset& test) {
  const auto boost = boost_from(config);
  const int warmup = static_cast<int>(config.get_int("warmup"));
  AblationResult result;

  auto run = [&](bool boost_train, bool ll_reject, bool select_with_boost) {
    RunConfig c = config;
    c.set("full_labels", "false");
    c.set("boost_train", boost_train ? "true" : "false");
    c.set("boost_infer", select_with_boost ? "true" : "false");
    c.set("ll", ll_reject ? "r" : "none");
    return train_and_evaluate(c, train_set, test);
  };
  auto row = [&](int index, bool infer, bool train_boost, bool ll, const RunOutcome& o) {
    AblationRow r;
    r.row = index;
    r.boost_infer = infer;
    r.boost_train = train_boost;
    r.ll_reject = ll;
    r.test_map = infer ? evaluate(o.result.best, test, 0, test.size(), boost).map : o.test_map_unboosted;
    r.ll_modified_post_warmup = post_warmup_sum(o.result.history, warmup, &EpochRecord::ll_modified);
    r.ll_fn_hits_post_warmup = post_warmup_sum(o.result.history, warmup, &EpochRecord::ll_fn_hits);
    return r;
  };

  const RunOutcome plain = run(false, false, false);
  const RunOutcome boosted = run(true, false, true);
  const RunOutcome ll = run(false, true, false);
  const RunOutcome ll_boosted = run(true, true, true);

  result.rows = {row(1, false, false, false, plain), row(2, true, false, false, plain),
                 row(3, true, true, false, boosted), row(4, false, false, true, ll),
                 row(5, false, true, true, ll_boosted), row(6, true, false, true, ll),
                 row(7, true, true, true, ll_boosted)};
  result.assume_negative_model = plain.result.best;
  return result;
}

std::vector<SweepRow> run_sweep(const RunConfig& config, const Dataset& train_set, const Dataset& test,
                                const std::vector<double>& alphas, const std::vector<double>& betas) {
  if (alphas.empty() || betas.empty()) throw ConfigError("sweep grids must be non-empty");
  std::vector<SweepRow> rows;
  for (const double a : alphas) {
    for (const double b : betas) {
      RunConfig c = config;
      c.set("alpha", fmt(a));
      c.set("beta", fmt(b));
      c.set("boost_train", "true");
      c.set("boost_infer", "true");
      c.set("ll", config.get("sweep_ll"));
      rows.push_back({a, b, train_and_evaluate(c, train_set, test).test_map});
    }
  }
  return rows;
}

void write_cam_csv(std::span<const double> channel, std::size_t height, std::size_t width, const fs::path& path) {
  if (channel.size() != height * width) throw DimensionError("CAM channel size does not match H x W");
  auto out = open_out(path);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      if (j) out << ',';
      out << channel[i * width + j];
    }
    out << '\n';
  }
}

std::vector<double> read_cam_csv(const fs::path& path, std::size_t& height, std::size_t& width) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  height = 0;
  width = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t count = 0;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      char* end = nullptr;
      values.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw FormatError(path.string() + ": bad number '" + cell + "'");
      ++count;
    }
    if (height == 0) width = count;
    if (count != width) throw FormatError(path.string() + ": ragged CAM rows");
    ++height;
  }
  return values;
}

void write_pgm(std::span<const double> channel, std::size_t height, std::size_t width, const fs::path& path) {
  if (channel.size() != height * width) throw DimensionError("PGM map size does not match H x W");
  const auto [lo, hi] = std::minmax_element(channel.begin(), channel.end());
  const double range = *hi - *lo;
  std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<char> bytes(header.begin(), header.end());
  for (const double v : channel) {
    const double scaled = range > 0.0 ? 255.0 * (v - *lo) / range : 0.0;
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(scaled, 0.0, 255.0)))));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void cmd_gen(const RunConfig& config, std::ostream& log) {
  const auto bench = generate_benchmark(config);
  const auto out = out_dir(config);
  const fs::path dd = data_dir(config);
  std::error_code ec;
  fs::create_directories(dd, ec);
  if (ec) throw IoError("cannot create data directory " + dd.string() + ": " + ec.message());
  save_dataset(bench.train, dd / "train.ds");
  save_dataset(bench.test, dd / "test.ds");

  auto freq = open_out(out / "gen_summary.csv");
  freq << "split,class,positives\n";
  auto sparsity = open_out(out / "gen_sparsity.csv");
  sparsity << "split,samples,mean_observed_positive,mean_observed_negative,mean_unannotated,sparse_samples\n";
  for (const auto& [name, ds] : {std::pair<std::string, const Dataset*>{"train", &bench.train}, {"test", &bench.test}}) {
    const auto s = summarize(*ds);
    for (std::size_t c = 0; c < s.class_positive_counts.size(); ++c) {
      freq << name << ',' << c << ',' << s.class_positive_counts[c] << '\n';
    }
    sparsity << name << ',' << ds->size() << ',' << s.mean_observed_positive << ',' << s.mean_observed_negative << ','
             << s.mean_unannotated << ',' << s.sparse_samples << '\n';
    log << name << ": " << ds->size() << " samples, |I^p|=" << s.mean_observed_positive
        << " |I^n|=" << s.mean_observed_negative << " |I^phi|=" << s.mean_unannotated << " per sample\n";
  }
  write_resolved(config, out, "gen");
}

namespace {

std::string table_row_label(const TrainConfig& tc) {
  const bool bi = tc.boost_in_inference.has_value();
  const bool bt = tc.boost_in_training.has_value();
  const bool llr = tc.ll && tc.ll->policy == LLPolicy::Reject;
  if (tc.full_labels) return "full-labels";
  if (tc.ll && !llr) return "custom";
  const int row = !llr ? (!bi && !bt ? 1 : bi && !bt ? 2 : bi && bt ? 3 : 0)
                       : (!bi && !bt ? 4 : !bi && bt ? 5 : bi && !bt ? 6 : 7);
  return row == 0 ? "custom" : "ablation-row-" + std::to_string(row);
}

}  // namespace

void cmd_train(const RunConfig& config, std::ostream& log) {
  const fs::path dd = data_dir(config);
  const Dataset train_set = load_dataset(dd / "train.ds");
  const Dataset test = load_dataset(dd / "test.ds");
  const auto out = out_dir(config);
  const auto outcome = train_and_evaluate(config, train_set, test);
  const TrainConfig tc = train_config_from(config);

  save_checkpoint(outcome.result.best, out / "checkpoint.bin");
  write_history_csv(outcome.result.history, out / "history.csv");
  if (tc.ll) write_ll_csv(outcome.result.history, tc.ll->policy, out / "ll_log.csv");

  auto meta = open_out(out / "train_meta.txt");
  meta << "configuration=" << table_row_label(tc) << '\n'
       << "boost_train=" << (tc.boost_in_training ? "true" : "false") << '\n'
       << "boost_infer=" << (tc.boost_in_inference ? "true" : "false") << '\n'
       << "train_boost_without_inference_boost="
       << (tc.boost_in_training && !tc.boost_in_inference ? "true" : "false") << '\n'
       << "ll=" << (tc.ll ? to_string(tc.ll->policy) : "none") << '\n'
       << "best_epoch=" << outcome.result.best_epoch << '\n'
       << "best_val_map=" << outcome.result.best_val_map << '\n'
       << "test_map=" << outcome.test_map << '\n'
       << "test_map_unboosted=" << outcome.test_map_unboosted << '\n';
  write_resolved(config, out, "train");
  log << "trained " << table_row_label(tc) << ": best epoch " << outcome.result.best_epoch << ", test mAP "
      << outcome.test_map << '\n';
  if (tc.boost_in_training && !tc.boost_in_inference) {
    log << "note: boost applied in training but not in inference\n";
  }
}

void cmd_eval(const RunConfig& config, std::ostream& log) {
  if (config.get("checkpoint").empty()) throw ConfigError("eval requires checkpoint=<path>");
  const CamNet net = load_checkpoint(config.get("checkpoint"));
  const Dataset test = load_dataset(data_dir(config) / "test.ds");
  if (test.num_classes != net.num_classes() || Shape{1, test.height, test.width} != net.input_shape()) {
    throw DimensionError("checkpoint expects " + std::to_string(net.num_classes()) + " classes on " +
                         shape_string(net.input_shape()) + " inputs; dataset does not match");
  }
  const auto out = out_dir(config);
  const bool boosted = config.get_bool("boost_infer");
  const auto plain = evaluate(net, test, 0, test.size(), std::nullopt);
  auto csv = open_out(out / "eval_metrics.csv");
  csv << "samples,skipped_classes,map_unboosted";
  if (boosted) csv << ",alpha,beta,map_boosted";
  csv << '\n' << test.size() << ',' << plain.skipped_classes << ',' << plain.map;
  log << "mAP (no boost) " << plain.map << '\n';
  if (boosted) {
    const auto b = boost_from(config);
    const auto with = evaluate(net, test, 0, test.size(), b);
    csv << ',' << b->alpha << ',' << b->beta << ',' << with.map;
    log << "mAP (boost alpha=" << b->alpha << ", beta=" << b->beta << ") " << with.map << '\n';
  }
  csv << '\n';
  write_resolved(config, out, "eval");
}

void cmd_explain(const RunConfig& config, std::ostream& log) {
  if (config.get("checkpoint_a").empty() || config.get("checkpoint_b").empty()) {
    throw ConfigError("explain requires checkpoint_a=<path> and checkpoint_b=<path>");
  }
  const CamNet a = load_checkpoint(config.get("checkpoint_a"));
  const CamNet b = load_checkpoint(config.get("checkpoint_b"));
  const auto& ca = a.config();
  const auto& cb = b.config();
  if (ca.in_channels != cb.in_channels || ca.height != cb.height || ca.width != cb.width ||
      ca.conv_channels != cb.conv_channels || ca.kernel_size != cb.kernel_size || ca.num_classes != cb.num_classes ||
      ca.head_bias != cb.head_bias) {
    throw DimensionError("explain: the two checkpoints have different architectures");
  }
  const Dataset test = load_dataset(data_dir(config) / "test.ds");
  if (test.num_classes != a.num_classes() || Shape{1, test.height, test.width} != a.input_shape()) {
    throw DimensionError("explain: dataset does not match the checkpoint architecture");
  }
  const double fraction = config.get_double("fraction");
  const auto exports = config.get_size("cam_exports");
  const bool boosted = config.get_bool("boost_infer");
  const auto boost = boost_from(config);
  const auto out = out_dir(config);
  const auto cam_dir = out / "cams";
  fs::create_directories(cam_dir);

  auto csv = open_out(out / "explain.csv");
  csv << "sample_id,class_index,label_state,spearman,spearman_gaussian,top_mean_a,top_mean_b,bottom_mean_a,"
         "bottom_mean_b\n";
  std::size_t undefined = 0;
  std::vector<std::size_t> all_classes(a.num_classes());
  for (std::size_t c = 0; c < all_classes.size(); ++c) all_classes[c] = c;

  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& sample = test.samples[i];
    const Cam cam_a = forward_cam(a, sample.image);
    const Cam cam_b = forward_cam(b, sample.image);
    const auto gauss = gaussian_control_map(cam_a.height(), cam_a.width());
    const auto stats = compare_explanations(cam_a, cam_b, all_classes, fraction);
    for (const auto& s : stats) {
      std::string g = "nan";
      try {
        g = fmt(spearman(cam_a.channel(s.class_index), gauss));
      } catch (const UndefinedError&) {
        ++undefined;
      }
      if (!s.spearman) ++undefined;
      csv << i << ',' << s.class_index << ',' << (sample.full_labels[s.class_index] ? "positive" : "negative") << ','
          << (s.spearman ? fmt(*s.spearman) : std::string("nan")) << ',' << g << ',' << s.a.top << ',' << s.b.top
          << ',' << s.a.bottom << ',' << s.b.bottom << '\n';
    }
    if (i < exports) {
      for (std::size_t c = 0; c < a.num_classes(); ++c) {
        if (!sample.full_labels[c]) continue;
        for (const auto& [tag, cam] : {std::pair<std::string, const Cam*>{"a", &cam_a}, {"b", &cam_b}}) {
          const auto stem = "cam_" + tag + "_s" + std::to_string(i) + "_c" + std::to_string(c);
          write_cam_csv(cam->channel(c), cam->height(), cam->width(), cam_dir / (stem + "_raw.csv"));
          write_pgm(cam->channel(c), cam->height(), cam->width(), cam_dir / (stem + "_raw.pgm"));
          if (boosted) {
            const Tensor up = boostlu_map(cam->scores, *boost);
            const Cam bc{up, {}};
            write_cam_csv(bc.channel(c), bc.height(), bc.width(), cam_dir / (stem + "_boosted.csv"));
            write_pgm(bc.channel(c), bc.height(), bc.width(), cam_dir / (stem + "_boosted.pgm"));
          }
        }
      }
    }
  }
  write_resolved(config, out, "explain");
  log << "explained " << test.size() << " samples; " << undefined << " undefined correlations excluded\n";
}

void cmd_sweep(const RunConfig& config, std::ostream& log) {
  const fs::path dd = data_dir(config);
  const Dataset train_set = load_dataset(dd / "train.ds");
  const Dataset test = load_dataset(dd / "test.ds");
  const auto out = out_dir(config);
  const auto rows = run_sweep(config, train_set, test, config.get_doubles("alphas"), config.get_doubles("betas"));
  auto csv = open_out(out / "sweep.csv");
  csv << "alpha,beta,mAP\n";
  for (const auto& r : rows) {
    csv << r.alpha << ',' << r.beta << ',' << r.test_map << '\n';
    log << "alpha=" << r.alpha << " beta=" << r.beta << " mAP=" << r.test_map << '\n';
  }
  write_resolved(config, out, "sweep");
}

void cmd_ablate(const RunConfig& config, std::ostream& log) {
  const fs::path dd = data_dir(config);
  const Dataset train_set = load_dataset(dd / "train.ds");
  const Dataset test = load_dataset(dd / "test.ds");
  const auto out = out_dir(config);
  const auto result = run_ablation(config, train_set, test);
  auto csv = open_out(out / "ablation.csv");
  csv << "row,boost_infer,boost_train,ll_r,mAP,ll_modified_post_warmup,ll_fn_hits_post_warmup\n";
  for (const auto& r : result.rows) {
    csv << r.row << ',' << r.boost_infer << ',' << r.boost_train << ',' << r.ll_reject << ',' << r.test_map << ','
        << r.ll_modified_post_warmup << ',' << r.ll_fn_hits_post_warmup << '\n';
    log << "row " << r.row << ": mAP " << r.test_map << '\n';
  }
  write_resolved(config, out, "ablate");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  static const char* kUsage =
      "usage: camboost <gen|train|eval|explain|sweep|ablate> [--config FILE] [--boost-train] [--boost-infer]\n"
      "                [--ll r|ct|cp] [--full-labels] [key=value ...]\n";
  try {
    if (args.empty() || args[0] == "--help" || args[0] == "-h") {
      out << kUsage;
      if (args.empty()) throw UsageError("missing command");
      return 0;
    }
    const std::string command = args[0];
    RunConfig config;
    std::vector<std::string> rest(args.begin() + 1, args.end());
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest[i] == "--config") {
        if (i + 1 >= rest.size()) throw UsageError("--config needs a file");
        config.merge_file(rest[i + 1]);
      }
    }
    for (std::size_t i = 0; i < rest.size(); ++i) {
      const auto& a = rest[i];
      if (a == "--config") {
        ++i;
      } else if (a == "--boost-train") {
        config.set("boost_train", "true");
      } else if (a == "--boost-infer") {
        config.set("boost_infer", "true");
      } else if (a == "--full-labels") {
        config.set("full_labels", "true");
      } else if (a == "--ll") {
        if (i + 1 >= rest.size()) throw UsageError("--ll needs r, ct or cp");
        config.set("ll", to_string(parse_policy(rest[++i])));
      } else if (const auto eq = a.find('='); eq != std::string::npos && a.rfind("--", 0) != 0) {
        config.set(a.substr(0, eq), a.substr(eq + 1));
      } else {
        throw UsageError("unrecognized argument '" + a + "'");
      }
    }
    if (command == "gen") {
      cmd_gen(config, out);
    } else if (command == "train") {
      cmd_train(config, out);
    } else if (command == "eval") {
      cmd_eval(config, out);
    } else if (command == "explain") {
      cmd_explain(config, out);
    } else if (command == "sweep") {
      cmd_sweep(config, out);
    } else if (command == "ablate") {
      cmd_ablate(config, out);
    } else {
      throw UsageError("unknown command '" + command + "'");
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.category() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace camboost
