#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "camboost/config.hpp"
#include "camboost/data.hpp"
#include "camboost/network.hpp"
#include "camboost/train.hpp"

namespace camboost {

// Builders from a resolved RunConfig.
SyntheticSpec synthetic_spec_from(const RunConfig& config, bool test_split);
NetConfig net_config_from(const RunConfig& config);
TrainConfig train_config_from(const RunConfig& config);
std::uint64_t effective_seed(const RunConfig& config);
std::optional<BoostParams> boost_from(const RunConfig& config);
/// Large-loss defaults for delta_rel per policy: r 2, ct 1, cp 0.5.
double default_delta_rel(LLPolicy policy);

struct Benchmark {
  Dataset train;
  Dataset test;
};
/// Train split (labels per `labels=`) and a fully labelled test split.
Benchmark generate_benchmark(const RunConfig& config);

struct RunOutcome {
  TrainResult result;
  double test_map = 0.0;             // with the configured inference boost
  double test_map_unboosted = 0.0;
  std::optional<double> test_map_boosted;
};
RunOutcome train_and_evaluate(const RunConfig& config, const Dataset& train, const Dataset& test);

/// One row of the seven-configuration boost / large-loss ablation.
struct AblationRow {
  int row = 0;
  bool boost_infer = false;
  bool boost_train = false;
  bool ll_reject = false;
  double test_map = 0.0;
  std::size_t ll_modified_post_warmup = 0;
  std::size_t ll_fn_hits_post_warmup = 0;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // rows 1..7
  /// Model of row 1 (plain assume-negative training).
  CamNet assume_negative_model;
};

/// Trains the four distinct training configurations and evaluates each
/// with and without inference-time boost.
AblationResult run_ablation(const RunConfig& config, const Dataset& train, const Dataset& test);

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double test_map = 0.0;
};
/// One train + eval per (alpha, beta) grid point, alpha-major.
std::vector<SweepRow> run_sweep(const RunConfig& config, const Dataset& train, const Dataset& test,
                                const std::vector<double>& alphas, const std::vector<double>& betas);

// Command entry points. Each writes its resolved config into `out`.
void cmd_gen(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& log);
void cmd_explain(const RunConfig& config, std::ostream& log);
void cmd_sweep(const RunConfig& config, std::ostream& log);
void cmd_ablate(const RunConfig& config, std::ostream& log);

/// Writes a CAM channel as H rows of W comma-separated values.
void write_cam_csv(std::span<const double> channel, std::size_t height, std::size_t width,
                   const std::filesystem::path& path);
std::vector<double> read_cam_csv(const std::filesystem::path& path, std::size_t& height, std::size_t& width);
/// 8-bit binary PGM, min-max normalized per map (constant maps become 0).
void write_pgm(std::span<const double> channel, std::size_t height, std::size_t width,
               const std::filesystem::path& path);

/// Parses `<command> [--config FILE] [--boost-train] [--boost-infer] [--ll r|ct|cp]
/// [--full-labels] [key=value ...]` and dispatches. Returns the exit status;
/// failures print one "error: <category>: <message>" line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace camboost
