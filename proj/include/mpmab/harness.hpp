#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpmab/adversary.hpp"
#include "mpmab/matching.hpp"
#include "mpmab/metrics.hpp"

namespace mpmab {

struct ExperimentSpec {
  SystemConfig system;
  AdversarySpec adversary;
  int replications = 1;
  std::int64_t stride = 100;
  bool trace = false;
};

struct RunResult {
  std::vector<double> series;  // cumulative regret at t = stride, 2*stride, ...
  std::int64_t stride = 100;
  std::int64_t total_steps = 0;
  double cumulative_regret = 0.0;
  std::array<std::int64_t, 3> W{};      // attacked time units per phase
  std::array<std::int64_t, 3> steps{};  // steps per phase
  std::array<double, 3> regret_by_phase{};
  std::vector<std::array<PhaseStats, 3>> epoch_stats;
  std::vector<char> exploration_success;  // per epoch
  std::vector<char> matching_success;
  std::vector<Matrix> estimates_by_epoch;
  std::vector<ActionProfile> exploit_profiles;
  std::vector<std::int64_t> comm_bits_exploration;  // per player
  std::vector<std::int64_t> comm_bits_matching;
  std::vector<MatchTraceRow> trace;
  double wall_seconds = 0.0;
};

// One full epoch loop: exploration, matching, exploitation per epoch, with
// the adversary and regret accounted at every step. Deterministic in
// (spec, seed). An optional horizon stops the run mid-phase.
RunResult run_single(const ExperimentSpec& spec, std::uint64_t seed,
                     std::optional<std::int64_t> horizon = std::nullopt);

struct Aggregate {
  OptimalMatching matching;
  std::int64_t stride = 100;
  std::vector<double> mean_series;  // truncated at the shortest replication
  std::vector<double> std_series;
  std::vector<double> exploration_success_rate;  // per epoch
  std::vector<double> matching_success_rate;
  std::array<double, 3> mean_W{};
  double final_cum_regret_mean = 0.0;
  double final_cum_regret_std = 0.0;
  std::int64_t min_steps = 0;
  std::int64_t max_steps = 0;
  std::int64_t comm_bits_exploration = 0;  // per player, identical across players
  std::int64_t comm_bits_matching = 0;
  std::int64_t comm_budget_expected = 0;  // sum over epochs of (M + tau)
  bool comm_budget_law_holds = false;
  int replications = 0;
  double wall_seconds = 0.0;
  std::vector<RunResult> runs;
};

// Runs replications with seeds base_seed+1 .. base_seed+R on a worker pool.
// workers <= 0 reads MPMAB_WORKERS, then falls back to the hardware count.
Aggregate run_replications(const ExperimentSpec& spec, int workers = 0);

enum class Figure1Scale { Paper, Reduced };

ExperimentSpec figure1_spec(Figure1Scale scale);

Aggregate reproduce_figure1(Figure1Scale scale, const std::filesystem::path& out_dir,
                            int workers = 0);

// Strict JSON parsing: unknown keys rejected, all model and adversary
// validations applied.
ExperimentSpec parse_spec(const std::filesystem::path& path);
ExperimentSpec parse_spec_json(const std::string& text, const std::string& origin = "$");

// Writes <out>/regret.csv and <out>/summary.json (and trace.csv when traced).
void write_outputs(const std::filesystem::path& out_dir, const ExperimentSpec& spec,
                   const Aggregate& agg);

}  // namespace mpmab
