#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mpmab/adversary.hpp"
#include "mpmab/comms.hpp"
#include "mpmab/metrics.hpp"
#include "mpmab/model.hpp"

namespace mpmab {

enum class Mood { Discontent = 0, Content = 1 };

// Baseline utilities are clamped below 1 so the exponent in the content
// transition stays strictly positive.
inline constexpr double kMaxUtility = 1.0 - 1e-6;

struct PlayerMatchState {
  int baseline_action = 1;
  double baseline_utility = 0.0;
  Mood mood = Mood::Discontent;

  bool operator==(const PlayerMatchState&) const = default;
};

struct MatchParams {
  double epsilon = 0.0;
  double kappa = 0.0;
  double beta = 0.0;
  std::int64_t tau = 0;
};

// tau = ceil(c2 * epoch^delta)
MatchParams match_params(const SystemConfig& config, int epoch);

// Content: baseline with probability 1 - eps^kappa, every other arm with
// probability eps^kappa/(M-1). Discontent: uniform over all arms.
int choose_action(const PlayerMatchState& state, int M, const MatchParams& params,
                  Rng& rng);

// The estimate for the played arm if the realized reward is positive, else 0.
double utility(double reward, const Matrix& estimates, int k, int arm);

// A content player repeating its baseline keeps its state regardless of the
// utility received; anyone else re-anchors to (action, u) and turns content
// with probability eps^(1-u).
PlayerMatchState update_state(const PlayerMatchState& state, int action, double u,
                              const MatchParams& params, Rng& rng);

// One-bit mood synchronization. A discontent player stays discontent; a
// content player stays content only if every broadcast bit was content,
// otherwise it survives with probability eps^beta.
PlayerMatchState synchronize_mood(const PlayerMatchState& updated,
                                  std::span<const std::uint8_t> observed_moods,
                                  const MatchParams& params, Rng& rng);

struct MatchTraceRow {
  int epoch;
  std::int64_t t;
  int player;
  int action;
  double utility;
  Mood mood;
  int baseline_action;
};

struct MatchingResult {
  Eigen::MatrixXi counters;  // W(k-1, m-1): content plays of arm m by player k
  std::vector<PlayerMatchState> final_states;
};

using RoundObserver =
    std::function<void(std::int64_t round, std::span<const PlayerMatchState>)>;

MatchingResult run_matching_phase(
    const SystemConfig& config, const Matrix& estimates, const MatchParams& params,
    int epoch, const AttackSource& attacks, BitBus& bus, Rng& rng,
    const OptimalMatching* matching_ref = nullptr, RegretLedger* ledger = nullptr,
    std::int64_t* t_global = nullptr, std::vector<MatchTraceRow>* trace = nullptr,
    const RoundObserver& on_round_start = {},
    const std::vector<PlayerMatchState>* initial_states = nullptr,
    std::optional<std::int64_t> horizon = std::nullopt);

// Arm played most frequently while content over epochs ceil(epoch/2)..epoch;
// ties break to the smallest arm id, and all-zero counters fall back to the
// arm with the best estimate.
int exploit_action(const std::vector<Eigen::MatrixXi>& counters_by_epoch, int k,
                   int epoch, const Matrix& estimates);

}  // namespace mpmab
