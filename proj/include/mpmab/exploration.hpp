#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mpmab/adversary.hpp"
#include "mpmab/comms.hpp"
#include "mpmab/metrics.hpp"
#include "mpmab/model.hpp"

namespace mpmab {

// A stalled exploration slot aborts after this many steps; unreachable under
// a validated adversary.
inline constexpr std::int64_t kSlotStepLimit = 1'000'000'000;

struct ExplorationState {
  int slot = 1;  // current round within the phase, 1..M
  bool done_sent = false;
  Eigen::VectorXi epoch_counts;  // nonzero observations this epoch, per arm
  Eigen::VectorXi total_counts;  // persist across epochs
  Vector total_sums;

  void reset_epoch();
};

std::vector<ExplorationState> make_exploration_states(int K, int M);

// Arm pulled by player k in round `slot`: ((k + slot - 2) mod M) + 1. For a
// fixed slot the K players occupy K distinct arms.
int exploration_arm(int k, int slot, int M);

// ceil(T0 * epoch^delta)
std::int64_t required_samples(std::int64_t T0, int epoch, double delta_exp);

// Accumulates one observation. Zero rewards are discarded (they signal an
// attack). Returns true exactly once per slot, when the epoch count on the
// current arm first reaches `required`.
bool exploration_step(ExplorationState& state, int arm, double reward,
                      std::int64_t required, const ExplorationOptions& opts);

void advance_slot(std::span<ExplorationState> states);

// Per-arm averages of all nonzero observations collected so far. Counts and
// sums persist across epochs, so estimates sharpen every epoch.
Matrix finalize_estimates(std::span<const ExplorationState> states);

// Lockstep round-robin exploration for one epoch. Returns steps taken.
std::int64_t run_exploration_phase(const SystemConfig& config, int epoch,
                                   std::vector<ExplorationState>& states,
                                   const AttackSource& attacks, BitBus& bus,
                                   const OptimalMatching& matching_ref,
                                   RegretLedger* ledger, std::int64_t& t_global,
                                   Rng& rng,
                                   std::optional<std::int64_t> horizon = std::nullopt);

}  // namespace mpmab
