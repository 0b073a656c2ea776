#include "mpmab/exploration.hpp"

#include <cmath>

#include "mpmab/errors.hpp"

namespace mpmab {

void ExplorationState::reset_epoch() {
  slot = 1;
  done_sent = false;
  epoch_counts.setZero();
}

std::vector<ExplorationState> make_exploration_states(int K, int M) {
  std::vector<ExplorationState> states(K);
  for (auto& s : states) {
    s.epoch_counts = Eigen::VectorXi::Zero(M);
    s.total_counts = Eigen::VectorXi::Zero(M);
    s.total_sums = Vector::Zero(M);
  }
  return states;
}

int exploration_arm(int k, int slot, int M) {
  return ((k + slot - 2) % M) + 1;
}

std::int64_t required_samples(std::int64_t T0, int epoch, double delta_exp) {
  const double raw = static_cast<double>(T0) * std::pow(static_cast<double>(epoch), delta_exp);
  const auto required = static_cast<std::int64_t>(std::ceil(raw - 1e-9 * raw));
  return std::max<std::int64_t>(required, 1);
}

bool exploration_step(ExplorationState& state, int arm, double reward,
                      std::int64_t required, const ExplorationOptions& opts) {
  if (reward <= 0.0) return false;
  if (state.done_sent && !opts.count_while_waiting) return false;
  const int idx = arm - 1;
  state.epoch_counts(idx) += 1;
  state.total_counts(idx) += 1;
  state.total_sums(idx) += reward;
  if (!state.done_sent && state.epoch_counts(idx) >= required) {
    state.done_sent = true;
    return true;
  }
  return false;
}

void advance_slot(std::span<ExplorationState> states) {
  for (auto& s : states) {
    s.slot += 1;
    s.done_sent = false;
  }
}

Matrix finalize_estimates(std::span<const ExplorationState> states) {
  const int K = static_cast<int>(states.size());
  const int M = static_cast<int>(states[0].total_counts.size());
  Matrix estimates = Matrix::Zero(K, M);
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      if (states[k].total_counts(m) > 0)
        estimates(k, m) = states[k].total_sums(m) / states[k].total_counts(m);
    }
  }
  return estimates;
}

std::int64_t run_exploration_phase(const SystemConfig& config, int epoch,
                                   std::vector<ExplorationState>& states,
                                   const AttackSource& attacks, BitBus& bus,
                                   const OptimalMatching& matching_ref,
                                   RegretLedger* ledger, std::int64_t& t_global,
                                   Rng& rng, std::optional<std::int64_t> horizon) {
  const int K = config.K;
  const int M = config.M;
  const std::int64_t required = required_samples(config.T0, epoch, config.delta_exp);
  for (auto& s : states) s.reset_epoch();

  std::int64_t steps = 0;
  ActionProfile profile(K);
  const PhaseTag tag{Phase::Exploration, epoch};

  for (int slot = 1; slot <= M; ++slot) {
    for (int k = 1; k <= K; ++k) profile(k - 1) = exploration_arm(k, slot, M);
    std::int64_t slot_steps = 0;
    for (;;) {
      if (horizon && t_global >= *horizon) return steps;
      ++t_global;
      ++steps;
      const AttackVector attack = attacks.at(t_global, tag);
      const StepOutcome out = sample_step(config, profile, attack, rng);
      for (int k = 1; k <= K; ++k) {
        if (exploration_step(states[k - 1], profile(k - 1), out.rewards(k - 1), required,
                             config.exploration)) {
          bus.broadcast_bit(k, 1);
        }
      }
      if (ledger) {
        ledger->record_step(Phase::Exploration,
                            step_regret(config, matching_ref, profile, attack),
                            out.attacked_any);
      }
      if (bus.round_full()) {
        bus.collect_round();
        advance_slot(states);
        break;
      }
      if (++slot_steps >= kSlotStepLimit)
        throw SimulationStalled("exploration slot exceeded the step limit");
    }
  }
  return steps;
}

}  // namespace mpmab
