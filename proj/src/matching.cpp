#include "mpmab/matching.hpp"

#include <algorithm>
#include <cmath>

#include "mpmab/errors.hpp"

namespace mpmab {

MatchParams match_params(const SystemConfig& config, int epoch) {
  MatchParams params;
  params.epsilon = config.epsilon;
  params.kappa = config.kappa;
  params.beta = config.beta;
  const double raw =
      static_cast<double>(config.c2) * std::pow(static_cast<double>(epoch), config.delta_exp);
  params.tau = std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(raw - 1e-9 * raw)), 1);
  return params;
}

int choose_action(const PlayerMatchState& state, int M, const MatchParams& params,
                  Rng& rng) {
  if (state.mood == Mood::Content) {
    if (M == 1) return state.baseline_action;
    const double explore = std::pow(params.epsilon, params.kappa);
    if (uniform01(rng) >= explore) return state.baseline_action;
    const int j = std::uniform_int_distribution<int>(1, M - 1)(rng);
    return j < state.baseline_action ? j : j + 1;
  }
  return std::uniform_int_distribution<int>(1, M)(rng);
}

double utility(double reward, const Matrix& estimates, int k, int arm) {
  if (reward <= 0.0) return 0.0;
  return std::clamp(estimates(k - 1, arm - 1), 0.0, kMaxUtility);
}

PlayerMatchState update_state(const PlayerMatchState& state, int action, double u,
                              const MatchParams& params, Rng& rng) {
  if (state.mood == Mood::Content && action == state.baseline_action) return state;
  const bool content = uniform01(rng) < std::pow(params.epsilon, 1.0 - u);
  return {action, u, content ? Mood::Content : Mood::Discontent};
}

PlayerMatchState synchronize_mood(const PlayerMatchState& updated,
                                  std::span<const std::uint8_t> observed_moods,
                                  const MatchParams& params, Rng& rng) {
  if (updated.mood == Mood::Discontent) return updated;
  bool all_content = true;
  for (const auto bit : observed_moods) all_content = all_content && bit != 0;
  if (all_content) return updated;
  PlayerMatchState out = updated;
  out.mood = uniform01(rng) < std::pow(params.epsilon, params.beta) ? Mood::Content
                                                                    : Mood::Discontent;
  return out;
}

MatchingResult run_matching_phase(const SystemConfig& config, const Matrix& estimates,
                                  const MatchParams& params, int epoch,
                                  const AttackSource& attacks, BitBus& bus, Rng& rng,
                                  const OptimalMatching* matching_ref,
                                  RegretLedger* ledger, std::int64_t* t_global,
                                  std::vector<MatchTraceRow>* trace,
                                  const RoundObserver& on_round_start,
                                  const std::vector<PlayerMatchState>* initial_states,
                                  std::optional<std::int64_t> horizon) {
  const int K = config.K;
  const int M = config.M;

  std::vector<PlayerMatchState> states(K);
  if (initial_states) {
    states = *initial_states;
  } else {
    for (auto& s : states) {
      s.baseline_action = std::uniform_int_distribution<int>(1, M)(rng);
      s.baseline_utility = 0.0;
      s.mood = Mood::Discontent;
    }
  }

  MatchingResult result;
  result.counters = Eigen::MatrixXi::Zero(K, M);

  ActionProfile profile(K);
  Vector utilities(K);
  std::vector<PlayerMatchState> updated(K);
  std::int64_t local_t = 0;
  std::int64_t& t = t_global ? *t_global : local_t;
  const PhaseTag tag{Phase::Matching, epoch};

  for (std::int64_t round = 1; round <= params.tau; ++round) {
    if (horizon && t >= *horizon) break;
    if (on_round_start) on_round_start(round, states);
    ++t;

    for (int k = 1; k <= K; ++k) {
      profile(k - 1) = choose_action(states[k - 1], M, params, rng);
      if (states[k - 1].mood == Mood::Content)
        result.counters(k - 1, profile(k - 1) - 1) += 1;
    }

    const AttackVector attack = attacks.at(t, tag);
    const StepOutcome out = sample_step(config, profile, attack, rng);
    for (int k = 1; k <= K; ++k)
      utilities(k - 1) = utility(out.rewards(k - 1), estimates, k, profile(k - 1));

    for (int k = 1; k <= K; ++k)
      updated[k - 1] = update_state(states[k - 1], profile(k - 1), utilities(k - 1),
                                    params, rng);

    const bool pre_snapshot =
        config.matching.sync_snapshot == SyncSnapshot::PreUpdate;
    for (int k = 1; k <= K; ++k) {
      const Mood snap = pre_snapshot ? states[k - 1].mood : updated[k - 1].mood;
      bus.broadcast_bit(k, snap == Mood::Content ? 1 : 0);
    }
    const std::vector<std::uint8_t> bits = bus.collect_round();

    for (int k = 1; k <= K; ++k)
      states[k - 1] = synchronize_mood(updated[k - 1], bits, params, rng);

    if (ledger && matching_ref) {
      ledger->record_step(Phase::Matching,
                          step_regret(config, *matching_ref, profile, attack),
                          out.attacked_any);
    }
    if (trace) {
      for (int k = 1; k <= K; ++k) {
        trace->push_back({epoch, t, k, profile(k - 1), utilities(k - 1),
                          states[k - 1].mood, states[k - 1].baseline_action});
      }
    }
  }

  result.final_states = std::move(states);
  return result;
}

int exploit_action(const std::vector<Eigen::MatrixXi>& counters_by_epoch, int k,
                   int epoch, const Matrix& estimates) {
  const int M = static_cast<int>(estimates.cols());
  const int first = (epoch + 1) / 2;
  Eigen::VectorXi sums = Eigen::VectorXi::Zero(M);
  for (int i = first; i <= epoch; ++i) sums += counters_by_epoch[i - 1].row(k - 1).transpose();

  int best = 0;
  if (sums.maxCoeff() > 0) {
    for (int m = 1; m < M; ++m) {
      if (sums(m) > sums(best)) best = m;
    }
  } else {
    for (int m = 1; m < M; ++m) {
      if (estimates(k - 1, m) > estimates(k - 1, best)) best = m;
    }
  }
  return best + 1;
}

}  // namespace mpmab
