#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpmab/adversary.hpp"
#include "mpmab/matching.hpp"
#include "mpmab/metrics.hpp"

namespace mpmab::oracle {

using JointState = std::vector<PlayerMatchState>;

// Exact one-round transition matrix of the matching dynamics on a tiny
// instance, marginalized over actions, attacks, state updates and mood
// synchronization. Per-player utilities live on the finite alphabet
// {0} u {clamped estimates}, which keeps the chain finite and exact.
struct ChainModel {
  int K = 0;
  int M = 0;
  double epsilon = 0.0;
  SyncSnapshot snapshot = SyncSnapshot::PostUpdate;
  std::vector<std::vector<double>> utility_alphabet;  // per player, sorted
  std::vector<JointState> state_list;
  Matrix P;

  int index_of(const JointState& z) const;  // -1 if absent
};

struct AttackMarginal {
  std::vector<std::pair<AttackVector, double>> support;
};

// Per-step attack distribution; only i.i.d. models admit exact analysis.
AttackMarginal attack_marginal(const AdversarySpec& spec, int M);

ChainModel build_chain(const Matrix& estimates, int M, double epsilon, double kappa,
                       double beta, const AdversarySpec& adversary,
                       SyncSnapshot snapshot = SyncSnapshot::PostUpdate);

// Power iteration from the uniform distribution until ||pi P - pi||_1 <= tol.
Vector stationary_distribution(const Matrix& P, double tol = 1e-10,
                               std::int64_t max_iters = 10'000'000);

struct ClassificationReport {
  std::vector<int> absorbing_states;
  std::vector<std::vector<int>> closed_classes;  // non-singleton closed classes
  std::vector<int> transient_states;
  bool all_content_absorbing = false;
  bool all_discontent_closed = false;
  bool mixed_transient = false;
};

// Reachability analysis of the unperturbed (epsilon = 0) chain.
ClassificationReport classify_p0(const ChainModel& chain);

// Independent re-implementation of the optimal-matching search, enumerating
// arm subsets and their permutations rather than assigning player by player.
OptimalMatching brute_force_matching(const Matrix& means);

// Least-squares slope of log P^eps(source, target) against log eps. The
// one-step transition must be possible at every grid point.
double resistance_probe(const Matrix& estimates, int M, double kappa, double beta,
                        const AdversarySpec& adversary, SyncSnapshot snapshot,
                        std::span<const double> epsilon_grid, const JointState& source,
                        const JointState& target);

// Canonical two-player, two-arm instance used by the verification suite.
struct Fixture {
  Matrix means;  // also used as the exact estimates
  double kappa = 3.0;
  double beta = 2.0;

  // All content at the optimal assignment with aligned utilities.
  JointState optimal_state() const;
  // Everyone discontent with zeroed baselines.
  JointState discontent_state() const;
  // Player 1 just explored onto player 2's arm and both collapsed.
  JointState collapse_state() const;
};

Fixture two_player_two_arm_fixture();

}  // namespace mpmab::oracle
