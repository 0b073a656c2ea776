#pragma once

#include <cstdint>

#include "mpmab/rng.hpp"
#include "mpmab/types.hpp"

namespace mpmab {

// Reward distribution for a single (player, arm) pair with mean mu. The beta
// model draws Beta(nu*mu, nu*(1-mu)), which has continuous support on (0,1),
// so a reward of exactly zero identifies a collision or an attack.
struct RewardModel {
  enum class Kind { BetaWithMean, Deterministic };
  Kind kind = Kind::BetaWithMean;
  double nu = 2.0;
};

enum class SyncSnapshot { PreUpdate, PostUpdate };

struct ExplorationOptions {
  bool count_while_waiting = true;
};

struct MatchingOptions {
  SyncSnapshot sync_snapshot = SyncSnapshot::PostUpdate;
};

struct SystemConfig {
  int K = 0;  // players
  int M = 0;  // arms, K <= M
  Matrix means;  // K x M, means(k-1, m-1) = mean reward of arm m for player k, alone
  RewardModel reward_model;
  double delta_exp = 0.0;  // phase-length growth exponent
  double epsilon = 0.0;    // in (0,1)
  double kappa = 0.0;      // > M
  double beta = 0.0;       // in (0, kappa)
  std::int64_t T0 = 0;
  std::int64_t c2 = 0;
  std::int64_t c3 = 0;
  int epochs = 0;
  std::uint64_t base_seed = 0;
  ExplorationOptions exploration;
  MatchingOptions matching;

  double mean(int k, int m) const { return means(k - 1, m - 1); }
};

struct StepOutcome {
  Vector rewards;              // per player; 0 on collision or attack
  Eigen::VectorXi collisions;  // occupancy n(m) per arm
  bool attacked_any = false;
};

// Checks every invariant, including uniqueness of the optimal matching.
// Returns the config unchanged on success.
SystemConfig validate_config(SystemConfig config);

Eigen::VectorXi collision_counts(const ActionProfile& profile, int M);

// mu_k(m, n, w): the mean reward seen by player k on arm m given occupancy n
// and attack bit w_m. Zero whenever n >= 2 or w_m = 1.
double mean_reward(const SystemConfig& config, int k, int m, int n, int w_m);

double sample_reward(const RewardModel& model, double mu, Rng& rng);

StepOutcome sample_step(const SystemConfig& config, const ActionProfile& profile,
                        const AttackVector& attack, Rng& rng);

}  // namespace mpmab
