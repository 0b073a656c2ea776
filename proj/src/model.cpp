#include "mpmab/model.hpp"

#include <cmath>
#include <sstream>

#include "mpmab/errors.hpp"
#include "mpmab/metrics.hpp"

namespace mpmab {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw ParameterViolation(message);
}

}  // namespace

SystemConfig validate_config(SystemConfig config) {
  check(config.K >= 1, "K must be at least 1");
  check(config.M >= config.K, "K must not exceed M");
  check(config.means.rows() == config.K && config.means.cols() == config.M,
        "means must be a K x M matrix");
  check(config.epsilon > 0.0 && config.epsilon < 1.0, "epsilon must lie in (0,1)");
  check(config.kappa > config.M, "kappa must exceed M");
  check(config.beta > 0.0 && config.beta < config.kappa,
        "beta must lie in (0, kappa)");
  check(config.delta_exp >= 0.0, "delta_exp must be nonnegative");
  check(config.T0 >= 1 && config.c2 >= 1 && config.c3 >= 1,
        "T0, c2 and c3 must be positive");
  check(config.epochs >= 1, "epochs must be at least 1");
  check(config.epochs < 60, "epochs must stay below 60 (exploitation length overflows)");

  for (int k = 1; k <= config.K; ++k) {
    for (int m = 1; m <= config.M; ++m) {
      const double mu = config.mean(k, m);
      check(mu >= 0.0 && mu <= 1.0, "means must lie in [0,1]");
      if (config.reward_model.kind == RewardModel::Kind::BetaWithMean) {
        check(mu > 0.0 && mu < 1.0,
              "beta reward model requires means strictly inside (0,1)");
      } else {
        check(mu > 0.0, "deterministic reward model requires means in (0,1]");
      }
    }
  }
  if (config.reward_model.kind == RewardModel::Kind::BetaWithMean) {
    check(config.reward_model.nu > 0.0, "beta concentration nu must be positive");
  }

  // Throws NonUniqueOptimalMatching when two assignments tie at the optimum.
  optimal_matching(config.means);
  return config;
}

Eigen::VectorXi collision_counts(const ActionProfile& profile, int M) {
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(M);
  for (int i = 0; i < profile.size(); ++i) counts(profile(i) - 1) += 1;
  return counts;
}

double mean_reward(const SystemConfig& config, int k, int m, int n, int w_m) {
  if (n >= 2 || w_m != 0) return 0.0;
  return config.mean(k, m);
}

double sample_reward(const RewardModel& model, double mu, Rng& rng) {
  if (model.kind == RewardModel::Kind::Deterministic) return mu;
  const double a = model.nu * mu;
  const double b = model.nu * (1.0 - mu);
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  for (;;) {
    const double x = ga(rng);
    const double y = gb(rng);
    if (x + y > 0.0) return x / (x + y);
  }
}

StepOutcome sample_step(const SystemConfig& config, const ActionProfile& profile,
                        const AttackVector& attack, Rng& rng) {
  StepOutcome out;
  out.collisions = collision_counts(profile, config.M);
  out.rewards = Vector::Zero(config.K);
  out.attacked_any = (attack.array() != 0).any();
  for (int k = 1; k <= config.K; ++k) {
    const int arm = profile(k - 1);
    if (out.collisions(arm - 1) == 1 && attack(arm - 1) == 0) {
      out.rewards(k - 1) = sample_reward(config.reward_model, config.mean(k, arm), rng);
    }
  }
  return out;
}

}  // namespace mpmab
