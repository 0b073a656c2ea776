#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "mpmab/model.hpp"
#include "mpmab/types.hpp"

namespace mpmab {

struct OptimalMatching {
  ActionProfile a_star;
  double J1 = 0.0;
  // Best total strictly below J1; -inf when only one assignment exists.
  double J2 = -std::numeric_limits<double>::infinity();
  double Delta = std::numeric_limits<double>::infinity();  // (J1 - J2) / (2M)
};

// Exact maximizer over injective player-to-arm assignments by enumeration.
// Throws NonUniqueOptimalMatching when two assignments tie at the maximum.
OptimalMatching optimal_matching(const Matrix& means);

// Expected per-step regret of a profile under an attack, computed from means.
double step_regret(const SystemConfig& config, const OptimalMatching& matching,
                   const ActionProfile& profile, const AttackVector& attack);

struct PhaseStats {
  std::int64_t steps = 0;
  std::int64_t attacked_steps = 0;
  double regret = 0.0;
};

class RegretLedger {
 public:
  explicit RegretLedger(std::int64_t stride = 100);

  void begin_epoch(int epoch);
  void record_step(Phase phase, double regret, bool attacked_any);
  // Attack-free block of `count` steps at constant per-step regret.
  void record_constant_steps(Phase phase, double regret, std::int64_t count);
  void set_epoch_flags(int epoch, bool exploration_ok, bool matching_ok);

  std::int64_t stride() const { return stride_; }
  std::int64_t total_steps() const { return t_; }
  double cumulative() const { return cum_; }
  const std::vector<double>& series() const { return series_; }
  std::int64_t attacked_steps(Phase phase) const { return W_[phase_index(phase)]; }
  std::int64_t steps(Phase phase) const { return steps_[phase_index(phase)]; }
  double regret(Phase phase) const { return regret_[phase_index(phase)]; }
  const std::vector<std::array<PhaseStats, 3>>& epoch_stats() const { return epoch_stats_; }
  const std::vector<char>& exploration_success() const { return exploration_success_; }
  const std::vector<char>& matching_success() const { return matching_success_; }

 private:
  void sample_point();

  std::int64_t stride_;
  std::int64_t t_ = 0;
  double cum_ = 0.0;
  std::vector<double> series_;
  std::array<std::int64_t, 3> W_{};
  std::array<std::int64_t, 3> steps_{};
  std::array<double, 3> regret_{};
  int current_epoch_ = 0;
  std::vector<std::array<PhaseStats, 3>> epoch_stats_;
  std::vector<char> exploration_success_;
  std::vector<char> matching_success_;
};

// Records the two per-epoch success events: estimates within Delta of the
// true means, and the exploitation profile equal to the optimal matching.
void epoch_flags(RegretLedger& ledger, int epoch, const Matrix& estimates,
                 const Matrix& means, double Delta,
                 const ActionProfile& exploit_profile, const ActionProfile& a_star);

}  // namespace mpmab
