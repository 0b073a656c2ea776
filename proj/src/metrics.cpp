#include "mpmab/metrics.hpp"

#include <cmath>

#include "mpmab/errors.hpp"

namespace mpmab {

namespace {

struct SearchState {
  const Matrix* means;
  int K, M;
  std::vector<int> assignment;  // arm index per player, 0-based
  std::vector<char> used;
  double best = -1.0;
  int best_count = 0;
  std::vector<int> best_assignment;
  double second = -std::numeric_limits<double>::infinity();
};

void search(SearchState& s, int player, double total) {
  if (player == s.K) {
    if (s.best_count == 0 || total > s.best) {
      if (s.best_count > 0 && s.best > s.second) s.second = s.best;
      s.best = total;
      s.best_count = 1;
      s.best_assignment = s.assignment;
    } else if (total == s.best) {
      s.best_count += 1;
    } else if (total > s.second) {
      s.second = total;
    }
    return;
  }
  for (int m = 0; m < s.M; ++m) {
    if (s.used[m]) continue;
    s.used[m] = 1;
    s.assignment[player] = m;
    search(s, player + 1, total + (*s.means)(player, m));
    s.used[m] = 0;
  }
}

}  // namespace

OptimalMatching optimal_matching(const Matrix& means) {
  const int K = static_cast<int>(means.rows());
  const int M = static_cast<int>(means.cols());
  if (K < 1 || M < K) throw ParameterViolation("need 1 <= K <= M");
  if (M > 12) throw InstanceTooLarge("matching enumeration is limited to M <= 12");

  SearchState s;
  s.means = &means;
  s.K = K;
  s.M = M;
  s.assignment.assign(K, 0);
  s.used.assign(M, 0);
  search(s, 0, 0.0);

  if (s.best_count > 1)
    throw NonUniqueOptimalMatching("optimal matching is not unique: " +
                                   std::to_string(s.best_count) + " assignments tie");

  OptimalMatching out;
  out.a_star.resize(K);
  for (int k = 0; k < K; ++k) out.a_star(k) = s.best_assignment[k] + 1;
  out.J1 = s.best;
  out.J2 = s.second;
  out.Delta = (out.J1 - out.J2) / (2.0 * M);
  return out;
}

double step_regret(const SystemConfig& config, const OptimalMatching& matching,
                   const ActionProfile& profile, const AttackVector& attack) {
  const Eigen::VectorXi occupancy = collision_counts(profile, config.M);
  double total = 0.0;
  for (int k = 1; k <= config.K; ++k) {
    const int arm = profile(k - 1);
    total += mean_reward(config, k, arm, occupancy(arm - 1), attack(arm - 1));
  }
  return matching.J1 - total;
}

RegretLedger::RegretLedger(std::int64_t stride) : stride_(stride) {}

void RegretLedger::begin_epoch(int epoch) {
  current_epoch_ = epoch;
  if (static_cast<int>(epoch_stats_.size()) < epoch) epoch_stats_.resize(epoch);
}

void RegretLedger::sample_point() {
  if (t_ % stride_ == 0) series_.push_back(cum_);
}

void RegretLedger::record_step(Phase phase, double regret, bool attacked_any) {
  const int p = phase_index(phase);
  ++t_;
  cum_ += regret;
  steps_[p] += 1;
  regret_[p] += regret;
  if (attacked_any) W_[p] += 1;
  if (current_epoch_ >= 1) {
    auto& stats = epoch_stats_[current_epoch_ - 1][p];
    stats.steps += 1;
    stats.regret += regret;
    if (attacked_any) stats.attacked_steps += 1;
  }
  sample_point();
}

void RegretLedger::record_constant_steps(Phase phase, double regret,
                                         std::int64_t count) {
  if (count <= 0) return;
  const int p = phase_index(phase);
  // Sampled points inside the block are filled arithmetically.
  std::int64_t s = (t_ / stride_ + 1) * stride_;
  for (; s <= t_ + count; s += stride_) {
    series_.push_back(cum_ + static_cast<double>(s - t_) * regret);
  }
  const double block = static_cast<double>(count) * regret;
  t_ += count;
  cum_ += block;
  steps_[p] += count;
  regret_[p] += block;
  if (current_epoch_ >= 1) {
    auto& stats = epoch_stats_[current_epoch_ - 1][p];
    stats.steps += count;
    stats.regret += block;
  }
}

void RegretLedger::set_epoch_flags(int epoch, bool exploration_ok, bool matching_ok) {
  if (static_cast<int>(exploration_success_.size()) < epoch) {
    exploration_success_.resize(epoch, 0);
    matching_success_.resize(epoch, 0);
  }
  exploration_success_[epoch - 1] = exploration_ok ? 1 : 0;
  matching_success_[epoch - 1] = matching_ok ? 1 : 0;
}

void epoch_flags(RegretLedger& ledger, int epoch, const Matrix& estimates,
                 const Matrix& means, double Delta,
                 const ActionProfile& exploit_profile, const ActionProfile& a_star) {
  const double max_err = (estimates - means).cwiseAbs().maxCoeff();
  const bool exploration_ok = max_err < Delta;
  const bool matching_ok =
      exploit_profile.size() == a_star.size() && (exploit_profile.array() == a_star.array()).all();
  ledger.set_epoch_flags(epoch, exploration_ok, matching_ok);
}

}  // namespace mpmab
