#include "mpmab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpmab/errors.hpp"

namespace mpmab::oracle {

namespace {

int per_player_size(const ChainModel& chain, int k) {
  return chain.M * static_cast<int>(chain.utility_alphabet[k].size()) * 2;
}

int utility_index(const std::vector<double>& alphabet, double u) {
  for (int i = 0; i < static_cast<int>(alphabet.size()); ++i) {
    if (alphabet[i] == u) return i;
  }
  return -1;
}

int encode_player(const ChainModel& chain, int k, const PlayerMatchState& s) {
  const int ui = utility_index(chain.utility_alphabet[k], s.baseline_utility);
  if (ui < 0 || s.baseline_action < 1 || s.baseline_action > chain.M) return -1;
  const int mood = s.mood == Mood::Content ? 1 : 0;
  return ((s.baseline_action - 1) * static_cast<int>(chain.utility_alphabet[k].size()) + ui) * 2 +
         mood;
}

PlayerMatchState decode_player(const ChainModel& chain, int k, int code) {
  PlayerMatchState s;
  s.mood = (code % 2) == 1 ? Mood::Content : Mood::Discontent;
  code /= 2;
  const int n_utils = static_cast<int>(chain.utility_alphabet[k].size());
  s.baseline_utility = chain.utility_alphabet[k][code % n_utils];
  s.baseline_action = code / n_utils + 1;
  return s;
}

struct Branch {
  PlayerMatchState state;
  double prob;
};

// Kosaraju strongly connected components over the support graph.
std::vector<int> strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                               int& component_count) {
  const int n = static_cast<int>(adj.size());
  std::vector<std::vector<int>> radj(n);
  for (int u = 0; u < n; ++u)
    for (int v : adj[u]) radj[v].push_back(u);

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (int start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    seen[start] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next < adj[u].size()) {
        const int v = adj[u][next++];
        if (!seen[v]) {
          seen[v] = 1;
          stack.emplace_back(v, 0);
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }

  std::vector<int> component(n, -1);
  component_count = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (component[*it] != -1) continue;
    std::vector<int> stack{*it};
    component[*it] = component_count;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : radj[u]) {
        if (component[v] == -1) {
          component[v] = component_count;
          stack.push_back(v);
        }
      }
    }
    ++component_count;
  }
  return component;
}

}  // namespace

int ChainModel::index_of(const JointState& z) const {
  if (static_cast<int>(z.size()) != K) return -1;
  int index = 0;
  for (int k = 0; k < K; ++k) {
    const int code = encode_player(*this, k, z[k]);
    if (code < 0) return -1;
    index = index * per_player_size(*this, k) + code;
  }
  return index;
}

AttackMarginal attack_marginal(const AdversarySpec& spec, int M) {
  AttackMarginal marginal;
  const AttackVector zero = AttackVector::Zero(M);
  switch (spec.kind) {
    case AdversarySpec::Kind::None:
      marginal.support.emplace_back(zero, 1.0);
      break;
    case AdversarySpec::Kind::IidSingleArm: {
      if (spec.active_phases.count(Phase::Matching) == 0 || spec.p <= 0.0) {
        marginal.support.emplace_back(zero, 1.0);
        break;
      }
      marginal.support.emplace_back(zero, 1.0 - spec.p);
      for (int m = 0; m < M; ++m) {
        AttackVector w = zero;
        w(m) = 1;
        marginal.support.emplace_back(w, spec.p / M);
      }
      break;
    }
    case AdversarySpec::Kind::IidPerArm: {
      for (int mask = 0; mask < (1 << M); ++mask) {
        AttackVector w = zero;
        double prob = 1.0;
        for (int m = 0; m < M; ++m) {
          const bool hit = (mask >> m) & 1;
          w(m) = hit ? 1 : 0;
          prob *= hit ? spec.per_arm_p(m) : 1.0 - spec.per_arm_p(m);
        }
        if (prob > 0.0) marginal.support.emplace_back(w, prob);
      }
      break;
    }
    case AdversarySpec::Kind::Schedule:
      throw ValidationError("schedule adversaries admit no exact per-step marginal");
  }
  return marginal;
}

ChainModel build_chain(const Matrix& estimates, int M, double epsilon, double kappa,
                       double beta, const AdversarySpec& adversary,
                       SyncSnapshot snapshot) {
  const int K = static_cast<int>(estimates.rows());
  if (K > 2 || M > 3)
    throw InstanceTooLarge("exact chain construction is limited to K <= 2, M <= 3");
  if (static_cast<int>(estimates.cols()) != M)
    throw ParameterViolation("estimates must be K x M");

  ChainModel chain;
  chain.K = K;
  chain.M = M;
  chain.epsilon = epsilon;
  chain.snapshot = snapshot;
  chain.utility_alphabet.resize(K);
  for (int k = 0; k < K; ++k) {
    std::vector<double> alphabet{0.0};
    for (int m = 0; m < M; ++m)
      alphabet.push_back(std::clamp(estimates(k, m), 0.0, kMaxUtility));
    std::sort(alphabet.begin(), alphabet.end());
    alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
    chain.utility_alphabet[k] = std::move(alphabet);
  }

  int n_states = 1;
  for (int k = 0; k < K; ++k) n_states *= per_player_size(chain, k);
  chain.state_list.resize(n_states);
  for (int idx = 0; idx < n_states; ++idx) {
    JointState z(K);
    int rest = idx;
    for (int k = K - 1; k >= 0; --k) {
      const int size_k = per_player_size(chain, k);
      z[k] = decode_player(chain, k, rest % size_k);
      rest /= size_k;
    }
    chain.state_list[idx] = std::move(z);
  }

  const AttackMarginal marginal = attack_marginal(adversary, M);
  const double explore = std::pow(epsilon, kappa);
  const double sync_keep = std::pow(epsilon, beta);

  chain.P = Matrix::Zero(n_states, n_states);

  std::vector<std::vector<std::pair<int, double>>> action_options(K);
  std::vector<std::vector<Branch>> branches(K);
  std::vector<int> profile(K), branch_pick(K), final_pick(K);

  for (int zi = 0; zi < n_states; ++zi) {
    const JointState& z = chain.state_list[zi];

    for (int k = 0; k < K; ++k) {
      auto& options = action_options[k];
      options.clear();
      if (z[k].mood == Mood::Content) {
        if (1.0 - explore > 0.0) options.emplace_back(z[k].baseline_action, 1.0 - explore);
        if (explore > 0.0 && M > 1) {
          for (int m = 1; m <= M; ++m) {
            if (m != z[k].baseline_action) options.emplace_back(m, explore / (M - 1));
          }
        }
      } else {
        for (int m = 1; m <= M; ++m) options.emplace_back(m, 1.0 / M);
      }
    }

    // Enumerate action profiles.
    std::vector<int> option_pick(K, 0);
    for (;;) {
      double p_action = 1.0;
      for (int k = 0; k < K; ++k) {
        profile[k] = action_options[k][option_pick[k]].first;
        p_action *= action_options[k][option_pick[k]].second;
      }

      Eigen::VectorXi occupancy = Eigen::VectorXi::Zero(M);
      for (int k = 0; k < K; ++k) occupancy(profile[k] - 1) += 1;

      for (const auto& [attack, p_attack] : marginal.support) {
        // Utilities are deterministic given profile and attack.
        double u[2] = {0.0, 0.0};
        for (int k = 0; k < K; ++k) {
          const int arm = profile[k];
          if (occupancy(arm - 1) == 1 && attack(arm - 1) == 0)
            u[k] = std::clamp(estimates(k, arm - 1), 0.0, kMaxUtility);
        }

        for (int k = 0; k < K; ++k) {
          auto& b = branches[k];
          b.clear();
          if (z[k].mood == Mood::Content && profile[k] == z[k].baseline_action) {
            b.push_back({z[k], 1.0});
          } else {
            const double p_content = std::pow(epsilon, 1.0 - u[k]);
            PlayerMatchState next{profile[k], u[k], Mood::Content};
            if (p_content > 0.0) b.push_back({next, p_content});
            if (1.0 - p_content > 0.0) {
              next.mood = Mood::Discontent;
              b.push_back({next, 1.0 - p_content});
            }
          }
        }

        // Enumerate the joint state-update outcome, then the mood sync.
        std::fill(branch_pick.begin(), branch_pick.end(), 0);
        for (;;) {
          double p_update = p_action * p_attack;
          bool all_content_bits = true;
          for (int k = 0; k < K; ++k) {
            p_update *= branches[k][branch_pick[k]].prob;
            const Mood snap_mood = snapshot == SyncSnapshot::PreUpdate
                                       ? z[k].mood
                                       : branches[k][branch_pick[k]].state.mood;
            all_content_bits = all_content_bits && snap_mood == Mood::Content;
          }

          // Per-player final options after synchronization.
          std::vector<std::vector<Branch>> finals(K);
          for (int k = 0; k < K; ++k) {
            const PlayerMatchState& mid = branches[k][branch_pick[k]].state;
            if (mid.mood == Mood::Discontent || all_content_bits) {
              finals[k].push_back({mid, 1.0});
            } else {
              PlayerMatchState kept = mid;
              if (sync_keep > 0.0) finals[k].push_back({kept, sync_keep});
              if (1.0 - sync_keep > 0.0) {
                kept.mood = Mood::Discontent;
                finals[k].push_back({kept, 1.0 - sync_keep});
              }
            }
          }

          std::fill(final_pick.begin(), final_pick.end(), 0);
          for (;;) {
            double p_final = p_update;
            JointState target(K);
            for (int k = 0; k < K; ++k) {
              p_final *= finals[k][final_pick[k]].prob;
              target[k] = finals[k][final_pick[k]].state;
            }
            chain.P(zi, chain.index_of(target)) += p_final;

            int k = K - 1;
            while (k >= 0 && ++final_pick[k] == static_cast<int>(finals[k].size())) {
              final_pick[k] = 0;
              --k;
            }
            if (k < 0) break;
          }

          int k = K - 1;
          while (k >= 0 && ++branch_pick[k] == static_cast<int>(branches[k].size())) {
            branch_pick[k] = 0;
            --k;
          }
          if (k < 0) break;
        }
      }

      int k = K - 1;
      while (k >= 0 && ++option_pick[k] == static_cast<int>(action_options[k].size())) {
        option_pick[k] = 0;
        --k;
      }
      if (k < 0) break;
    }
  }

  return chain;
}

Vector stationary_distribution(const Matrix& P, double tol, std::int64_t max_iters) {
  const auto n = P.rows();
  if (n < 1 || P.cols() != n) throw ParameterViolation("transition matrix must be square");
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (std::int64_t iter = 0; iter < max_iters; ++iter) {
    Eigen::RowVectorXd next = pi * P;
    if ((next - pi).lpNorm<1>() <= tol) return pi.transpose();
    pi = next / next.sum();
  }
  throw NoConvergence("power iteration failed to reach tolerance");
}

ClassificationReport classify_p0(const ChainModel& chain) {
  const int n = static_cast<int>(chain.state_list.size());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (chain.P(i, j) > 0.0) adj[i].push_back(j);
    }
  }

  int n_components = 0;
  const std::vector<int> component = strongly_connected_components(adj, n_components);
  std::vector<char> comp_closed(n_components, 1);
  std::vector<int> comp_size(n_components, 0);
  for (int i = 0; i < n; ++i) {
    comp_size[component[i]] += 1;
    for (int j : adj[i]) {
      if (component[j] != component[i]) comp_closed[component[i]] = 0;
    }
  }

  auto all_mood = [&](int idx, Mood mood) {
    for (const auto& s : chain.state_list[idx])
      if (s.mood != mood) return false;
    return true;
  };

  ClassificationReport report;
  std::vector<std::vector<int>> closed_members(n_components);
  for (int i = 0; i < n; ++i) {
    const int c = component[i];
    if (comp_closed[c] && comp_size[c] == 1 && chain.P(i, i) >= 1.0 - 1e-12) {
      report.absorbing_states.push_back(i);
    } else if (comp_closed[c] && comp_size[c] >= 2) {
      closed_members[c].push_back(i);
    } else {
      report.transient_states.push_back(i);
    }
  }
  for (auto& members : closed_members) {
    if (!members.empty()) report.closed_classes.push_back(std::move(members));
  }

  report.all_content_absorbing = true;
  for (int i = 0; i < n; ++i) {
    if (all_mood(i, Mood::Content) && chain.P(i, i) < 1.0 - 1e-12)
      report.all_content_absorbing = false;
  }

  // The all-discontent set must be closed, and its recurrent part must form a
  // single communicating class. States with baseline utilities that no action
  // and attack can realize are unreachable from inside the set, so mutual
  // reachability is asserted for the recurrent core.
  bool closed_set = true;
  for (int i = 0; i < n; ++i) {
    if (!all_mood(i, Mood::Discontent)) continue;
    for (int j : adj[i]) closed_set = closed_set && all_mood(j, Mood::Discontent);
  }
  int discontent_cores = 0;
  for (const auto& members : report.closed_classes) {
    bool all_d = true;
    for (int i : members) all_d = all_d && all_mood(i, Mood::Discontent);
    if (all_d) ++discontent_cores;
  }
  report.all_discontent_closed =
      closed_set && discontent_cores == 1 &&
      report.closed_classes.size() == 1;

  report.mixed_transient = true;
  for (int i = 0; i < n; ++i) {
    if (all_mood(i, Mood::Content) || all_mood(i, Mood::Discontent)) continue;
    for (int j : adj[i]) {
      if (!all_mood(j, Mood::Discontent)) report.mixed_transient = false;
    }
  }

  return report;
}

OptimalMatching brute_force_matching(const Matrix& means) {
  const int K = static_cast<int>(means.rows());
  const int M = static_cast<int>(means.cols());
  if (K < 1 || M < K) throw ParameterViolation("need 1 <= K <= M");
  if (M > 8) throw InstanceTooLarge("brute-force matching is limited to M <= 8");

  double best = 0.0;
  int best_count = 0;
  std::vector<int> best_arms;
  double second = -std::numeric_limits<double>::infinity();

  // Every K-subset of arms, in every order.
  std::vector<int> selector(M, 0);
  std::fill(selector.end() - K, selector.end(), 1);
  do {
    std::vector<int> arms;
    for (int m = 0; m < M; ++m)
      if (selector[m]) arms.push_back(m);
    std::sort(arms.begin(), arms.end());
    do {
      double total = 0.0;
      for (int k = 0; k < K; ++k) total += means(k, arms[k]);
      if (best_count == 0 || total > best) {
        if (best_count > 0 && best > second) second = best;
        best = total;
        best_count = 1;
        best_arms = arms;
      } else if (total == best) {
        best_count += 1;
      } else if (total > second) {
        second = total;
      }
    } while (std::next_permutation(arms.begin(), arms.end()));
  } while (std::next_permutation(selector.begin(), selector.end()));

  if (best_count > 1)
    throw NonUniqueOptimalMatching("optimal matching is not unique: " +
                                   std::to_string(best_count) + " assignments tie");

  OptimalMatching out;
  out.a_star.resize(K);
  for (int k = 0; k < K; ++k) out.a_star(k) = best_arms[k] + 1;
  out.J1 = best;
  out.J2 = second;
  out.Delta = (out.J1 - out.J2) / (2.0 * M);
  return out;
}

double resistance_probe(const Matrix& estimates, int M, double kappa, double beta,
                        const AdversarySpec& adversary, SyncSnapshot snapshot,
                        std::span<const double> epsilon_grid, const JointState& source,
                        const JointState& target) {
  if (epsilon_grid.size() < 2)
    throw ParameterViolation("resistance probe needs at least two grid points");

  std::vector<double> log_eps, log_prob;
  for (const double eps : epsilon_grid) {
    const ChainModel chain = build_chain(estimates, M, eps, kappa, beta, adversary, snapshot);
    const int si = chain.index_of(source);
    const int ti = chain.index_of(target);
    if (si < 0 || ti < 0)
      throw ParameterViolation("probe state is not in the chain's state space");
    const double p = chain.P(si, ti);
    if (p <= 0.0)
      throw ZeroTransition("one-step transition probability vanishes at epsilon = " +
                           std::to_string(eps));
    log_eps.push_back(std::log(eps));
    log_prob.push_back(std::log(p));
  }

  const double n = static_cast<double>(log_eps.size());
  const double mx = std::accumulate(log_eps.begin(), log_eps.end(), 0.0) / n;
  const double my = std::accumulate(log_prob.begin(), log_prob.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_eps.size(); ++i) {
    sxy += (log_eps[i] - mx) * (log_prob[i] - my);
    sxx += (log_eps[i] - mx) * (log_eps[i] - mx);
  }
  return sxy / sxx;
}

JointState Fixture::optimal_state() const {
  return {{1, std::clamp(means(0, 0), 0.0, kMaxUtility), Mood::Content},
          {2, std::clamp(means(1, 1), 0.0, kMaxUtility), Mood::Content}};
}

JointState Fixture::discontent_state() const {
  return {{1, 0.0, Mood::Discontent}, {1, 0.0, Mood::Discontent}};
}

JointState Fixture::collapse_state() const {
  return {{2, 0.0, Mood::Discontent},
          {2, std::clamp(means(1, 1), 0.0, kMaxUtility), Mood::Discontent}};
}

Fixture two_player_two_arm_fixture() {
  Fixture fixture;
  fixture.means.resize(2, 2);
  fixture.means << 0.9, 0.2,
                   0.3, 0.8;
  fixture.kappa = 3.0;
  fixture.beta = 2.0;
  return fixture;
}

}  // namespace mpmab::oracle
