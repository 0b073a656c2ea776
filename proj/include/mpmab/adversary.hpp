#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "mpmab/rng.hpp"
#include "mpmab/types.hpp"

namespace mpmab {

struct AdversarySpec {
  enum class Kind { None, IidSingleArm, IidPerArm, Schedule };

  Kind kind = Kind::None;

  // IidSingleArm: with probability p one uniformly chosen arm is attacked,
  // but only during the listed phases.
  double p = 0.0;
  std::set<Phase> active_phases = {Phase::Exploration, Phase::Matching};

  // IidPerArm: independent Bernoulli(p_m) per arm, every phase.
  Vector per_arm_p;

  // Schedule: explicit attack vectors keyed by global step; steps without an
  // entry are attack-free.
  std::map<std::int64_t, AttackVector> schedule;

  bool active_in(Phase phase) const;
};

// Enforces that every arm is attack-free with positive probability.
AdversarySpec validate_spec(AdversarySpec spec, int M);

AttackVector next_attack(const AdversarySpec& spec, int M, std::int64_t t,
                         Phase phase, Rng& rng);

// Loads a schedule from CSV rows of the form t,w_1,...,w_M.
AdversarySpec load_schedule_csv(const std::string& path, int M);

// Draws the attack for step t from a generator derived from (seed, t, phase,
// epoch), so the attack process never depends on how much randomness the
// players consumed.
class AttackSource {
 public:
  AttackSource(AdversarySpec spec, int M, std::uint64_t seed);

  AttackVector at(std::int64_t t, PhaseTag tag) const;
  bool active_in(Phase phase) const { return spec_.active_in(phase); }
  const AdversarySpec& spec() const { return spec_; }
  int arms() const { return M_; }

 private:
  AdversarySpec spec_;
  int M_;
  std::uint64_t seed_;
};

}  // namespace mpmab
