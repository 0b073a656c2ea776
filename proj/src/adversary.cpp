#include "mpmab/adversary.hpp"

#include <fstream>
#include <sstream>

#include "mpmab/errors.hpp"

namespace mpmab {

bool AdversarySpec::active_in(Phase phase) const {
  switch (kind) {
    case Kind::None: return false;
    case Kind::IidSingleArm: return p > 0.0 && active_phases.count(phase) > 0;
    case Kind::IidPerArm: return per_arm_p.size() > 0 && per_arm_p.maxCoeff() > 0.0;
    case Kind::Schedule: return !schedule.empty();
  }
  return false;
}

AdversarySpec validate_spec(AdversarySpec spec, int M) {
  switch (spec.kind) {
    case AdversarySpec::Kind::None:
      break;
    case AdversarySpec::Kind::IidSingleArm:
      if (spec.p < 0.0 || spec.p >= 1.0)
        throw AttackProbabilityOne("iid_single_arm attack probability must lie in [0,1)");
      break;
    case AdversarySpec::Kind::IidPerArm: {
      if (spec.per_arm_p.size() != M)
        throw ParameterViolation("iid_per_arm needs one probability per arm");
      for (int m = 0; m < M; ++m) {
        if (spec.per_arm_p(m) < 0.0 || spec.per_arm_p(m) >= 1.0)
          throw AttackProbabilityOne("every per-arm attack probability must lie in [0,1)");
      }
      break;
    }
    case AdversarySpec::Kind::Schedule: {
      if (spec.schedule.empty()) break;
      for (const auto& [t, w] : spec.schedule) {
        if (t < 1) throw ParameterViolation("schedule steps must be >= 1");
        if (w.size() != M) throw ParameterViolation("schedule rows need M attack bits");
      }
      // An arm attacked in every scheduled row would starve exploration.
      for (int m = 0; m < M; ++m) {
        bool always = true;
        for (const auto& [t, w] : spec.schedule) always = always && w(m) != 0;
        if (always)
          throw AttackProbabilityOne("schedule attacks arm " + std::to_string(m + 1) +
                                     " at every step");
      }
      break;
    }
  }
  return spec;
}

AttackVector next_attack(const AdversarySpec& spec, int M, std::int64_t t, Phase phase,
                         Rng& rng) {
  AttackVector w = AttackVector::Zero(M);
  switch (spec.kind) {
    case AdversarySpec::Kind::None:
      break;
    case AdversarySpec::Kind::IidSingleArm: {
      if (spec.active_phases.count(phase) == 0) break;
      if (uniform01(rng) < spec.p) {
        const int arm = std::uniform_int_distribution<int>(1, M)(rng);
        w(arm - 1) = 1;
      }
      break;
    }
    case AdversarySpec::Kind::IidPerArm: {
      for (int m = 0; m < M; ++m) {
        if (uniform01(rng) < spec.per_arm_p(m)) w(m) = 1;
      }
      break;
    }
    case AdversarySpec::Kind::Schedule: {
      auto it = spec.schedule.find(t);
      if (it != spec.schedule.end()) w = it->second;
      break;
    }
  }
  return w;
}

AdversarySpec load_schedule_csv(const std::string& path, int M) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schedule file: " + path);
  AdversarySpec spec;
  spec.kind = AdversarySpec::Kind::Schedule;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.empty()) continue;
    // Skip a header row.
    if (fields[0].find_first_not_of(" \t0123456789") != std::string::npos) continue;
    if (static_cast<int>(fields.size()) != M + 1)
      throw ParseError("schedule row needs 1 + M fields: " + line);
    const std::int64_t t = std::stoll(fields[0]);
    AttackVector w(M);
    for (int m = 0; m < M; ++m) {
      const int bit = std::stoi(fields[m + 1]);
      if (bit != 0 && bit != 1) throw ParseError("attack bits must be 0 or 1: " + line);
      w(m) = bit;
    }
    spec.schedule[t] = w;
  }
  return spec;
}

AttackSource::AttackSource(AdversarySpec spec, int M, std::uint64_t seed)
    : spec_(std::move(spec)), M_(M), seed_(seed) {}

AttackVector AttackSource::at(std::int64_t t, PhaseTag tag) const {
  if (spec_.kind == AdversarySpec::Kind::Schedule) {
    auto it = spec_.schedule.find(t);
    if (it != spec_.schedule.end()) return it->second;
    return AttackVector::Zero(M_);
  }
  if (!spec_.active_in(tag.phase)) return AttackVector::Zero(M_);
  Rng rng = substream(seed_, static_cast<std::uint64_t>(t),
                      static_cast<std::uint64_t>(phase_index(tag.phase)),
                      static_cast<std::uint64_t>(tag.epoch));
  return next_attack(spec_, M_, t, tag.phase, rng);
}

}  // namespace mpmab
