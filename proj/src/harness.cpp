#include "mpmab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "mpmab/errors.hpp"
#include "mpmab/exploration.hpp"

namespace mpmab {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Strict JSON field access. Consumed keys are erased; leftovers are rejected.
// ---------------------------------------------------------------------------

json take(json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing field " + path + "." + key);
  json value = *it;
  obj.erase(it);
  return value;
}

json take_or(json& obj, const char* key, json fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  json value = *it;
  obj.erase(it);
  return value;
}

void reject_unknown(const json& obj, const std::string& path) {
  if (!obj.empty())
    throw ParseError("unknown field " + path + "." + obj.begin().key());
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + " must be a number");
  return j.get<double>();
}

std::int64_t as_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + " must be an integer");
  return j.get<std::int64_t>();
}

Phase parse_phase(const std::string& name, const std::string& where) {
  if (name == "exploration") return Phase::Exploration;
  if (name == "matching") return Phase::Matching;
  if (name == "exploitation") return Phase::Exploitation;
  throw ParseError(where + " has unknown phase '" + name + "'");
}

AdversarySpec parse_adversary(json j, int M, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + " must be an object");
  AdversarySpec spec;
  const std::string type = take(j, path, "type").get<std::string>();
  if (type == "none") {
    spec.kind = AdversarySpec::Kind::None;
  } else if (type == "iid_single_arm") {
    spec.kind = AdversarySpec::Kind::IidSingleArm;
    spec.p = as_number(take(j, path, "p"), path + ".p");
    json phases = take_or(j, "active_phases",
                          json::array({"exploration", "matching"}));
    if (!phases.is_array()) throw ParseError(path + ".active_phases must be an array");
    spec.active_phases.clear();
    for (const auto& ph : phases)
      spec.active_phases.insert(parse_phase(ph.get<std::string>(), path + ".active_phases"));
  } else if (type == "iid_per_arm") {
    spec.kind = AdversarySpec::Kind::IidPerArm;
    json probs = take(j, path, "p_per_arm");
    if (!probs.is_array() || static_cast<int>(probs.size()) != M)
      throw ParseError(path + ".p_per_arm must hold M probabilities");
    spec.per_arm_p.resize(M);
    for (int m = 0; m < M; ++m)
      spec.per_arm_p(m) = as_number(probs[m], path + ".p_per_arm");
  } else if (type == "schedule") {
    const std::string csv = take(j, path, "csv").get<std::string>();
    spec = load_schedule_csv(csv, M);
  } else {
    throw ParseError(path + ".type has unknown value '" + type + "'");
  }
  reject_unknown(j, path);
  return spec;
}

bool adversary_may_attack(const AdversarySpec& spec, Phase phase) {
  return spec.active_in(phase);
}

int resolve_workers(int workers, int replications) {
  if (workers <= 0) {
    if (const char* env = std::getenv("MPMAB_WORKERS")) workers = std::atoi(env);
  }
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  return std::min(workers, replications);
}

}  // namespace

ExperimentSpec parse_spec_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(origin + " must be a JSON object");

  ExperimentSpec spec;
  SystemConfig& sys = spec.system;
  sys.K = static_cast<int>(as_integer(take(j, origin, "K"), origin + ".K"));
  sys.M = static_cast<int>(as_integer(take(j, origin, "M"), origin + ".M"));

  json means = take(j, origin, "means");
  if (!means.is_array() || static_cast<int>(means.size()) != sys.K * sys.M)
    throw ParseError(origin + ".means must be a row-major K*M array");
  sys.means.resize(sys.K, sys.M);
  for (int k = 0; k < sys.K; ++k)
    for (int m = 0; m < sys.M; ++m)
      sys.means(k, m) = as_number(means[k * sys.M + m], origin + ".means");

  json rm = take(j, origin, "reward_model");
  if (!rm.is_object()) throw ParseError(origin + ".reward_model must be an object");
  const std::string rm_type = take(rm, origin + ".reward_model", "type").get<std::string>();
  if (rm_type == "beta") {
    sys.reward_model.kind = RewardModel::Kind::BetaWithMean;
    sys.reward_model.nu =
        as_number(take(rm, origin + ".reward_model", "nu"), origin + ".reward_model.nu");
  } else if (rm_type == "deterministic") {
    sys.reward_model.kind = RewardModel::Kind::Deterministic;
  } else {
    throw ParseError(origin + ".reward_model.type has unknown value '" + rm_type + "'");
  }
  reject_unknown(rm, origin + ".reward_model");

  sys.delta_exp = as_number(take(j, origin, "delta_exp"), origin + ".delta_exp");
  sys.epsilon = as_number(take(j, origin, "epsilon"), origin + ".epsilon");
  sys.kappa = as_number(take(j, origin, "kappa"), origin + ".kappa");
  sys.beta = as_number(take(j, origin, "beta"), origin + ".beta");
  sys.T0 = as_integer(take(j, origin, "T0"), origin + ".T0");
  sys.c2 = as_integer(take(j, origin, "c2"), origin + ".c2");
  sys.c3 = as_integer(take(j, origin, "c3"), origin + ".c3");
  sys.epochs = static_cast<int>(as_integer(take(j, origin, "epochs"), origin + ".epochs"));
  sys.base_seed =
      static_cast<std::uint64_t>(as_integer(take(j, origin, "base_seed"), origin + ".base_seed"));

  spec.adversary = parse_adversary(take(j, origin, "adversary"), sys.M, origin + ".adversary");

  spec.replications =
      static_cast<int>(as_integer(take_or(j, "replications", 1), origin + ".replications"));
  spec.stride = as_integer(take_or(j, "stride", 100), origin + ".stride");
  json trace = take_or(j, "trace", false);
  if (!trace.is_boolean()) throw ParseError(origin + ".trace must be a boolean");
  spec.trace = trace.get<bool>();

  json explo = take_or(j, "exploration", json::object());
  if (!explo.is_object()) throw ParseError(origin + ".exploration must be an object");
  json cww = take_or(explo, "count_while_waiting", true);
  if (!cww.is_boolean())
    throw ParseError(origin + ".exploration.count_while_waiting must be a boolean");
  sys.exploration.count_while_waiting = cww.get<bool>();
  reject_unknown(explo, origin + ".exploration");

  json match = take_or(j, "matching", json::object());
  if (!match.is_object()) throw ParseError(origin + ".matching must be an object");
  const std::string snapshot =
      take_or(match, "sync_snapshot", "post_update").get<std::string>();
  if (snapshot == "post_update") {
    sys.matching.sync_snapshot = SyncSnapshot::PostUpdate;
  } else if (snapshot == "pre_update") {
    sys.matching.sync_snapshot = SyncSnapshot::PreUpdate;
  } else {
    throw ParseError(origin + ".matching.sync_snapshot has unknown value '" + snapshot + "'");
  }
  reject_unknown(match, origin + ".matching");

  reject_unknown(j, origin);

  if (spec.replications < 1) throw ValidationError(origin + ".replications must be >= 1");
  if (spec.stride < 1) throw ValidationError(origin + ".stride must be >= 1");
  try {
    spec.system = validate_config(spec.system);
    spec.adversary = validate_spec(spec.adversary, sys.M);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return spec;
}

ExperimentSpec parse_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open spec file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_spec_json(text, "$");
}

RunResult run_single(const ExperimentSpec& spec, std::uint64_t seed,
                     std::optional<std::int64_t> horizon) {
  const auto start = std::chrono::steady_clock::now();
  const SystemConfig config = validate_config(spec.system);
  const AdversarySpec adversary = validate_spec(spec.adversary, config.M);
  if (config.epochs < 1) throw InvalidSpec("at least one epoch is required");
  const OptimalMatching om = optimal_matching(config.means);

  Rng rng = substream(seed, 0x9a1full);
  const AttackSource attacks(adversary, config.M, mix_seed(seed, 0xadULL));
  BitBus bus(config.K);
  RegretLedger ledger(spec.stride);
  std::vector<ExplorationState> explorers = make_exploration_states(config.K, config.M);
  std::vector<Eigen::MatrixXi> counters_by_epoch;

  RunResult result;
  result.stride = spec.stride;
  std::int64_t t = 0;
  auto horizon_reached = [&] { return horizon && t >= *horizon; };

  for (int epoch = 1; epoch <= config.epochs && !horizon_reached(); ++epoch) {
    ledger.begin_epoch(epoch);

    bus.set_phase(Phase::Exploration);
    run_exploration_phase(config, epoch, explorers, attacks, bus, om, &ledger, t, rng,
                          horizon);
    const Matrix estimates = finalize_estimates(explorers);
    result.estimates_by_epoch.push_back(estimates);
    if (horizon_reached()) break;

    bus.set_phase(Phase::Matching);
    const MatchParams params = match_params(config, epoch);
    MatchingResult match =
        run_matching_phase(config, estimates, params, epoch, attacks, bus, rng, &om,
                           &ledger, &t, spec.trace ? &result.trace : nullptr, {}, nullptr,
                           horizon);
    counters_by_epoch.push_back(std::move(match.counters));
    if (horizon_reached()) break;

    ActionProfile exploit_profile(config.K);
    for (int k = 1; k <= config.K; ++k)
      exploit_profile(k - 1) = exploit_action(counters_by_epoch, k, epoch, estimates);
    result.exploit_profiles.push_back(exploit_profile);
    epoch_flags(ledger, epoch, estimates, config.means, om.Delta, exploit_profile,
                om.a_star);

    bus.set_phase(Phase::Exploitation);
    std::int64_t remaining = config.c3 * (std::int64_t{1} << epoch);
    if (horizon) remaining = std::min(remaining, *horizon - t);
    const AttackVector no_attack = AttackVector::Zero(config.M);
    if (!adversary_may_attack(adversary, Phase::Exploitation)) {
      const double regret = step_regret(config, om, exploit_profile, no_attack);
      ledger.record_constant_steps(Phase::Exploitation, regret, remaining);
      t += remaining;
    } else {
      const PhaseTag tag{Phase::Exploitation, epoch};
      for (std::int64_t i = 0; i < remaining; ++i) {
        ++t;
        const AttackVector attack = attacks.at(t, tag);
        ledger.record_step(Phase::Exploitation,
                           step_regret(config, om, exploit_profile, attack),
                           (attack.array() != 0).any());
      }
    }
  }

  result.series = ledger.series();
  result.total_steps = ledger.total_steps();
  result.cumulative_regret = ledger.cumulative();
  for (const Phase p : {Phase::Exploration, Phase::Matching, Phase::Exploitation}) {
    result.W[phase_index(p)] = ledger.attacked_steps(p);
    result.steps[phase_index(p)] = ledger.steps(p);
    result.regret_by_phase[phase_index(p)] = ledger.regret(p);
  }
  result.epoch_stats = ledger.epoch_stats();
  result.exploration_success = ledger.exploration_success();
  result.matching_success = ledger.matching_success();
  result.comm_bits_exploration.resize(config.K);
  result.comm_bits_matching.resize(config.K);
  for (int k = 1; k <= config.K; ++k) {
    result.comm_bits_exploration[k - 1] = bus.bits_sent(k, Phase::Exploration);
    result.comm_bits_matching[k - 1] = bus.bits_sent(k, Phase::Matching);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Aggregate run_replications(const ExperimentSpec& spec, int workers) {
  const auto start = std::chrono::steady_clock::now();
  const int R = spec.replications;
  if (R < 1) throw InvalidSpec("at least one replication is required");

  Aggregate agg;
  agg.matching = optimal_matching(spec.system.means);
  agg.stride = spec.stride;
  agg.replications = R;
  agg.runs.resize(R);

  const int n_workers = resolve_workers(workers, R);
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= R) return;
      agg.runs[i] = run_single(spec, spec.system.base_seed + 1 + i);
    }
  };
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // Aggregation runs in replication order; series are truncated at the
  // shortest run so sampled points line up across replications.
  std::size_t common = agg.runs[0].series.size();
  for (const auto& run : agg.runs) common = std::min(common, run.series.size());
  agg.mean_series.assign(common, 0.0);
  agg.std_series.assign(common, 0.0);
  for (const auto& run : agg.runs)
    for (std::size_t i = 0; i < common; ++i) agg.mean_series[i] += run.series[i];
  for (auto& v : agg.mean_series) v /= R;
  for (const auto& run : agg.runs) {
    for (std::size_t i = 0; i < common; ++i) {
      const double d = run.series[i] - agg.mean_series[i];
      agg.std_series[i] += d * d;
    }
  }
  for (auto& v : agg.std_series) v = std::sqrt(v / R);

  const int epochs = spec.system.epochs;
  agg.exploration_success_rate.assign(epochs, 0.0);
  agg.matching_success_rate.assign(epochs, 0.0);
  for (const auto& run : agg.runs) {
    for (int e = 0; e < epochs; ++e) {
      if (e < static_cast<int>(run.exploration_success.size())) {
        agg.exploration_success_rate[e] += run.exploration_success[e] ? 1.0 : 0.0;
        agg.matching_success_rate[e] += run.matching_success[e] ? 1.0 : 0.0;
      }
    }
  }
  for (auto& v : agg.exploration_success_rate) v /= R;
  for (auto& v : agg.matching_success_rate) v /= R;

  agg.min_steps = agg.runs[0].total_steps;
  agg.max_steps = agg.runs[0].total_steps;
  double mean_final = 0.0;
  for (const auto& run : agg.runs) {
    agg.min_steps = std::min(agg.min_steps, run.total_steps);
    agg.max_steps = std::max(agg.max_steps, run.total_steps);
    mean_final += run.cumulative_regret;
    for (int p = 0; p < 3; ++p) agg.mean_W[p] += static_cast<double>(run.W[p]);
  }
  mean_final /= R;
  for (auto& w : agg.mean_W) w /= R;
  double var_final = 0.0;
  for (const auto& run : agg.runs) {
    const double d = run.cumulative_regret - mean_final;
    var_final += d * d;
  }
  agg.final_cum_regret_mean = mean_final;
  agg.final_cum_regret_std = std::sqrt(var_final / R);

  std::int64_t expected = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch)
    expected += spec.system.M + match_params(spec.system, epoch).tau;
  agg.comm_budget_expected = expected;
  agg.comm_bits_exploration = agg.runs[0].comm_bits_exploration.empty()
                                  ? 0
                                  : agg.runs[0].comm_bits_exploration[0];
  agg.comm_bits_matching =
      agg.runs[0].comm_bits_matching.empty() ? 0 : agg.runs[0].comm_bits_matching[0];
  agg.comm_budget_law_holds = true;
  for (const auto& run : agg.runs) {
    for (int k = 0; k < spec.system.K; ++k) {
      const std::int64_t total =
          run.comm_bits_exploration[k] + run.comm_bits_matching[k];
      agg.comm_budget_law_holds = agg.comm_budget_law_holds && total == expected;
    }
  }

  agg.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return agg;
}

ExperimentSpec figure1_spec(Figure1Scale scale) {
  ExperimentSpec spec;
  SystemConfig& sys = spec.system;
  sys.K = 3;
  sys.M = 3;
  sys.means.resize(3, 3);
  sys.means << 0.8, 0.6, 0.4,
               0.2, 0.7, 0.3,
               0.1, 0.7, 0.5;
  sys.reward_model.kind = RewardModel::Kind::BetaWithMean;
  sys.reward_model.nu = 2.0;
  sys.delta_exp = 0.0;
  sys.epsilon = 1e-4;
  sys.kappa = 3.0;
  sys.beta = 2.0;
  sys.base_seed = 2024;

  spec.adversary.kind = AdversarySpec::Kind::IidSingleArm;
  spec.adversary.p = 0.4;
  spec.adversary.active_phases = {Phase::Exploration, Phase::Matching};

  if (scale == Figure1Scale::Paper) {
    sys.T0 = 2000;
    sys.c2 = 2000;
    sys.c3 = 10000;
    sys.epochs = 10;
    spec.replications = 100;
  } else {
    sys.T0 = 200;
    sys.c2 = 200;
    sys.c3 = 500;
    sys.epochs = 7;
    spec.replications = 20;
  }
  spec.stride = 100;
  return spec;
}

Aggregate reproduce_figure1(Figure1Scale scale, const std::filesystem::path& out_dir,
                            int workers) {
  const ExperimentSpec spec = figure1_spec(scale);
  Aggregate agg = run_replications(spec, workers);
  write_outputs(out_dir, spec, agg);
  return agg;
}

void write_outputs(const std::filesystem::path& out_dir, const ExperimentSpec& spec,
                   const Aggregate& agg) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream csv(out_dir / "regret.csv");
    csv << "t,mean_cum_regret,std_cum_regret\n";
    for (std::size_t i = 0; i < agg.mean_series.size(); ++i) {
      csv << (static_cast<std::int64_t>(i + 1) * agg.stride) << ','
          << format_double(agg.mean_series[i]) << ',' << format_double(agg.std_series[i])
          << '\n';
    }
  }

  json summary;
  summary["a_star"] = std::vector<int>(agg.matching.a_star.data(),
                                       agg.matching.a_star.data() + agg.matching.a_star.size());
  summary["J1"] = agg.matching.J1;
  if (std::isfinite(agg.matching.J2)) {
    summary["J2"] = agg.matching.J2;
    summary["Delta"] = agg.matching.Delta;
  } else {
    summary["J2"] = nullptr;
    summary["Delta"] = nullptr;
  }
  summary["base_seed"] = spec.system.base_seed;
  summary["replications"] = agg.replications;
  summary["seed_first"] = spec.system.base_seed + 1;
  summary["seed_last"] = spec.system.base_seed + agg.replications;
  summary["epochs"] = spec.system.epochs;
  summary["stride"] = agg.stride;
  summary["exploration_success_rate"] = agg.exploration_success_rate;
  summary["matching_success_rate"] = agg.matching_success_rate;
  summary["W_mean"] = {{"exploration", agg.mean_W[0]},
                       {"matching", agg.mean_W[1]},
                       {"exploitation", agg.mean_W[2]}};
  summary["comm_bits"] = {{"per_player_exploration", agg.comm_bits_exploration},
                          {"per_player_matching", agg.comm_bits_matching},
                          {"per_player_total",
                           agg.comm_bits_exploration + agg.comm_bits_matching},
                          {"expected_total", agg.comm_budget_expected},
                          {"law_holds", agg.comm_budget_law_holds}};
  summary["total_steps"] = {{"min", agg.min_steps}, {"max", agg.max_steps}};
  summary["final_cum_regret"] = {{"mean", agg.final_cum_regret_mean},
                                 {"std", agg.final_cum_regret_std}};
  summary["wall_clock_seconds"] = agg.wall_seconds;

  std::ofstream out(out_dir / "summary.json");
  out << summary.dump(2) << '\n';

  if (spec.trace && agg.replications == 1 && !agg.runs.empty()) {
    std::ofstream trace(out_dir / "trace.csv");
    trace << "epoch,t,player,action,utility,mood,baseline_action\n";
    for (const auto& row : agg.runs[0].trace) {
      trace << row.epoch << ',' << row.t << ',' << row.player << ',' << row.action << ','
            << format_double(row.utility) << ','
            << (row.mood == Mood::Content ? 'C' : 'D') << ',' << row.baseline_action
            << '\n';
    }
  }
}

}  // namespace mpmab
