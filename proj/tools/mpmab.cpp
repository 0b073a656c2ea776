#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpmab/errors.hpp"
#include "mpmab/harness.hpp"
#include "mpmab/oracle.hpp"

namespace {

using mpmab::Aggregate;
using mpmab::ExperimentSpec;
using nlohmann::json;

void print_matching(const mpmab::OptimalMatching& om) {
  std::cout << "a_star = [";
  for (int k = 0; k < om.a_star.size(); ++k)
    std::cout << (k ? "," : "") << om.a_star(k);
  std::cout << "], J1 = " << om.J1 << ", J2 = " << om.J2 << ", Delta = " << om.Delta
            << '\n';
}

int cmd_validate(const std::string& spec_path) {
  const ExperimentSpec spec = mpmab::parse_spec(spec_path);
  std::cout << "spec ok: K=" << spec.system.K << " M=" << spec.system.M
            << " epochs=" << spec.system.epochs << " replications=" << spec.replications
            << '\n';
  print_matching(mpmab::optimal_matching(spec.system.means));
  return 0;
}

int cmd_run(const std::string& spec_path, const std::string& out_dir,
            std::int64_t horizon) {
  ExperimentSpec spec = mpmab::parse_spec(spec_path);
  spec.replications = 1;
  Aggregate agg;
  agg.matching = mpmab::optimal_matching(spec.system.means);
  agg.stride = spec.stride;
  agg.replications = 1;
  agg.runs.push_back(mpmab::run_single(
      spec, spec.system.base_seed + 1,
      horizon > 0 ? std::optional<std::int64_t>(horizon) : std::nullopt));
  const mpmab::RunResult& run = agg.runs[0];
  agg.mean_series = run.series;
  agg.std_series.assign(run.series.size(), 0.0);
  agg.exploration_success_rate.assign(run.exploration_success.begin(),
                                      run.exploration_success.end());
  agg.matching_success_rate.assign(run.matching_success.begin(),
                                   run.matching_success.end());
  for (int p = 0; p < 3; ++p) agg.mean_W[p] = static_cast<double>(run.W[p]);
  agg.final_cum_regret_mean = run.cumulative_regret;
  agg.min_steps = agg.max_steps = run.total_steps;
  agg.comm_bits_exploration =
      run.comm_bits_exploration.empty() ? 0 : run.comm_bits_exploration[0];
  agg.comm_bits_matching = run.comm_bits_matching.empty() ? 0 : run.comm_bits_matching[0];
  std::int64_t expected = 0;
  for (int epoch = 1; epoch <= spec.system.epochs; ++epoch)
    expected += spec.system.M + mpmab::match_params(spec.system, epoch).tau;
  agg.comm_budget_expected = expected;
  agg.comm_budget_law_holds = horizon <= 0 &&
      agg.comm_bits_exploration + agg.comm_bits_matching == expected;
  agg.wall_seconds = run.wall_seconds;
  mpmab::write_outputs(out_dir, spec, agg);
  std::cout << "steps=" << run.total_steps << " cum_regret=" << run.cumulative_regret
            << " -> " << out_dir << '\n';
  return 0;
}

int cmd_replicate(const std::string& spec_path, const std::string& out_dir, int workers) {
  const ExperimentSpec spec = mpmab::parse_spec(spec_path);
  const Aggregate agg = mpmab::run_replications(spec, workers);
  mpmab::write_outputs(out_dir, spec, agg);
  std::cout << "replications=" << agg.replications
            << " mean_final_regret=" << agg.final_cum_regret_mean << " -> " << out_dir
            << '\n';
  return 0;
}

int cmd_figure1(const std::string& scale, const std::string& out_dir, int workers) {
  const auto which =
      scale == "paper" ? mpmab::Figure1Scale::Paper : mpmab::Figure1Scale::Reduced;
  const Aggregate agg = mpmab::reproduce_figure1(which, out_dir, workers);
  std::cout << "scale=" << scale << " replications=" << agg.replications
            << " mean_final_regret=" << agg.final_cum_regret_mean << " -> " << out_dir
            << '\n';
  return 0;
}

int cmd_oracle_check(const std::string& out_path, double adversary_p) {
  namespace oc = mpmab::oracle;
  const oc::Fixture fixture = oc::two_player_two_arm_fixture();
  const int M = 2;
  mpmab::AdversarySpec none;

  json report;
  report["fixture"] = {{"means", std::vector<double>(fixture.means.data(),
                                                     fixture.means.data() + 4)},
                       {"kappa", fixture.kappa},
                       {"beta", fixture.beta}};

  const oc::ChainModel p0 =
      oc::build_chain(fixture.means, M, 0.0, fixture.kappa, fixture.beta, none);
  const oc::ClassificationReport cls = oc::classify_p0(p0);
  report["classification"] = {{"all_content_absorbing", cls.all_content_absorbing},
                              {"all_discontent_closed", cls.all_discontent_closed},
                              {"mixed_transient", cls.mixed_transient},
                              {"absorbing_states", cls.absorbing_states.size()},
                              {"closed_classes", cls.closed_classes.size()},
                              {"transient_states", cls.transient_states.size()}};

  const oc::JointState optimal = fixture.optimal_state();
  json mass = json::object();
  for (const double eps : {0.1, 0.03, 0.01}) {
    const oc::ChainModel chain =
        oc::build_chain(fixture.means, M, eps, fixture.kappa, fixture.beta, none);
    const mpmab::Vector pi = oc::stationary_distribution(chain.P);
    char key[16];
    std::snprintf(key, sizeof(key), "%g", eps);
    mass[key] = pi(chain.index_of(optimal));
  }
  report["stationary_mass_on_optimal"] = mass;

  const double grid[] = {0.1, 0.05, 0.02, 0.01};
  const double enter = oc::resistance_probe(
      fixture.means, M, fixture.kappa, fixture.beta, none,
      mpmab::SyncSnapshot::PostUpdate, grid, fixture.discontent_state(), optimal);
  const double collapse = oc::resistance_probe(
      fixture.means, M, fixture.kappa, fixture.beta, none,
      mpmab::SyncSnapshot::PostUpdate, grid, optimal, fixture.collapse_state());
  report["resistance_slopes"] = {
      {"enter_optimal", enter},
      {"enter_optimal_expected", (1.0 - 0.9) + (1.0 - 0.8)},
      {"collapse", collapse},
      {"collapse_expected", fixture.kappa}};

  mpmab::AdversarySpec attacked;
  attacked.kind = mpmab::AdversarySpec::Kind::IidSingleArm;
  attacked.p = adversary_p;
  attacked.active_phases = {mpmab::Phase::Matching};
  bool argmax_is_optimal = true;
  for (const double eps : {0.1, 0.03, 0.01}) {
    const oc::ChainModel chain =
        oc::build_chain(fixture.means, M, eps, fixture.kappa, fixture.beta, attacked);
    const mpmab::Vector pi = oc::stationary_distribution(chain.P);
    int argmax = 0;
    pi.maxCoeff(&argmax);
    argmax_is_optimal = argmax_is_optimal && argmax == chain.index_of(optimal);
  }
  report["adversary_variant"] = {{"p", adversary_p},
                                 {"argmax_is_optimal", argmax_is_optimal}};

  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    out << text;
    std::cout << "oracle report -> " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-player bandit simulator with attack-robust matching"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = "out", scale = "reduced", oracle_out;
  std::int64_t horizon = 0;
  int workers = 0;
  double adversary_p = 0.3;

  auto* validate = app.add_subcommand("validate", "Parse and validate a spec file");
  validate->add_option("spec", spec_path, "JSON spec file")->required();

  auto* run = app.add_subcommand("run", "Single run; writes regret.csv and summary.json");
  run->add_option("spec", spec_path, "JSON spec file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--horizon", horizon, "Stop after this many steps (mid-epoch allowed)");

  auto* replicate = app.add_subcommand("replicate", "Monte-Carlo replications");
  replicate->add_option("spec", spec_path, "JSON spec file")->required();
  replicate->add_option("--out", out_dir, "Output directory");
  replicate->add_option("--workers", workers, "Worker threads (default: all cores)");

  auto* figure1 = app.add_subcommand("figure1", "Canonical 3x3 experiment");
  figure1->add_option("--scale", scale, "paper or reduced")
      ->check(CLI::IsMember({"paper", "reduced"}));
  figure1->add_option("--out", out_dir, "Output directory");
  figure1->add_option("--workers", workers, "Worker threads");

  auto* oracle_check = app.add_subcommand("oracle-check",
                                          "Exact chain analysis of the 2x2 fixture");
  oracle_check->add_option("--out", oracle_out, "Write the JSON report here");
  oracle_check->add_option("--adversary-p", adversary_p,
                           "Attack probability for the perturbed variant");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(spec_path);
    if (run->parsed()) return cmd_run(spec_path, out_dir, horizon);
    if (replicate->parsed()) return cmd_replicate(spec_path, out_dir, workers);
    if (figure1->parsed()) return cmd_figure1(scale, out_dir, workers);
    if (oracle_check->parsed()) return cmd_oracle_check(oracle_out, adversary_p);
  } catch (const mpmab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
