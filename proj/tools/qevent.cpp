// Experiment runner: every protocol, checker, and counterexample behind one
// binary with reproducible seeds and machine-readable JSON output.
//
// Exit codes: 0 success, 1 a reported check failed, 2 usage or config error.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qevent/bounds.hpp"
#include "qevent/counterexample.hpp"
#include "qevent/parallel.hpp"
#include "qevent/protocols.hpp"
#include "qevent/serialize.hpp"

namespace {

using qevent::Json;

struct InstanceOpts {
  std::string path;
  std::string inline_json;
  std::string gen_kind;  // case-one | case-two | random-projective
  int dim = 4;
  int m = 6;
  double eps = 0.1;
  double beta = 0.5;
  double delta = 0.05;
  std::uint64_t gen_seed = 1;
};

void add_instance_options(CLI::App* cmd, InstanceOpts& opts) {
  auto* file = cmd->add_option("--instance", opts.path,
                               "instance JSON file (see gen-instance)");
  auto* inline_opt = cmd->add_option("--instance-json", opts.inline_json,
                                     "instance JSON given inline");
  auto* gen = cmd->add_option("--gen", opts.gen_kind,
                              "generate an instance in place")
                  ->check(CLI::IsMember({"case-one", "case-two",
                                         "random-projective"}));
  file->excludes(inline_opt)->excludes(gen);
  inline_opt->excludes(gen);
  cmd->add_option("--dim", opts.dim, "generated instance dimension");
  cmd->add_option("--m", opts.m, "generated ensemble size");
  cmd->add_option("--eps", opts.eps, "case-one eps");
  cmd->add_option("--beta", opts.beta, "case-one distractor weight");
  cmd->add_option("--delta", opts.delta, "case-two total weight");
  cmd->add_option("--gen-seed", opts.gen_seed, "generator seed");
}

qevent::OrInstance make_random_projective_instance(const InstanceOpts& opts) {
  qevent::SplitRng rng(opts.gen_seed);
  std::vector<qevent::TwoOutcomeMeasurement> ms;
  for (int i = 0; i < opts.m; ++i) {
    const Eigen::Index rank =
        1 + static_cast<Eigen::Index>(rng.pick(
                static_cast<std::size_t>(opts.dim - 1)));
    ms.emplace_back(qevent::random_projector(opts.dim, rank, rng));
  }
  qevent::DensityMatrix rho = qevent::random_state(opts.dim, rng);
  return qevent::OrInstance(qevent::MeasurementEnsemble(std::move(ms)),
                            std::move(rho), qevent::CaseTag::Unknown,
                            /*eps=*/0.5, /*delta=*/1.0);
}

qevent::OrInstance generate_instance(const InstanceOpts& opts) {
  if (opts.gen_kind == "case-one") {
    return qevent::make_case_one_instance(opts.dim, opts.m, opts.eps,
                                          opts.beta, opts.gen_seed);
  }
  if (opts.gen_kind == "case-two") {
    return qevent::make_case_two_instance(opts.dim, opts.m, opts.delta,
                                          opts.gen_seed);
  }
  return make_random_projective_instance(opts);
}

qevent::OrInstance resolve_instance(const InstanceOpts& opts) {
  if (!opts.path.empty()) {
    return qevent::or_instance_from_json(qevent::load_json_file(opts.path));
  }
  if (!opts.inline_json.empty()) {
    return qevent::or_instance_from_json(Json::parse(opts.inline_json));
  }
  if (!opts.gen_kind.empty()) {
    return generate_instance(opts);
  }
  throw std::runtime_error(
      "no instance source: give --instance, --instance-json, or --gen");
}

void emit(const Json& result, const std::string& output) {
  const std::string text = result.dump(2) + "\n";
  if (output.empty()) {
    std::cout << text;
  } else {
    qevent::write_text_file(output, text);
  }
}

int finish(const Json& result, const std::string& output) {
  emit(result, output);
  return result.value("pass", true) ? 0 : 1;
}

Json bounds_json(const qevent::TheoremBounds& bounds) {
  return Json{{"lower", bounds.lower}, {"upper", bounds.upper}};
}

// Accept-probability curves for plotting: k, B(k), and A(k) when the
// enumeration stays under the cap.
std::string accept_curve_csv(const qevent::OrInstance& inst, int rounds) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "k,blended_accept,random_accept\n";
  qevent::BlendedSpectral spectral(inst.state(), inst.ensemble());
  const bool projective = inst.ensemble().all_projective();
  for (int k = 0; k <= rounds; ++k) {
    csv << k << "," << spectral.b_accept(k) << ",";
    if (projective) {
      try {
        csv << qevent::random_exact(inst.state(), inst.ensemble(), k)
                   .accept_prob;
      } catch (const std::length_error&) {
        // out of enumeration range; leave the field empty
      }
    }
    csv << "\n";
  }
  return csv.str();
}

// Collects per-shot trajectories when a dump is requested; the aggregate is
// derived from the same seed-per-shot streams either way.
std::vector<qevent::TrajectoryRecord> collect_trajectories(
    const qevent::OrInstance& inst, bool blended,
    const qevent::EngineConfig& config, int rounds) {
  std::optional<qevent::BlendedMeasurement> instrument;
  if (blended) instrument.emplace(inst.ensemble());
  std::vector<qevent::TrajectoryRecord> records(
      static_cast<std::size_t>(config.shots),
      qevent::TrajectoryRecord{.outcomes = {},
                               .first_accept_round = std::nullopt,
                               .first_accept_index = std::nullopt,
                               .final_state = inst.state()});
  qevent::parallel_for(config.shots, config.threads, [&](std::int64_t shot) {
    qevent::SplitRng rng = qevent::SplitRng::for_stream(
        config.rng_seed, static_cast<std::uint64_t>(shot));
    records[static_cast<std::size_t>(shot)] =
        blended ? qevent::sample_blended_trajectory(
                      inst.state(), *instrument, rounds, config.halt_on_accept,
                      rng)
                : qevent::sample_random_trajectory(
                      inst.state(), inst.ensemble(), rounds,
                      config.halt_on_accept, rng);
  });
  return records;
}

int cmd_or(const std::string& name, const InstanceOpts& inst_opts,
           const qevent::EngineConfig& config, int rounds,
           const std::string& output, const std::string& csv_path,
           const std::string& trajectories_path) {
  const qevent::OrInstance inst = resolve_instance(inst_opts);
  const std::optional<int> r =
      rounds > 0 ? std::optional<int>(rounds) : std::nullopt;
  const bool blended = name == "or-blended";
  const qevent::OrAggregate agg =
      blended ? qevent::run_or_blended(inst, config, r)
              : qevent::run_or_random(inst, config, r);
  const int effective_rounds =
      r.value_or(static_cast<int>(inst.ensemble().size()));
  if (!trajectories_path.empty()) {
    std::ostringstream lines;
    const auto records =
        collect_trajectories(inst, blended, config, effective_rounds);
    for (const auto& record : records) {
      lines << qevent::trajectory_to_json(record).dump() << "\n";
    }
    qevent::write_text_file(trajectories_path, lines.str());
  }

  Json result;
  result["command"] = name;
  result["seed"] = config.rng_seed;
  result["shots"] = agg.shots;
  result["rounds"] = effective_rounds;
  result["instance_hash"] = qevent::json_hash_hex(or_instance_to_json(inst));
  result["case"] = qevent::case_tag_name(inst.tag());
  result["p_down"] = inst.p_down();
  result["p_up"] = inst.p_up();
  result["accept_rate"] = agg.accept_rate;
  result["halfwidth99"] = agg.halfwidth99;
  if (std::isfinite(agg.exact_accept)) {
    result["exact_accept"] = agg.exact_accept;
  }
  result["theorem_bounds"] = bounds_json(agg.bounds);
  const bool sampler_consistent =
      !std::isfinite(agg.exact_accept) ||
      std::abs(agg.accept_rate - agg.exact_accept) <= agg.halfwidth99;
  result["sampler_consistent"] = sampler_consistent;
  result["bounds_hold"] = agg.bounds_hold;
  result["pass"] = agg.bounds_hold && sampler_consistent;
  if (!csv_path.empty()) {
    qevent::write_text_file(csv_path, accept_curve_csv(inst, effective_rounds));
  }
  return finish(result, output);
}

int cmd_event_find(const InstanceOpts& inst_opts, const std::string& mode_name,
                   const qevent::EngineConfig& config, int rounds,
                   const std::string& output, const std::string& csv_path) {
  const qevent::OrInstance inst = resolve_instance(inst_opts);
  const qevent::SamplingMode mode = (mode_name == "random")
                                        ? qevent::SamplingMode::Random
                                        : qevent::SamplingMode::Blended;
  const std::optional<int> r =
      rounds > 0 ? std::optional<int>(rounds) : std::nullopt;
  const auto shots =
      qevent::run_event_finding_detailed(inst, mode, config, r, !csv_path.empty());
  const auto& agg = shots.aggregate;

  Json result;
  result["command"] = "event-find";
  result["mode"] = mode_name;
  result["seed"] = config.rng_seed;
  result["shots"] = agg.shots;
  result["instance_hash"] = qevent::json_hash_hex(or_instance_to_json(inst));
  result["case"] = qevent::case_tag_name(inst.tag());
  result["eps"] = inst.eps();
  result["beta"] = agg.beta;
  result["accept_rate"] = agg.accept_rate;
  result["good_rate"] = agg.good_rate;
  result["halfwidth99"] = agg.halfwidth99;
  result["theorem_bounds"] =
      Json{{"good_rate_lower", agg.theorem_lower},
           {"case_two_accept_upper",
            mode == qevent::SamplingMode::Blended ? inst.delta()
                                                  : 2.0 * inst.delta()}};
  result["pass"] = agg.bound_holds;
  if (!csv_path.empty()) {
    std::ostringstream csv;
    csv << "shot,accepted,first_index,good\n";
    for (std::size_t i = 0; i < shots.per_shot.size(); ++i) {
      const auto& s = shots.per_shot[i];
      csv << i << "," << (s.accepted ? 1 : 0) << ",";
      if (s.first_index) csv << *s.first_index;
      csv << ",";
      if (s.good) csv << (*s.good ? 1 : 0);
      csv << "\n";
    }
    qevent::write_text_file(csv_path, csv.str());
  }
  return finish(result, output);
}

int cmd_mean_estimate(const InstanceOpts& inst_opts, int t, int copies,
                      const qevent::EngineConfig& config,
                      const std::string& output, const std::string& csv_path) {
  const qevent::OrInstance inst = resolve_instance(inst_opts);
  const double truth = std::real(
      (inst.ensemble().mean_operator() * inst.state().matrix()).trace());

  std::vector<double> estimates(static_cast<std::size_t>(config.shots));
  qevent::parallel_for(config.shots, config.threads, [&](std::int64_t shot) {
    qevent::SplitRng rng = qevent::SplitRng::for_stream(
        config.rng_seed, static_cast<std::uint64_t>(shot));
    estimates[static_cast<std::size_t>(shot)] =
        qevent::run_mean_estimation(inst.state(), inst.ensemble(), t, copies,
                                    rng)
            .estimate;
  });
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var = estimates.size() > 1
            ? var / static_cast<double>(estimates.size() - 1)
            : 0.0;
  const double stderr_mean =
      std::sqrt(var / static_cast<double>(estimates.size()));

  Json result;
  result["command"] = "mean-estimate";
  result["seed"] = config.rng_seed;
  result["shots"] = config.shots;
  result["t"] = t;
  result["copies"] = copies;
  result["instance_hash"] = qevent::json_hash_hex(or_instance_to_json(inst));
  result["true_mean"] = truth;
  result["mean_estimate"] = mean;
  result["stderr"] = stderr_mean;
  result["sample_variance"] = var;
  if (inst.state().is_pure()) {
    const auto pred =
        qevent::mean_estimation_variance(inst.state(), inst.ensemble(), t);
    result["predicted_variance_single_copy"] = pred.total;
    result["predicted_variance_estimator"] =
        pred.total / static_cast<double>(copies);
    result["sigma_sq_residual"] = pred.sigma_sq;
    result["theorem_bounds"] = Json{{"sigma_sq_upper", pred.sigma_sq_bound}};
  }
  const bool unbiased = config.shots < 2 ||
                        std::abs(mean - truth) <= 4.0 * stderr_mean + 1e-12;
  result["unbiased_within_4se"] = unbiased;
  result["pass"] = unbiased;
  if (!csv_path.empty()) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "shot,estimate\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      csv << i << "," << estimates[i] << "\n";
    }
    qevent::write_text_file(csv_path, csv.str());
  }
  return finish(result, output);
}

int cmd_verify_bounds(const qevent::SuiteProfile& profile, int threads,
                      const std::string& output, const std::string& jsonl) {
  const qevent::SuiteResult result =
      qevent::random_instance_suite(profile, threads);
  if (!jsonl.empty()) {
    std::ostringstream lines;
    for (const auto& report : result.reports) {
      lines << qevent::check_report_to_json(report).dump() << "\n";
    }
    qevent::write_text_file(jsonl, lines.str());
  }
  Json summary;
  summary["command"] = "verify-bounds";
  summary["seed"] = profile.seed;
  summary["profile"] = Json{{"d_min", profile.d_min}, {"d_max", profile.d_max},
                            {"m_min", profile.m_min}, {"m_max", profile.m_max},
                            {"k_min", profile.k_min}, {"k_max", profile.k_max},
                            {"count", profile.count}};
  summary["total"] = result.summary.total;
  summary["passed"] = result.summary.passed;
  summary["failed"] = result.summary.failed;
  summary["tight"] = result.summary.tight;
  Json failures = Json::array();
  for (const auto& report : result.reports) {
    if (!report.pass) failures.push_back(qevent::check_report_to_json(report));
  }
  if (!failures.empty()) summary["failures"] = std::move(failures);
  summary["pass"] = result.summary.failed == 0;
  return finish(summary, output);
}

int cmd_counterexample(const std::string& kind, double eps,
                       std::int64_t copies_a, std::int64_t rounds,
                       const qevent::EngineConfig& config,
                       const std::string& output) {
  const bool blended = kind == "blended";
  const qevent::CounterexampleInstance inst =
      blended ? qevent::build_blended_counterexample(eps)
              : qevent::build_random_counterexample(eps, copies_a);
  const qevent::CounterexampleRun run =
      qevent::run_counterexample(inst, rounds, config);
  const qevent::CounterexampleExactRates exact =
      qevent::counterexample_rates_exact(inst, rounds);

  Json result;
  result["command"] = "counterexample";
  result["kind"] = kind;
  result["eps"] = eps;
  result["seed"] = config.rng_seed;
  result["shots"] = run.shots;
  result["rounds"] = run.rounds;
  result["size_a"] = inst.size_a;
  result["size_b"] = inst.size_b;
  result["accept_rate"] = run.accept_rate;
  result["accept_halfwidth99"] = run.accept_halfwidth99;
  result["first_in_b_rate"] = run.first_in_b_rate;
  result["first_in_b_halfwidth99"] = run.first_in_b_halfwidth99;
  result["exact_accept"] = exact.accept;
  result["exact_first_in_b_conditional"] = exact.conditional_b;

  bool pass = std::abs(run.accept_rate - exact.accept) <= run.accept_halfwidth99;
  if (run.accepted > 0) {
    pass = pass && std::abs(run.first_in_b_rate - exact.conditional_b) <=
                       run.first_in_b_halfwidth99;
  }
  if (blended) {
    const double b_weight = std::real(
        (inst.psi.adjoint() * inst.accept_b_op * inst.accept_b_op * inst.psi)(
            0, 0));
    const double k = static_cast<double>(run.rounds);
    const double floor_bound =
        1.0 - std::pow(1.0 - eps * eps * eps / (1.0 + eps), k);
    result["theorem_bounds"] =
        Json{{"accept_lower", floor_bound}, {"b_weight_on_rho", b_weight}};
    pass = pass && exact.accept >= floor_bound - 1e-10 &&
           std::abs(b_weight) <= 1e-12;
  }
  result["pass"] = pass;
  return finish(result, output);
}

int cmd_gen_instance(const InstanceOpts& opts, const std::string& output) {
  const qevent::OrInstance inst = generate_instance(opts);
  Json j = qevent::or_instance_to_json(inst);
  emit(j, output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum event learning simulation and verification runner"};
  app.require_subcommand(1);

  // shared option storage; CLI11 binds per-subcommand copies
  struct OrOpts {
    InstanceOpts inst;
    qevent::EngineConfig config;
    int rounds = 0;
    std::string output, csv, trajectories;
  };

  auto add_engine_options = [](CLI::App* cmd, qevent::EngineConfig& config,
                               std::string& output) {
    cmd->add_option("--seed", config.rng_seed, "RNG seed (recorded in output)");
    cmd->add_option("--shots", config.shots, "number of Monte Carlo shots")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", config.threads,
                    "worker threads (0: QEVENT_THREADS or hardware)");
    cmd->add_option("--output", output, "write result JSON here (default: stdout)");
  };

  OrOpts or_blended_opts, or_random_opts, event_opts, mean_opts;
  std::string event_mode = "blended";
  int mean_t = 10, mean_copies = 1;

  auto* orb = app.add_subcommand("or-blended",
                                 "repeated blended measurements, halting on accept");
  add_instance_options(orb, or_blended_opts.inst);
  add_engine_options(orb, or_blended_opts.config, or_blended_opts.output);
  orb->add_option("--rounds", or_blended_opts.rounds,
                  "override the default m rounds");
  orb->add_option("--csv", or_blended_opts.csv,
                  "write accept-probability curves (k, B(k), A(k)) here");
  orb->add_option("--trajectories", or_blended_opts.trajectories,
                  "dump one trajectory JSON per shot here");

  auto* orr = app.add_subcommand("or-random",
                                 "uniformly random measurements, halting on accept");
  add_instance_options(orr, or_random_opts.inst);
  add_engine_options(orr, or_random_opts.config, or_random_opts.output);
  orr->add_option("--rounds", or_random_opts.rounds,
                  "override the default m rounds");
  orr->add_option("--csv", or_random_opts.csv,
                  "write accept-probability curves (k, B(k), A(k)) here");
  orr->add_option("--trajectories", or_random_opts.trajectories,
                  "dump one trajectory JSON per shot here");

  auto* evf = app.add_subcommand("event-find",
                                 "find a measurement with a large accepting probability");
  add_instance_options(evf, event_opts.inst);
  add_engine_options(evf, event_opts.config, event_opts.output);
  evf->add_option("--mode", event_mode, "blended or random")
      ->check(CLI::IsMember({"blended", "random"}));
  evf->add_option("--rounds", event_opts.rounds, "override the default m rounds");
  evf->add_option("--csv", event_opts.csv, "write per-shot outcomes here");

  auto* mean = app.add_subcommand("mean-estimate",
                                  "estimate the ensemble's mean accepting probability");
  add_instance_options(mean, mean_opts.inst);
  add_engine_options(mean, mean_opts.config, mean_opts.output);
  mean->add_option("--t", mean_t, "measurements per copy")->check(CLI::PositiveNumber);
  mean->add_option("--copies", mean_copies, "copies of the state per shot")
      ->check(CLI::PositiveNumber);
  mean->add_option("--csv", mean_opts.csv, "write per-shot estimates here");

  qevent::SuiteProfile profile;
  int vb_threads = 0;
  std::string vb_output, vb_jsonl, vb_profile_name = "default";
  auto* vb = app.add_subcommand("verify-bounds",
                                "exact inequality sweep over random instances");
  vb->add_option("--profile", vb_profile_name, "default or smoke")
      ->check(CLI::IsMember({"default", "smoke"}));
  vb->add_option("--count", profile.count, "instances per bound id");
  vb->add_option("--d-max", profile.d_max, "max dimension");
  vb->add_option("--m-max", profile.m_max, "max ensemble size");
  vb->add_option("--k-max", profile.k_max, "max round count");
  vb->add_option("--seed", profile.seed, "suite seed");
  vb->add_option("--threads", vb_threads, "worker threads");
  vb->add_option("--output", vb_output, "summary JSON path (default: stdout)");
  vb->add_option("--jsonl", vb_jsonl, "write one CheckReport JSON per line here");

  std::string ce_kind = "blended", ce_output;
  double ce_eps = 0.1;
  std::int64_t ce_copies_a = 0, ce_rounds = 0;
  qevent::EngineConfig ce_config;
  ce_config.shots = 10000;
  auto* ce = app.add_subcommand("counterexample",
                                "subset union bound counterexample experiments");
  ce->add_option("--kind", ce_kind, "blended or random")
      ->check(CLI::IsMember({"blended", "random"}));
  ce->add_option("--eps", ce_eps, "construction parameter in (0, 1/2)");
  ce->add_option("--copies-a", ce_copies_a,
                 "random kind: copies of M_A (0 -> 20 eps^-3)");
  ce->add_option("--rounds", ce_rounds, "rounds per shot (0 -> |A| + |B|)");
  add_engine_options(ce, ce_config, ce_output);

  InstanceOpts gen_opts;
  std::string gen_output;
  auto* gen = app.add_subcommand("gen-instance",
                                 "emit an instance JSON for the other subcommands");
  gen->add_option("--kind", gen_opts.gen_kind, "case-one, case-two, random-projective")
      ->required()
      ->check(CLI::IsMember({"case-one", "case-two", "random-projective"}));
  gen->add_option("--dim", gen_opts.dim, "dimension");
  gen->add_option("--m", gen_opts.m, "ensemble size");
  gen->add_option("--eps", gen_opts.eps, "case-one eps");
  gen->add_option("--beta", gen_opts.beta, "case-one distractor weight");
  gen->add_option("--delta", gen_opts.delta, "case-two total weight");
  gen->add_option("--seed", gen_opts.gen_seed, "generator seed");
  gen->add_option("--output", gen_output, "write instance JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (orb->parsed()) {
      return cmd_or("or-blended", or_blended_opts.inst, or_blended_opts.config,
                    or_blended_opts.rounds, or_blended_opts.output,
                    or_blended_opts.csv, or_blended_opts.trajectories);
    }
    if (orr->parsed()) {
      return cmd_or("or-random", or_random_opts.inst, or_random_opts.config,
                    or_random_opts.rounds, or_random_opts.output,
                    or_random_opts.csv, or_random_opts.trajectories);
    }
    if (evf->parsed()) {
      return cmd_event_find(event_opts.inst, event_mode, event_opts.config,
                            event_opts.rounds, event_opts.output,
                            event_opts.csv);
    }
    if (mean->parsed()) {
      return cmd_mean_estimate(mean_opts.inst, mean_t, mean_copies,
                               mean_opts.config, mean_opts.output,
                               mean_opts.csv);
    }
    if (vb->parsed()) {
      if (vb_profile_name == "smoke") {
        profile.count = std::min(profile.count, 5);
      }
      return cmd_verify_bounds(profile, vb_threads, vb_output, vb_jsonl);
    }
    if (ce->parsed()) {
      return cmd_counterexample(ce_kind, ce_eps, ce_copies_a, ce_rounds,
                                ce_config, ce_output);
    }
    if (gen->parsed()) {
      return cmd_gen_instance(gen_opts, gen_output);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
