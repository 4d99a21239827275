#include "qevent/protocols.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qevent/parallel.hpp"

namespace qevent {

namespace {

constexpr double kTagSlack = 1e-12;

double real_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return std::real(a.cwiseProduct(b.transpose()).sum());
}

int default_rounds(const OrInstance& inst, std::optional<int> rounds) {
  const int r = rounds.value_or(static_cast<int>(inst.ensemble().size()));
  if (r < 1) throw std::invalid_argument("round count must be >= 1");
  return r;
}

}  // namespace

OrInstance::OrInstance(MeasurementEnsemble ens, DensityMatrix rho, CaseTag tag,
                       double eps, double delta)
    : ens_(std::move(ens)),
      rho_(std::move(rho)),
      tag_(tag),
      eps_(eps),
      delta_(delta) {
  if (ens_.dim() != rho_.dim()) {
    throw std::invalid_argument("OrInstance: dimension mismatch");
  }
  if (eps_ < 0.0 || eps_ > 1.0 || delta_ < 0.0 || delta_ > 1.0) {
    throw std::invalid_argument("OrInstance: eps and delta must be in [0, 1]");
  }
  weights_.reserve(ens_.size());
  // the good threshold carries fp slack so planting exactly at 1 - eps works
  const double good_floor = 1.0 - eps_ - 1e-9;
  for (std::size_t i = 0; i < ens_.size(); ++i) {
    const double w = ens_[i].accept_probability(rho_);
    weights_.push_back(w);
    p_down_ = std::max(p_down_, w);
    p_up_ += w;
    if (w >= good_floor) {
      good_indices_.push_back(static_cast<int>(i));
    } else {
      beta_ += w;
    }
  }
  if (tag_ == CaseTag::One && !(p_down_ >= 1.0 - eps_ - kTagSlack)) {
    throw std::invalid_argument(
        "OrInstance: case-one tag requires max_i Tr[M_i rho] >= 1 - eps");
  }
  if (tag_ == CaseTag::Two && !(p_up_ <= delta_ + kTagSlack)) {
    throw std::invalid_argument(
        "OrInstance: case-two tag requires sum_i Tr[M_i rho] <= delta");
  }
}

bool OrInstance::is_good_index(int idx) const {
  return weights_[static_cast<std::size_t>(idx)] >= 1.0 - eps_ - 1e-9;
}

TheoremBounds or_blended_bounds(const OrInstance& inst) {
  return TheoremBounds{inst.p_down() * inst.p_down() / 4.0,
                       std::min(inst.p_up(), 1.0)};
}

TheoremBounds or_random_bounds(const OrInstance& inst) {
  const double golden = (3.0 - std::sqrt(5.0)) / 4.0;
  return TheoremBounds{
      std::min(inst.p_down() * inst.p_down() / 4.5, golden),
      std::min(2.0 * inst.p_up(), 1.0)};
}

double event_finding_blended_lower(double eps, double beta) {
  return std::pow(1.0 - eps, 3) / (12.0 * (1.0 + beta));
}

double event_finding_random_lower(double eps, double beta) {
  return std::pow(1.0 - eps, 7) / (1296.0 * std::pow(1.0 + beta, 3));
}

OrShotResult run_or_blended_once(const OrInstance& inst, SplitRng& rng,
                                 std::optional<int> rounds) {
  const int r = default_rounds(inst, rounds);
  BlendedMeasurement blended(inst.ensemble());
  TrajectoryRecord record =
      sample_blended_trajectory(inst.state(), blended, r, true, rng);
  return OrShotResult{record.first_accept_round.has_value(), std::move(record)};
}

OrShotResult run_or_random_once(const OrInstance& inst, SplitRng& rng,
                                std::optional<int> rounds) {
  if (!inst.ensemble().all_projective()) {
    throw std::invalid_argument(
        "run_or_random: the random OR guarantee covers projective ensembles "
        "only; use the blended protocol for general measurements");
  }
  const int r = default_rounds(inst, rounds);
  TrajectoryRecord record =
      sample_random_trajectory(inst.state(), inst.ensemble(), r, true, rng);
  return OrShotResult{record.first_accept_round.has_value(), std::move(record)};
}

namespace {

OrAggregate aggregate_or(const OrInstance& inst, const EngineConfig& config,
                         int rounds, SamplingMode mode, double exact_accept,
                         const TheoremBounds& bounds) {
  if (config.shots < 1) {
    throw std::invalid_argument("run_or: shots must be >= 1");
  }
  MonteCarloEstimate mc = monte_carlo_accept(
      inst.state(), inst.ensemble(), rounds, mode, config);
  OrAggregate agg;
  agg.shots = mc.shots;
  agg.accepts = mc.accepts;
  agg.accept_rate = mc.estimate;
  agg.halfwidth99 = mc.halfwidth99;
  agg.exact_accept = exact_accept;
  agg.bounds = bounds;
  const double margin = 1e-9;
  if (std::isfinite(exact_accept)) {
    agg.bounds_hold = exact_accept >= bounds.lower - margin &&
                      exact_accept <= bounds.upper + margin;
  } else {
    agg.bounds_hold = mc.estimate >= bounds.lower - mc.halfwidth99 &&
                      mc.estimate <= bounds.upper + mc.halfwidth99;
  }
  return agg;
}

}  // namespace

OrAggregate run_or_blended(const OrInstance& inst, const EngineConfig& config,
                           std::optional<int> rounds) {
  const int r = default_rounds(inst, rounds);
  const double exact =
      blended_exact(inst.state(), inst.ensemble(), r).accept_prob;
  return aggregate_or(inst, config, r, SamplingMode::Blended, exact,
                      or_blended_bounds(inst));
}

OrAggregate run_or_random(const OrInstance& inst, const EngineConfig& config,
                          std::optional<int> rounds, std::uint64_t cap) {
  if (!inst.ensemble().all_projective()) {
    throw std::invalid_argument(
        "run_or_random: the random OR guarantee covers projective ensembles "
        "only; use the blended protocol for general measurements");
  }
  const int r = default_rounds(inst, rounds);
  double exact = std::numeric_limits<double>::quiet_NaN();
  try {
    exact = random_exact(inst.state(), inst.ensemble(), r, cap).accept_prob;
  } catch (const std::length_error&) {
    // enumeration infeasible; the Monte Carlo estimate stands alone
  }
  return aggregate_or(inst, config, r, SamplingMode::Random, exact,
                      or_random_bounds(inst));
}

EventFindingResult run_event_finding_once(const OrInstance& inst,
                                          SamplingMode mode, SplitRng& rng,
                                          std::optional<int> rounds) {
  OrShotResult shot = (mode == SamplingMode::Blended)
                          ? run_or_blended_once(inst, rng, rounds)
                          : run_or_random_once(inst, rng, rounds);
  EventFindingResult result;
  result.beta = inst.beta();
  result.accepted = shot.accepted;
  if (shot.accepted) {
    const int idx = *shot.trajectory.first_accept_index;
    result.first_index = idx;
    result.good = inst.is_good_index(idx);
  }
  return result;
}

EventFindingAggregate run_event_finding(const OrInstance& inst,
                                        SamplingMode mode,
                                        const EngineConfig& config,
                                        std::optional<int> rounds) {
  return run_event_finding_detailed(inst, mode, config, rounds, false)
      .aggregate;
}

EventFindingShots run_event_finding_detailed(const OrInstance& inst,
                                             SamplingMode mode,
                                             const EngineConfig& config,
                                             std::optional<int> rounds,
                                             bool collect) {
  if (config.shots < 1) {
    throw std::invalid_argument("run_event_finding: shots must be >= 1");
  }
  if (mode == SamplingMode::Random && !inst.ensemble().all_projective()) {
    throw std::invalid_argument(
        "run_event_finding: random mode requires a projective ensemble");
  }
  const int r = default_rounds(inst, rounds);
  std::optional<BlendedMeasurement> blended;
  if (mode == SamplingMode::Blended) blended.emplace(inst.ensemble());
  EventFindingShots out;
  if (collect) {
    out.per_shot.resize(static_cast<std::size_t>(config.shots));
  }
  std::atomic<std::int64_t> accepts{0};
  std::atomic<std::int64_t> good_accepts{0};
  parallel_for(config.shots, config.threads, [&](std::int64_t shot) {
    SplitRng rng = SplitRng::for_stream(config.rng_seed,
                                        static_cast<std::uint64_t>(shot));
    TrajectoryRecord record =
        (mode == SamplingMode::Blended)
            ? sample_blended_trajectory(inst.state(), *blended, r, true, rng)
            : sample_random_trajectory(inst.state(), inst.ensemble(), r, true,
                                       rng);
    EventFindingResult result;
    result.beta = inst.beta();
    if (record.first_accept_round.has_value()) {
      result.accepted = true;
      const int idx = *record.first_accept_index;
      result.first_index = idx;
      result.good = inst.is_good_index(idx);
      accepts.fetch_add(1, std::memory_order_relaxed);
      if (*result.good) good_accepts.fetch_add(1, std::memory_order_relaxed);
    }
    if (collect) out.per_shot[static_cast<std::size_t>(shot)] = result;
  });
  EventFindingAggregate& agg = out.aggregate;
  agg.shots = config.shots;
  agg.accepts = accepts.load();
  agg.good_accepts = good_accepts.load();
  agg.accept_rate =
      static_cast<double>(agg.accepts) / static_cast<double>(agg.shots);
  agg.good_rate =
      static_cast<double>(agg.good_accepts) / static_cast<double>(agg.shots);
  agg.halfwidth99 = hoeffding_halfwidth99(agg.shots);
  agg.beta = inst.beta();
  agg.theorem_lower = (mode == SamplingMode::Blended)
                          ? event_finding_blended_lower(inst.eps(), agg.beta)
                          : event_finding_random_lower(inst.eps(), agg.beta);
  if (inst.tag() == CaseTag::One) {
    agg.bound_holds = agg.good_rate >= agg.theorem_lower - agg.halfwidth99;
  } else if (inst.tag() == CaseTag::Two) {
    const double cap = (mode == SamplingMode::Blended) ? inst.delta()
                                                       : 2.0 * inst.delta();
    agg.bound_holds = agg.accept_rate <= cap + agg.halfwidth99;
  }
  return out;
}

double exact_good_first_accept_blended(const OrInstance& inst, int rounds) {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  const Eigen::Index d = inst.state().dim();
  ComplexMatrix good_sum = ComplexMatrix::Zero(d, d);
  for (int idx : inst.good_indices()) {
    good_sum += inst.ensemble()[static_cast<std::size_t>(idx)].op().matrix();
  }
  good_sum /= static_cast<double>(inst.ensemble().size());
  BlendedSpectral spectral(inst.state(), inst.ensemble());
  double total = 0.0;
  for (int j = 0; j < rounds; ++j) {
    const ComplexMatrix e0j = spectral.e0_power(static_cast<double>(j));
    total += real_trace_product(good_sum, e0j * inst.state().matrix() * e0j);
  }
  return total;
}

double exact_good_first_accept_random(const OrInstance& inst, int rounds,
                                      std::uint64_t cap) {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (!inst.ensemble().all_projective()) {
    throw std::invalid_argument(
        "exact_good_first_accept_random: projective ensembles only");
  }
  const Eigen::Index d = inst.state().dim();
  ComplexMatrix good_sum = ComplexMatrix::Zero(d, d);
  for (int idx : inst.good_indices()) {
    good_sum += inst.ensemble()[static_cast<std::size_t>(idx)].op().matrix();
  }
  good_sum /= static_cast<double>(inst.ensemble().size());
  const std::vector<ComplexMatrix> rejects = complement_operators(inst.ensemble());
  const double m = static_cast<double>(inst.ensemble().size());
  double total = 0.0;
  for (int j = 0; j < rounds; ++j) {
    ProductEnumerator products(rejects, j, cap);
    double layer = 0.0;
    while (products.next()) {
      const ComplexMatrix& t = products.product();
      layer += real_trace_product(good_sum,
                                  t * inst.state().matrix() * t.adjoint());
    }
    total += layer / std::pow(m, j);
  }
  return total;
}

MeanEstimationReport run_mean_estimation(const DensityMatrix& rho,
                                         const MeasurementEnsemble& ens, int t,
                                         int copies, SplitRng& rng) {
  if (t < 1 || copies < 1) {
    throw std::invalid_argument("run_mean_estimation: t and copies must be >= 1");
  }
  if (rho.dim() != ens.dim()) {
    throw std::invalid_argument("run_mean_estimation: dimension mismatch");
  }
  const PsdOperator mean_op(ens.mean_operator(), true);
  const ComplexMatrix accept = mean_op.sqrt().matrix();
  const ComplexMatrix reject = mean_op.complement().sqrt().matrix();
  const ComplexMatrix mean = mean_op.matrix();

  MeanEstimationReport report;
  report.t = t;
  report.copies = copies;
  report.per_copy_counts.reserve(static_cast<std::size_t>(copies));
  std::int64_t total_accepts = 0;
  for (int j = 0; j < copies; ++j) {
    ComplexMatrix state = rho.matrix();
    int count = 0;
    for (int step = 0; step < t; ++step) {
      const double p = std::clamp(real_trace_product(mean, state), 0.0, 1.0);
      const bool accepted = rng.bernoulli(p);
      const ComplexMatrix& kraus = accepted ? accept : reject;
      ComplexMatrix updated = kraus * state * kraus;
      state = updated / std::max(std::real(updated.trace()), 1e-300);
      if (accepted) ++count;
    }
    report.per_copy_counts.push_back(count);
    total_accepts += count;
  }
  report.estimate = static_cast<double>(total_accepts) /
                    (static_cast<double>(t) * static_cast<double>(copies));
  if (rho.is_pure()) {
    const VariancePrediction pred = mean_estimation_variance(rho, ens, t);
    // Copies are independent, so the estimator variance scales as 1/copies.
    report.predicted_variance = pred.total / static_cast<double>(copies);
    report.sigma_sq_residual = pred.sigma_sq;
  }
  return report;
}

namespace {

// Eigenbasis weights alpha_a^2 of a pure state in the mean-operator basis.
void mean_operator_decomposition(const DensityMatrix& pure_state,
                                 const MeasurementEnsemble& ens,
                                 RealVector& lambdas, RealVector& weights) {
  if (!pure_state.is_pure()) {
    throw std::invalid_argument("mean estimation variance requires a pure state");
  }
  EigenSystem sys = hermitian_eig(ens.mean_operator());
  const ComplexVector psi =
      pure_state.eig().vectors.col(pure_state.dim() - 1);
  lambdas.resize(sys.values.size());
  weights.resize(sys.values.size());
  for (Eigen::Index a = 0; a < sys.values.size(); ++a) {
    lambdas(a) = std::clamp(sys.values(a), 0.0, 1.0);
    const Complex amp = (sys.vectors.col(a).adjoint() * psi)(0, 0);
    weights(a) = std::norm(amp);
  }
}

}  // namespace

VariancePrediction mean_estimation_variance(const DensityMatrix& pure_state,
                                            const MeasurementEnsemble& ens,
                                            int t) {
  if (t < 1) throw std::invalid_argument("mean_estimation_variance: t >= 1");
  RealVector lambdas, weights;
  mean_operator_decomposition(pure_state, ens, lambdas, weights);
  double binomial_part = 0.0;
  double first_moment = 0.0;
  double second_moment = 0.0;
  for (Eigen::Index a = 0; a < lambdas.size(); ++a) {
    binomial_part += weights(a) * lambdas(a) * (1.0 - lambdas(a));
    first_moment += weights(a) * lambdas(a);
    second_moment += weights(a) * lambdas(a) * lambdas(a);
  }
  VariancePrediction pred;
  pred.sigma_sq = second_moment - first_moment * first_moment;
  pred.total = binomial_part / static_cast<double>(t) + pred.sigma_sq;
  pred.sigma_sq_bound =
      0.25 * std::pow(lambdas(lambdas.size() - 1) - lambdas(0), 2);
  return pred;
}

std::vector<double> mean_estimation_count_distribution(
    const DensityMatrix& pure_state, const MeasurementEnsemble& ens, int t) {
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  RealVector lambdas, weights;
  mean_operator_decomposition(pure_state, ens, lambdas, weights);
  std::vector<double> pmf(static_cast<std::size_t>(t) + 1, 0.0);
  // binomial coefficients C(t, x) by running product
  double binom = 1.0;
  for (int x = 0; x <= t; ++x) {
    if (x > 0) binom *= static_cast<double>(t - x + 1) / static_cast<double>(x);
    double acc = 0.0;
    for (Eigen::Index a = 0; a < lambdas.size(); ++a) {
      acc += weights(a) * std::pow(lambdas(a), x) *
             std::pow(1.0 - lambdas(a), t - x);
    }
    pmf[static_cast<std::size_t>(x)] = binom * acc;
  }
  return pmf;
}

std::vector<double> mean_estimation_count_distribution_bruteforce(
    const DensityMatrix& rho, const MeasurementEnsemble& ens, int t) {
  if (t < 1 || t > 20) {
    throw std::invalid_argument("bruteforce distribution: t must be in [1, 20]");
  }
  const PsdOperator mean_op(ens.mean_operator(), true);
  const ComplexMatrix accept = mean_op.sqrt().matrix();
  const ComplexMatrix reject = mean_op.complement().sqrt().matrix();
  std::vector<double> pmf(static_cast<std::size_t>(t) + 1, 0.0);
  const std::uint32_t sequences = 1u << t;
  for (std::uint32_t bits = 0; bits < sequences; ++bits) {
    ComplexMatrix state = rho.matrix();
    int count = 0;
    for (int step = 0; step < t; ++step) {
      const bool accepted = (bits >> step) & 1u;
      const ComplexMatrix& kraus = accepted ? accept : reject;
      state = kraus * state * kraus;
      if (accepted) ++count;
    }
    pmf[static_cast<std::size_t>(count)] +=
        std::max(std::real(state.trace()), 0.0);
  }
  return pmf;
}

namespace {

// Unit vector with a prescribed overlap on psi: sqrt(w) psi + sqrt(1-w) chi,
// chi a random unit vector orthogonal to psi.
ComplexVector planted_direction(const ComplexVector& psi, double w,
                                SplitRng& rng) {
  const Eigen::Index d = psi.size();
  ComplexVector chi(d);
  double norm = 0.0;
  do {
    chi = random_unit_vector(d, rng);
    chi -= (psi.adjoint() * chi)(0, 0) * psi;
    norm = chi.norm();
  } while (norm < 1e-6);
  chi /= norm;
  return std::sqrt(w) * psi + std::sqrt(1.0 - w) * chi;
}

}  // namespace

OrInstance make_case_one_instance(Eigen::Index dim, int m, double eps,
                                  double beta, std::uint64_t seed) {
  if (dim < 2 || m < 1) {
    throw std::invalid_argument("make_case_one_instance: need dim >= 2, m >= 1");
  }
  if (!(eps > 0.0 && eps < 1.0) || beta < 0.0) {
    throw std::invalid_argument("make_case_one_instance: invalid eps or beta");
  }
  if (m == 1 && beta > 0.0) {
    throw std::invalid_argument(
        "make_case_one_instance: beta > 0 needs at least one distractor");
  }
  const double distractor_w = (m > 1) ? beta / static_cast<double>(m - 1) : 0.0;
  if (distractor_w >= 1.0 - eps) {
    throw std::invalid_argument(
        "make_case_one_instance: distractor weight would reach the good "
        "threshold; raise m or lower beta");
  }
  SplitRng rng(seed);
  const ComplexVector psi = random_unit_vector(dim, rng);
  std::vector<TwoOutcomeMeasurement> ms;
  ms.reserve(static_cast<std::size_t>(m));
  ComplexVector target = planted_direction(psi, 1.0 - eps, rng);
  ms.emplace_back(PsdOperator(target * target.adjoint(), true));
  for (int i = 1; i < m; ++i) {
    ComplexVector dir = planted_direction(psi, distractor_w, rng);
    ms.emplace_back(PsdOperator(dir * dir.adjoint(), true));
  }
  return OrInstance(MeasurementEnsemble(std::move(ms)),
                    DensityMatrix::pure(psi), CaseTag::One, eps,
                    /*delta=*/1.0);
}

OrInstance make_case_two_instance(Eigen::Index dim, int m, double delta,
                                  std::uint64_t seed) {
  if (dim < 2 || m < 1) {
    throw std::invalid_argument("make_case_two_instance: need dim >= 2, m >= 1");
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("make_case_two_instance: invalid delta");
  }
  SplitRng rng(seed);
  const ComplexVector psi = random_unit_vector(dim, rng);
  const double w = delta / static_cast<double>(m);
  std::vector<TwoOutcomeMeasurement> ms;
  ms.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    ComplexVector dir = planted_direction(psi, w, rng);
    ms.emplace_back(PsdOperator(dir * dir.adjoint(), true));
  }
  return OrInstance(MeasurementEnsemble(std::move(ms)),
                    DensityMatrix::pure(psi), CaseTag::Two,
                    /*eps=*/0.5, delta);
}

}  // namespace qevent
