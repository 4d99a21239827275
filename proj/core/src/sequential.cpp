#include "qevent/sequential.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "qevent/parallel.hpp"

namespace qevent {

namespace {

constexpr double kConditioningFloor = 1e-12;

double real_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  // Tr[a b] without forming the product.
  return std::real(a.cwiseProduct(b.transpose()).sum());
}

}  // namespace

BlendedSpectral::BlendedSpectral(const DensityMatrix& rho,
                                 const MeasurementEnsemble& ens) {
  if (rho.dim() != ens.dim()) {
    throw std::invalid_argument("BlendedSpectral: dimension mismatch");
  }
  EigenSystem mean = hermitian_eig(ens.mean_operator());
  const Eigen::Index d = mean.values.size();
  e0_values_.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double mu = std::clamp(mean.values(i), 0.0, 1.0);
    e0_values_(i) = std::sqrt(1.0 - mu);
  }
  weights_.resize(d);
  ComplexMatrix rotated = mean.vectors.adjoint() * rho.matrix() * mean.vectors;
  for (Eigen::Index i = 0; i < d; ++i) {
    weights_(i) = std::max(std::real(rotated(i, i)), 0.0);
  }
  basis_ = std::move(mean.vectors);
  rho_ = rho.matrix();
}

double BlendedSpectral::moment(double j) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < e0_values_.size(); ++i) {
    const double lambda = e0_values_(i);
    if (j == 0.0) {
      acc += weights_(i);
    } else if (lambda > 0.0) {
      acc += weights_(i) * std::pow(lambda, j);
    }
  }
  return acc;
}

ComplexMatrix BlendedSpectral::e0_power(double j) const {
  RealVector powered(e0_values_.size());
  for (Eigen::Index i = 0; i < e0_values_.size(); ++i) {
    const double lambda = e0_values_(i);
    powered(i) = (j == 0.0) ? 1.0 : (lambda > 0.0 ? std::pow(lambda, j) : 0.0);
  }
  return basis_ * powered.asDiagonal() * basis_.adjoint();
}

DensityMatrix BlendedSpectral::conditioned(double k) const {
  const double survival = moment(2.0 * k);
  if (survival < kConditioningFloor) {
    throw std::domain_error(
        "BlendedSpectral::conditioned: reject branch has probability ~0");
  }
  ComplexMatrix e0k = e0_power(k);
  return DensityMatrix(e0k * rho_ * e0k);
}

ExactSequenceResult blended_exact(const DensityMatrix& rho,
                                  const MeasurementEnsemble& ens,
                                  std::int64_t k) {
  if (k < 0) throw std::invalid_argument("blended_exact: negative round count");
  BlendedSpectral spectral(rho, ens);
  ExactSequenceResult result;
  result.rounds = k;
  if (k == 0) {
    result.accept_prob = 0.0;
    result.conditioned_state = rho;
    return result;
  }
  const double kk = static_cast<double>(k);
  result.accept_prob = std::clamp(spectral.b_accept(kk), 0.0, 1.0);
  if (result.accept_prob <= 1.0 - kConditioningFloor) {
    result.conditioned_state = spectral.conditioned(kk);
  }
  return result;
}

ExactSequenceResult random_exact(const DensityMatrix& rho,
                                 const MeasurementEnsemble& ens, int k,
                                 std::uint64_t cap) {
  if (k < 0) throw std::invalid_argument("random_exact: negative round count");
  if (rho.dim() != ens.dim()) {
    throw std::invalid_argument("random_exact: dimension mismatch");
  }
  if (!ens.all_projective()) {
    throw std::invalid_argument(
        "random_exact: ensemble must be projective (the closed form relies on "
        "1 - M = sqrt(1 - M)); use the trajectory sampler instead");
  }
  ExactSequenceResult result;
  result.rounds = k;
  if (k == 0) {
    result.accept_prob = 0.0;
    result.conditioned_state = rho;
    return result;
  }
  ProductEnumerator products(complement_operators(ens), k, cap);
  const Eigen::Index d = rho.dim();
  ComplexMatrix sum = ComplexMatrix::Zero(d, d);
  while (products.next()) {
    const ComplexMatrix& t = products.product();
    sum += t * rho.matrix() * t.adjoint();
  }
  const double scale =
      1.0 / static_cast<double>(products.total());
  sum *= scale;
  const double survival = std::clamp(std::real(sum.trace()), 0.0, 1.0);
  result.accept_prob = 1.0 - survival;
  if (survival >= kConditioningFloor) {
    result.conditioned_state = DensityMatrix(sum);
  }
  return result;
}

double blended_accept_by_enumeration(const DensityMatrix& rho,
                                     const MeasurementEnsemble& ens, int k,
                                     std::uint64_t cap) {
  if (k < 0) throw std::invalid_argument("negative round count");
  if (k == 0) return 0.0;
  ProductEnumerator products(complement_operators(ens), k, cap);
  double survival = 0.0;
  while (products.next()) {
    survival += real_trace_product(products.product(), rho.matrix());
  }
  survival /= static_cast<double>(products.total());
  return 1.0 - survival;
}

TrajectoryRecord sample_random_trajectory(const DensityMatrix& rho,
                                          const MeasurementEnsemble& ens,
                                          int rounds, bool halt_on_accept,
                                          SplitRng& rng) {
  if (rounds < 1) {
    throw std::invalid_argument("sample_random_trajectory: rounds must be >= 1");
  }
  if (rho.dim() != ens.dim()) {
    throw std::invalid_argument("sample_random_trajectory: dimension mismatch");
  }
  ComplexMatrix state = rho.matrix();
  TrajectoryRecord record{.outcomes = {},
                          .first_accept_round = std::nullopt,
                          .first_accept_index = std::nullopt,
                          .final_state = rho};
  record.outcomes.reserve(static_cast<std::size_t>(rounds));
  for (int round = 0; round < rounds; ++round) {
    const std::size_t idx = rng.pick(ens.size());
    const TwoOutcomeMeasurement& meas = ens[idx];
    const double p =
        std::clamp(real_trace_product(meas.op().matrix(), state), 0.0, 1.0);
    const bool accepted = rng.bernoulli(p);
    const PsdOperator& kraus =
        accepted ? meas.accept_kraus() : meas.reject_kraus();
    ComplexMatrix updated = kraus.matrix() * state * kraus.matrix();
    // The sampled branch has positive probability, so the trace is positive.
    const double norm = std::max(std::real(updated.trace()), 1e-300);
    state = updated / norm;
    record.outcomes.push_back(
        {.outcome = static_cast<std::int32_t>(idx), .accepted = accepted});
    if (accepted && !record.first_accept_round.has_value()) {
      record.first_accept_round = round;
      record.first_accept_index = static_cast<std::int32_t>(idx);
      if (halt_on_accept) break;
    }
  }
  record.final_state = DensityMatrix(state);
  return record;
}

TrajectoryRecord sample_blended_trajectory(const DensityMatrix& rho,
                                           const BlendedMeasurement& blended,
                                           int rounds, bool halt_on_accept,
                                           SplitRng& rng) {
  if (rounds < 1) {
    throw std::invalid_argument("sample_blended_trajectory: rounds must be >= 1");
  }
  if (rho.dim() != blended.dim()) {
    throw std::invalid_argument("sample_blended_trajectory: dimension mismatch");
  }
  const std::size_t outcomes = blended.num_outcomes();
  ComplexMatrix state = rho.matrix();
  TrajectoryRecord record{.outcomes = {},
                          .first_accept_round = std::nullopt,
                          .first_accept_index = std::nullopt,
                          .final_state = rho};
  record.outcomes.reserve(static_cast<std::size_t>(rounds));
  std::vector<ComplexMatrix> squared;
  squared.reserve(outcomes);
  for (std::size_t i = 0; i < outcomes; ++i) {
    const ComplexMatrix& e = blended.outcome(i).matrix();
    squared.push_back(e * e);
  }
  std::vector<double> probs(outcomes);
  for (int round = 0; round < rounds; ++round) {
    double total = 0.0;
    for (std::size_t i = 0; i < outcomes; ++i) {
      probs[i] = std::max(real_trace_product(squared[i], state), 0.0);
      total += probs[i];
    }
    // total == 1 up to eigensolver dust; fold the dust into the draw.
    double u = rng.uniform() * total;
    std::size_t chosen = outcomes - 1;
    for (std::size_t i = 0; i < outcomes; ++i) {
      if (u < probs[i]) {
        chosen = i;
        break;
      }
      u -= probs[i];
    }
    const ComplexMatrix& e = blended.outcome(chosen).matrix();
    ComplexMatrix updated = e * state * e;
    state = updated / std::max(std::real(updated.trace()), 1e-300);
    const bool accepted = chosen > 0;
    record.outcomes.push_back(
        {.outcome = static_cast<std::int32_t>(chosen), .accepted = accepted});
    if (accepted && !record.first_accept_round.has_value()) {
      record.first_accept_round = round;
      record.first_accept_index = static_cast<std::int32_t>(chosen - 1);
      if (halt_on_accept) break;
    }
  }
  record.final_state = DensityMatrix(state);
  return record;
}

TrajectoryRecord sample_blended_trajectory(const DensityMatrix& rho,
                                           const MeasurementEnsemble& ens,
                                           int rounds, bool halt_on_accept,
                                           SplitRng& rng) {
  BlendedMeasurement blended(ens);
  return sample_blended_trajectory(rho, blended, rounds, halt_on_accept, rng);
}

double hoeffding_halfwidth99(std::int64_t n) {
  return std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(n)));
}

MonteCarloEstimate monte_carlo_accept(const DensityMatrix& rho,
                                      const MeasurementEnsemble& ens,
                                      int rounds, SamplingMode mode,
                                      const EngineConfig& config) {
  if (config.shots < 1) {
    throw std::invalid_argument("monte_carlo_accept: shots must be >= 1");
  }
  std::optional<BlendedMeasurement> blended;
  if (mode == SamplingMode::Blended) blended.emplace(ens);

  std::atomic<std::int64_t> accepts{0};
  parallel_for(config.shots, config.threads, [&](std::int64_t shot) {
    SplitRng rng = SplitRng::for_stream(config.rng_seed, static_cast<std::uint64_t>(shot));
    TrajectoryRecord record =
        (mode == SamplingMode::Random)
            ? sample_random_trajectory(rho, ens, rounds, config.halt_on_accept,
                                       rng)
            : sample_blended_trajectory(rho, *blended, rounds,
                                        config.halt_on_accept, rng);
    if (record.first_accept_round.has_value()) {
      accepts.fetch_add(1, std::memory_order_relaxed);
    }
  });

  MonteCarloEstimate est;
  est.shots = config.shots;
  est.accepts = accepts.load();
  est.estimate =
      static_cast<double>(est.accepts) / static_cast<double>(est.shots);
  est.halfwidth99 = hoeffding_halfwidth99(est.shots);
  return est;
}

}  // namespace qevent
