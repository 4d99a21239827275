#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qevent/measurement.hpp"
#include "qevent/qla.hpp"
#include "qevent/rng.hpp"

namespace qevent {

struct EngineConfig {
  std::uint64_t rng_seed = 0;
  std::int64_t shots = 1;
  bool halt_on_accept = true;
  int threads = 0;  // 0: QEVENT_THREADS env, then hardware concurrency
};

struct ExactSequenceResult {
  std::int64_t rounds = 0;
  double accept_prob = 0.0;
  // Absent when the all-reject event has probability below 1e-12.
  std::optional<DensityMatrix> conditioned_state;
};

struct RoundOutcome {
  // Random mode: index of the measurement applied. Blended mode: outcome
  // index (0 = reject, i >= 1 = accept on measurement i-1).
  std::int32_t outcome = 0;
  bool accepted = false;
};

struct TrajectoryRecord {
  std::vector<RoundOutcome> outcomes;
  std::optional<std::int32_t> first_accept_round;  // 0-based round
  std::optional<std::int32_t> first_accept_index;  // 0-based measurement index
  DensityMatrix final_state;
};

// Spectral cache for repeated blended measurements of one (rho, ensemble)
// pair. E_0^2 = 1 - M with M the ensemble mean, so every moment
// Tr[E_0^j rho] costs O(d) after a single eigendecomposition; round counts in
// the millions stay cheap.
class BlendedSpectral {
 public:
  BlendedSpectral(const DensityMatrix& rho, const MeasurementEnsemble& ens);

  // Tr[E_0^j rho] = sum_i w_i lambda_i^j with lambda_i the eigenvalues of E_0.
  double moment(double j) const;
  // B(k) = 1 - Tr[E_0^{2k} rho].
  double b_accept(double k) const { return 1.0 - moment(2.0 * k); }
  // rho_B^(k); throws std::domain_error when the reject branch has
  // probability below 1e-12.
  DensityMatrix conditioned(double k) const;
  ComplexMatrix e0_power(double j) const;
  Eigen::Index dim() const { return basis_.rows(); }

 private:
  RealVector e0_values_;   // sqrt(1 - mu_i), ascending in mu
  RealVector weights_;     // <v_i| rho |v_i>
  ComplexMatrix basis_;    // eigenvectors of the mean operator
  ComplexMatrix rho_;
};

// Exact engines.
//
// blended_exact: accept_prob = B(k) = 1 - Tr[E_0^{2k} rho], conditioned state
// E_0^k rho E_0^k (renormalized), via the spectral form.
ExactSequenceResult blended_exact(const DensityMatrix& rho,
                                  const MeasurementEnsemble& ens,
                                  std::int64_t k);

// random_exact: A(k) = 1 - m^{-k} sum_{T} Tr[T rho T^dag] over all length-k
// products T of the complement operators, and rho^(k) the normalized average
// of T rho T^dag. Valid only for projective ensembles (the closed form uses
// 1 - M = sqrt(1 - M)); refuses otherwise.
ExactSequenceResult random_exact(const DensityMatrix& rho,
                                 const MeasurementEnsemble& ens, int k,
                                 std::uint64_t cap = kDefaultProductCap);

// B(k) through the product-enumeration route, 1 - m^{-k} sum_T Tr[T rho];
// cross-check for the spectral form (projective not required).
double blended_accept_by_enumeration(const DensityMatrix& rho,
                                     const MeasurementEnsemble& ens, int k,
                                     std::uint64_t cap = kDefaultProductCap);

// Trajectory samplers (Born rule with Kraus updates; any 0 <= M <= 1).
TrajectoryRecord sample_random_trajectory(const DensityMatrix& rho,
                                          const MeasurementEnsemble& ens,
                                          int rounds, bool halt_on_accept,
                                          SplitRng& rng);
TrajectoryRecord sample_blended_trajectory(const DensityMatrix& rho,
                                           const BlendedMeasurement& blended,
                                           int rounds, bool halt_on_accept,
                                           SplitRng& rng);
// Convenience overload; prefer prebuilding the BlendedMeasurement when
// sampling many shots.
TrajectoryRecord sample_blended_trajectory(const DensityMatrix& rho,
                                           const MeasurementEnsemble& ens,
                                           int rounds, bool halt_on_accept,
                                           SplitRng& rng);

enum class SamplingMode { Random, Blended };

struct MonteCarloEstimate {
  double estimate = 0.0;
  double halfwidth99 = 0.0;  // sqrt(ln(2/0.01) / (2 shots))
  std::int64_t shots = 0;
  std::int64_t accepts = 0;
};

// 99% Hoeffding half-width for a mean of n indicator samples.
double hoeffding_halfwidth99(std::int64_t n);

// Fraction of shots with at least one accept in `rounds` rounds; shots run in
// parallel, one RNG stream per shot.
MonteCarloEstimate monte_carlo_accept(const DensityMatrix& rho,
                                      const MeasurementEnsemble& ens,
                                      int rounds, SamplingMode mode,
                                      const EngineConfig& config);

}  // namespace qevent
