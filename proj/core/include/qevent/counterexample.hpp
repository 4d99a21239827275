#pragma once

#include <cstdint>

#include "qevent/measurement.hpp"
#include "qevent/sequential.hpp"

namespace qevent {

enum class CounterexampleKind { Blended, Random };

// Two-dimensional instances showing that the first accepting outcome of
// repeated blended / random measurements can land in a subset whose total
// accepting probability on the initial state is zero.
//
// Both kinds are built from the three-outcome instrument
//   E1 = sqrt((1 + e - e^3 - e^4)/(1 + e)) |1><1|          (reject)
//   E2 = sqrt(e/(1+e)  (|0> + e  |1>)(<0| + e  <1|))       (B-type accept)
//   E3 = sqrt(1/(1+e)  (|0> - e^2|1>)(<0| - e^2<1|))       (A-type accept)
// on the state |psi> ~ e|0> - |1>. The sign of the e^2 component in E3 is
// the one that makes E1^2 + E2^2 + E3^2 = I hold exactly (the two sign
// layouts are equivalent under conjugation by diag(1, -1)).
//
// The blended kind runs this instrument directly; size_a / size_b record the
// nominal multiset sizes ceil(e^-3) and ceil(e^-2) of the projector sets it
// encodes. The random kind uses the derived two-outcome measurements
//   M_B = E2^2,
//   M_A = I - ((I - E2^2)^{-1/4} E1 (I - E2^2)^{-1/4})^2
// with size_a copies of M_A and size_b = size_a copies of M_B, sampled
// uniformly with replacement.
struct CounterexampleInstance {
  CounterexampleKind kind{};
  double eps = 0.0;
  std::int64_t size_a = 0;
  std::int64_t size_b = 0;

  Eigen::Vector2cd psi;

  // Three-outcome instrument (both kinds).
  Eigen::Matrix2cd reject_op;    // E1
  Eigen::Matrix2cd accept_b_op;  // E2
  Eigen::Matrix2cd accept_a_op;  // E3

  // Projectors of the nominal sets (blended kind): A onto |0> - e^2 |1>,
  // B onto |0> + e |1>.
  Eigen::Matrix2cd proj_a;
  Eigen::Matrix2cd proj_b;

  // Two-outcome measurements and their Kraus pairs (random kind).
  Eigen::Matrix2cd m_a, m_b;
  Eigen::Matrix2cd sqrt_m_a, sqrt_m_b;
  Eigen::Matrix2cd sqrt_not_m_a, sqrt_not_m_b;

  std::int64_t default_rounds() const { return size_a + size_b; }

  // Materializes the A-then-B multiset as a MeasurementEnsemble (indices
  // [0, size_a) are the A set). Guarded by max_total; the full-scale
  // instances are meant to stay in scalar form.
  MeasurementEnsemble expanded_ensemble(std::int64_t max_total = 64) const;
};

// Example-style blended instance; requires 0 < eps < 1/2.
CounterexampleInstance build_blended_counterexample(double eps);

// Conjecture-style random instance; copies_a == 0 picks ceil(20 eps^-3).
// Requires 0 < eps < 1/2 and (I - E2^2) invertible (min eigenvalue >= 1e-8).
CounterexampleInstance build_random_counterexample(double eps,
                                                   std::int64_t copies_a = 0);

struct CounterexampleRun {
  std::int64_t shots = 0;
  std::int64_t accepted = 0;
  std::int64_t first_in_b = 0;
  double accept_rate = 0.0;
  double accept_halfwidth99 = 0.0;
  double first_in_b_rate = 0.0;  // conditional on acceptance
  double first_in_b_halfwidth99 = 0.0;
  std::int64_t rounds = 0;
};

// Monte Carlo over parallel shots, halting each shot at its first accept.
// rounds == 0 uses default_rounds().
CounterexampleRun run_counterexample(const CounterexampleInstance& inst,
                                     std::int64_t rounds,
                                     const EngineConfig& config);

struct CounterexampleExactRates {
  double accept = 0.0;
  double first_in_b = 0.0;
  double first_in_a = 0.0;
  double conditional_b = 0.0;  // first_in_b / accept
};

// Deterministic 2x2 recursions. Blended kind: survival under E1 with per
// round weights Tr[E_i^2 sigma]. Random kind: the coin-averaged reject
// superoperator tau -> w_A R_A tau R_A + w_B R_B tau R_B.
CounterexampleExactRates counterexample_rates_exact(
    const CounterexampleInstance& inst, std::int64_t rounds);

// 1 - Tr[E1^{2k} rho]: exact accept probability of k repeated blended
// measurements on the instrument.
double blended_counterexample_accept_exact(const CounterexampleInstance& inst,
                                           std::int64_t k);

// sum_{j=0}^{k-1} Tr[E2^2 E1^j rho E1^j]: the probability that the B-type
// outcome is the first to accept within k blended rounds.
double blended_counterexample_first_in_b_exact(
    const CounterexampleInstance& inst, std::int64_t k);

// Exact probability that M_B accepts first when M_B, M_A, M_B, A, ... are
// strictly alternated (B first, k turns of B). Lower-bounded by the blended
// sum above.
double alternation_first_b_exact(const CounterexampleInstance& inst,
                                 std::int64_t k);

}  // namespace qevent
