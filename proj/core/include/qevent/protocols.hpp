#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qevent/sequential.hpp"

namespace qevent {

enum class CaseTag { One, Two, Unknown };

// A Quantum OR / Event Finding instance: ensemble, state, and the promise it
// is tagged with. Case one promises some Tr[M_i rho] >= 1 - eps; case two
// promises sum_i Tr[M_i rho] <= delta. Tagged instances are validated at
// construction (with 1e-12 slack so planting exactly at the boundary works).
class OrInstance {
 public:
  OrInstance(MeasurementEnsemble ens, DensityMatrix rho, CaseTag tag,
             double eps, double delta);

  const MeasurementEnsemble& ensemble() const { return ens_; }
  const DensityMatrix& state() const { return rho_; }
  CaseTag tag() const { return tag_; }
  double eps() const { return eps_; }
  double delta() const { return delta_; }

  double p_down() const { return p_down_; }  // max_i Tr[M_i rho]
  double p_up() const { return p_up_; }      // sum_i Tr[M_i rho]
  // Total weight of measurements with Tr[M_i rho] strictly below 1 - eps.
  double beta() const { return beta_; }
  // Indices with Tr[M_i rho] >= 1 - eps ("good" targets for event finding,
  // judged on the original state, with fp slack at the boundary).
  const std::vector<int>& good_indices() const { return good_indices_; }
  bool is_good_index(int idx) const;
  const std::vector<double>& accept_weights() const { return weights_; }

 private:
  MeasurementEnsemble ens_;
  DensityMatrix rho_;
  CaseTag tag_;
  double eps_;
  double delta_;
  std::vector<double> weights_;
  std::vector<int> good_indices_;
  double p_down_ = 0.0;
  double p_up_ = 0.0;
  double beta_ = 0.0;
};

struct TheoremBounds {
  double lower = 0.0;
  double upper = 1.0;
};

// Accept-probability bounds for the OR protocols on a tagged instance:
// blended  p_down^2 / 4 < p_accept < p_up
// random   min(p_down^2 / 4.5, (3 - sqrt(5)) / 4) <= p_accept <= 2 p_up
TheoremBounds or_blended_bounds(const OrInstance& inst);
TheoremBounds or_random_bounds(const OrInstance& inst);

// Event-finding lower bounds on P[accept and first accept is good]:
// blended  (1 - eps)^3 / (12 (1 + beta))
// random   (1 - eps)^7 / (1296 (1 + beta)^3)
double event_finding_blended_lower(double eps, double beta);
double event_finding_random_lower(double eps, double beta);

struct OrShotResult {
  bool accepted = false;
  TrajectoryRecord trajectory;
};

// One pass of the OR protocols: m measurements (blended or uniformly random),
// halting at the first accept. rounds overrides the default m.
OrShotResult run_or_blended_once(const OrInstance& inst, SplitRng& rng,
                                 std::optional<int> rounds = std::nullopt);
OrShotResult run_or_random_once(const OrInstance& inst, SplitRng& rng,
                                std::optional<int> rounds = std::nullopt);

struct OrAggregate {
  std::int64_t shots = 0;
  std::int64_t accepts = 0;
  double accept_rate = 0.0;
  double halfwidth99 = 0.0;
  // Exact accept probability: B(rounds) for blended; A(rounds) for random
  // when enumeration is feasible (NaN otherwise).
  double exact_accept = 0.0;
  TheoremBounds bounds;
  bool bounds_hold = true;  // checked on the exact value when available
};

OrAggregate run_or_blended(const OrInstance& inst, const EngineConfig& config,
                           std::optional<int> rounds = std::nullopt);
OrAggregate run_or_random(const OrInstance& inst, const EngineConfig& config,
                          std::optional<int> rounds = std::nullopt,
                          std::uint64_t cap = kDefaultProductCap);

struct EventFindingResult {
  bool accepted = false;
  std::optional<int> first_index;
  // Tr[M_first rho] >= 1 - eps on the original rho; defined iff accepted.
  std::optional<bool> good;
  double beta = 0.0;
};

EventFindingResult run_event_finding_once(const OrInstance& inst,
                                          SamplingMode mode, SplitRng& rng,
                                          std::optional<int> rounds = std::nullopt);

struct EventFindingAggregate {
  std::int64_t shots = 0;
  std::int64_t accepts = 0;
  std::int64_t good_accepts = 0;
  double accept_rate = 0.0;
  double good_rate = 0.0;  // P[accept and first accept good]
  double halfwidth99 = 0.0;
  double beta = 0.0;
  double theorem_lower = 0.0;
  bool bound_holds = true;  // good_rate >= theorem_lower - halfwidth99
};

EventFindingAggregate run_event_finding(const OrInstance& inst,
                                        SamplingMode mode,
                                        const EngineConfig& config,
                                        std::optional<int> rounds = std::nullopt);

struct EventFindingShots {
  EventFindingAggregate aggregate;
  std::vector<EventFindingResult> per_shot;  // filled when collect is set
};

EventFindingShots run_event_finding_detailed(const OrInstance& inst,
                                             SamplingMode mode,
                                             const EngineConfig& config,
                                             std::optional<int> rounds,
                                             bool collect);

// Exact P[accept and first accept good] for the blended protocol:
// sum_{j=0}^{rounds-1} (1/m) Tr[M_good E_0^j rho E_0^j].
double exact_good_first_accept_blended(const OrInstance& inst, int rounds);
// Same for the random protocol via product enumeration (projective only).
double exact_good_first_accept_random(const OrInstance& inst, int rounds,
                                      std::uint64_t cap = kDefaultProductCap);

// ----- Quantum Mean Estimation -----

struct MeanEstimationReport {
  int t = 0;       // measurements per copy
  int copies = 0;  // k
  double estimate = 0.0;
  std::vector<int> per_copy_counts;
  // Present when the input state is pure: estimator variance per Lemma-style
  // eigenbasis decomposition, and its residual part.
  std::optional<double> predicted_variance;
  std::optional<double> sigma_sq_residual;
};

// Algorithm: for each of `copies` fresh copies of rho, apply the two-outcome
// measurement {sqrt(M), sqrt(1-M)} (M the ensemble mean) t times with state
// updates, counting accepts; estimate = total accepts / (t * copies).
MeanEstimationReport run_mean_estimation(const DensityMatrix& rho,
                                         const MeasurementEnsemble& ens, int t,
                                         int copies, SplitRng& rng);

struct VariancePrediction {
  double total = 0.0;     // (1/t) sum_a alpha_a^2 lambda_a (1 - lambda_a) + sigma_sq
  double sigma_sq = 0.0;  // sum alpha_a^2 lambda_a^2 - (sum alpha_a^2 lambda_a)^2
  double sigma_sq_bound = 0.0;  // (lambda_max - lambda_min)^2 / 4
};

// Estimator variance for a single copy (k = 1) of a pure input state.
// Throws std::invalid_argument on mixed input.
VariancePrediction mean_estimation_variance(const DensityMatrix& pure_state,
                                            const MeasurementEnsemble& ens,
                                            int t);

// Exact law of the per-copy count A_1 for a pure input:
// P[A_1 = x] = C(t, x) sum_a alpha_a^2 lambda_a^x (1 - lambda_a)^{t-x}.
std::vector<double> mean_estimation_count_distribution(
    const DensityMatrix& pure_state, const MeasurementEnsemble& ens, int t);

// Brute-force oracle for the same law: walks all 2^t accept/reject sequences
// with explicit Kraus updates. Exponential in t; test-scale only.
std::vector<double> mean_estimation_count_distribution_bruteforce(
    const DensityMatrix& rho, const MeasurementEnsemble& ens, int t);

// ----- Planted instance generators -----

// Case one: one rank-one projector with Tr[M_1 rho] = 1 - eps plus m - 1
// equal-weight distractors summing to beta. All projective.
OrInstance make_case_one_instance(Eigen::Index dim, int m, double eps,
                                  double beta, std::uint64_t seed);
// Case two: m rank-one projectors with total weight exactly delta.
OrInstance make_case_two_instance(Eigen::Index dim, int m, double delta,
                                  std::uint64_t seed);

}  // namespace qevent
