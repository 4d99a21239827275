#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qevent/protocols.hpp"
#include "qevent/sequential.hpp"

namespace qevent {

// One identifier per checkable inequality. Chained statements (e.g. the
// accept chain) are evaluated link by link; the report carries the binding
// link.
enum class BoundId {
  GentleSingle,       // ||rho - rho'||_1 <= 2 sqrt(Tr[M rho])
  GentleSequential,   // fixed sequence, <= 2 sqrt(sum_i Tr[M_i rho])
  GentleRandom,       // ||rho - rho^(k)||_1 <= 4 sqrt(A(ceil(k/2)))
  CauchySchwarzAvg,   // sum p_i p_j Tr[X A_i Y A_j^dag] <= sum p_i Tr[X A_i Y A_i^dag]
  CsSpecific,         // m^-2k sum_{T,S} Tr[X T rho S] <= m^-k sum_T Tr[X T rho T^dag]
  GentleBlended,      // ||rho_B^(k) - rho||_1 <= 2 sqrt(B(k))
  BlendedMonotone,    // Tr[E_0 rho_B^(k)] nondecreasing in k
  BacceptLinear,      // B(k) <= k Tr[M rho]
  FidelityLb,         // F(rho^(k), rho) >= 1 - B(k)
  TraceFromBlended,   // ||rho - rho^(k)||_1 <= 2 sqrt(2 B(k))
  OutcomeDomination,  // (1-A(k)) Tr[X rho^(k)] >= (1-B(2k)) Tr[X rho_B^(2k)]
  AcceptChain,        // 1-A(k) >= 1-B(2k) >= (1-B(k))^2
  AcceptHalf,         // A(k) >= B(2k)/2
  Sandwich,           // B(2k)/2 <= A(k) <= B(2k)
  OrBlended,          // p_down^2/4 <= B(m) <= p_up
  OrRandom,           // min(p_down^2/4.5, (3-sqrt 5)/4) <= A(m) <= 2 p_up
  RepeatedIncrease,   // Tr[M^{k+1} rho] / Tr[M^k rho] nondecreasing
  VarianceMax,        // Var <= (lambda_max - lambda_min)^2 / 4
  GaoUnion,           // 1 - Tr[prod (1-A_i) rho prod (1-A_i)] <= 4 sum Tr[A_i rho]
};

std::vector<BoundId> all_bound_ids();
std::string bound_id_name(BoundId id);
BoundId bound_id_from_name(const std::string& name);

inline constexpr double kMarginTol = 1e-9;

struct CheckReport {
  BoundId id{};
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs of the binding link
  bool pass = false;    // margin >= -kMarginTol
  bool tight = false;   // |margin| < kMarginTol
  std::string label;    // instance provenance (seed or construction)
  std::string detail;   // binding link, auxiliary observations
};

// Everything an evaluator might need; each BoundId documents its subset.
struct BoundInstance {
  std::string label;
  std::optional<DensityMatrix> rho;
  std::optional<MeasurementEnsemble> ens;
  int k = 1;
  std::optional<PsdOperator> x_op;           // OutcomeDomination, CsSpecific
  std::optional<PsdOperator> y_op;           // CauchySchwarzAvg
  std::vector<ComplexMatrix> arbitrary_set;  // CauchySchwarzAvg A_i
  std::vector<double> probabilities;         // CauchySchwarzAvg p_i
  std::vector<int> sequence;                 // GentleSequential, GaoUnion
  std::vector<double> eigenvalues;           // VarianceMax
  std::vector<double> weights;               // VarianceMax
  std::optional<OrInstance> or_instance;     // OrBlended, OrRandom
  std::uint64_t cap = kDefaultProductCap;
};

// Evaluates one inequality exactly (closed forms and enumeration only, never
// sampling). Throws std::invalid_argument when the instance lacks a required
// field and std::length_error when exact enumeration is infeasible.
CheckReport check_bound(BoundId id, const BoundInstance& inst);

struct SuiteProfile {
  int d_min = 2, d_max = 6;
  int m_min = 1, m_max = 4;
  int k_min = 1, k_max = 5;
  int count = 100;  // instances per BoundId
  std::uint64_t seed = 0;
  std::uint64_t cap = kDefaultProductCap;
};

struct SuiteSummary {
  std::int64_t total = 0;
  std::int64_t passed = 0;
  std::int64_t failed = 0;
  std::int64_t tight = 0;
};

struct SuiteResult {
  std::vector<CheckReport> reports;  // ordered by (bound id, instance index)
  SuiteSummary summary;
};

// Deterministic random-instance sweep: `count` instances per BoundId, each
// drawn from a stream keyed by (seed, id, index), evaluated in parallel and
// merged in index order (identical output for any worker count).
SuiteResult random_instance_suite(const SuiteProfile& profile, int threads = 0);

// The generator used by the suite, exposed for reproduction of single cases.
BoundInstance generate_bound_instance(BoundId id, const SuiteProfile& profile,
                                      int index);

}  // namespace qevent
