#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>

#include "qevent/rng.hpp"

namespace qevent {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Tolerance ladder. Double-precision eigensolvers leave ~1e-13 of dust on
// clean inputs; anything within kHardTol of a constraint is repaired by
// clamping, anything beyond it is a genuine contract violation.
inline constexpr double kDustTol = 1e-10;
inline constexpr double kHardTol = 1e-6;
inline constexpr double kProjectorTol = 1e-9;
inline constexpr double kReconstructTol = 1e-8;

struct EigenSystem {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // orthonormal columns, values[i] <-> vectors.col(i)
};

bool is_finite(const ComplexMatrix& m);
double max_abs(const ComplexMatrix& m);
double frobenius(const ComplexMatrix& m);
double hermiticity_defect(const ComplexMatrix& m);  // ||M - M^dag||_max
ComplexMatrix hermitize(const ComplexMatrix& m);

// Eigendecomposition of a Hermitian matrix. Throws std::invalid_argument if
// the input is non-square, non-finite, or non-Hermitian beyond kHardTol.
EigenSystem hermitian_eig(const ComplexMatrix& m);

// V f(lambda) V^dag.
ComplexMatrix apply_spectral(const EigenSystem& sys,
                             const std::function<double(double)>& f);

// Hermitian PSD operator. Construction validates Hermiticity and positivity:
// eigenvalues in [-kHardTol, 0) are treated as dust and clamped to zero (the
// matrix is rebuilt from the clamped spectrum), eigenvalues below -kHardTol
// raise std::domain_error. With bounded_by_one, the same policy applies at
// the top of the spectrum. Immutable after construction; copies share the
// eigendecomposition.
class PsdOperator {
 public:
  explicit PsdOperator(const ComplexMatrix& mat, bool bounded_by_one = false);

  const ComplexMatrix& matrix() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }
  bool bounded_by_one() const { return bounded_by_one_; }
  const EigenSystem& eig() const { return *eig_; }
  const RealVector& eigenvalues() const { return eig_->values; }
  double min_eigenvalue() const { return eig_->values(0); }
  double max_eigenvalue() const { return eig_->values(dim() - 1); }

  // ||M^2 - M||_F <= kProjectorTol
  bool is_projector() const;

  PsdOperator sqrt() const;
  // 1 - M; requires bounded_by_one.
  PsdOperator complement() const;

 private:
  PsdOperator(ComplexMatrix mat, std::shared_ptr<const EigenSystem> eig,
              bool bounded_by_one);

  ComplexMatrix mat_;
  std::shared_ptr<const EigenSystem> eig_;
  bool bounded_by_one_ = false;
};

PsdOperator psd_sqrt(const PsdOperator& op);

// Density matrix: Hermitian, PSD, trace one. Construction hermitizes, clamps
// eigenvalue dust, and renormalizes the trace, so states produced by raw
// Kraus updates are always valid. Throws std::domain_error when the input is
// genuinely non-PSD or has vanishing trace.
class DensityMatrix {
 public:
  explicit DensityMatrix(const ComplexMatrix& mat);
  static DensityMatrix pure(const ComplexVector& psi);
  static DensityMatrix maximally_mixed(Eigen::Index dim);

  const ComplexMatrix& matrix() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }
  const EigenSystem& eig() const { return *eig_; }
  double purity() const;  // Tr[rho^2]
  bool is_pure(double tol = 1e-9) const;

 private:
  DensityMatrix(ComplexMatrix mat, std::shared_ptr<const EigenSystem> eig);

  ComplexMatrix mat_;
  std::shared_ptr<const EigenSystem> eig_;
};

// Sum of |eigenvalues| of a - b, in [0, 2].
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Uhlmann fidelity in [0, 1]; rank-one shortcut F = sqrt(<psi|rho|psi>) when
// either argument is pure.
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

// Purification on the doubled system (dim d^2); tracing out the reference
// register recovers the input.
ComplexVector purification_vector(const DensityMatrix& rho);
DensityMatrix purify(const DensityMatrix& rho);
DensityMatrix partial_trace_reference(const DensityMatrix& joint,
                                      Eigen::Index system_dim);

enum class StateKind { HaarPure, HilbertSchmidtMixed };

DensityMatrix random_state(Eigen::Index dim, std::uint64_t seed,
                           StateKind kind = StateKind::HaarPure);
DensityMatrix random_state(Eigen::Index dim, SplitRng& rng,
                           StateKind kind = StateKind::HaarPure);

// Rank-r projector with Haar-distributed range; rank == dim gives the
// identity exactly. Throws std::invalid_argument unless 1 <= rank <= dim.
PsdOperator random_projector(Eigen::Index dim, Eigen::Index rank,
                             std::uint64_t seed);
PsdOperator random_projector(Eigen::Index dim, Eigen::Index rank,
                             SplitRng& rng);

// Random effect operator 0 <= M <= 1 with Haar eigenbasis and uniform
// spectrum; generic non-projective measurement element.
PsdOperator random_effect(Eigen::Index dim, SplitRng& rng);

ComplexVector random_unit_vector(Eigen::Index dim, SplitRng& rng);

}  // namespace qevent
