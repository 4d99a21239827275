#include "qevent/qla.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace qevent {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

std::shared_ptr<const EigenSystem> make_shared_eig(EigenSystem sys) {
  return std::make_shared<const EigenSystem>(std::move(sys));
}

}  // namespace

bool is_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

double max_abs(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

double frobenius(const ComplexMatrix& m) {
  return m.norm();
}

double hermiticity_defect(const ComplexMatrix& m) {
  return max_abs(m - m.adjoint());
}

ComplexMatrix hermitize(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

EigenSystem hermitian_eig(const ComplexMatrix& m) {
  require(m.rows() == m.cols(), "hermitian_eig: matrix must be square");
  require(is_finite(m), "hermitian_eig: matrix has non-finite entries");
  const double scale = std::max(1.0, max_abs(m));
  if (hermiticity_defect(m) > kHardTol * scale) {
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitize(m));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver failed to converge");
  }
  return EigenSystem{solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix apply_spectral(const EigenSystem& sys,
                             const std::function<double(double)>& f) {
  RealVector mapped(sys.values.size());
  for (Eigen::Index i = 0; i < sys.values.size(); ++i) {
    mapped(i) = f(sys.values(i));
  }
  return sys.vectors * mapped.asDiagonal() * sys.vectors.adjoint();
}

PsdOperator::PsdOperator(ComplexMatrix mat,
                         std::shared_ptr<const EigenSystem> eig,
                         bool bounded_by_one)
    : mat_(std::move(mat)), eig_(std::move(eig)), bounded_by_one_(bounded_by_one) {}

PsdOperator::PsdOperator(const ComplexMatrix& mat, bool bounded_by_one)
    : bounded_by_one_(bounded_by_one) {
  EigenSystem sys = hermitian_eig(mat);
  const double lo = sys.values.size() ? sys.values(0) : 0.0;
  const double hi = sys.values.size() ? sys.values(sys.values.size() - 1) : 0.0;
  if (lo < -kHardTol) {
    throw std::domain_error("PsdOperator: matrix is not positive semidefinite");
  }
  if (bounded_by_one && hi > 1.0 + kHardTol) {
    throw std::domain_error("PsdOperator: spectrum exceeds one");
  }
  bool clamped = false;
  for (Eigen::Index i = 0; i < sys.values.size(); ++i) {
    if (sys.values(i) < 0.0) {
      sys.values(i) = 0.0;
      clamped = true;
    } else if (bounded_by_one && sys.values(i) > 1.0) {
      sys.values(i) = 1.0;
      clamped = true;
    }
  }
  if (clamped) {
    mat_ = sys.vectors * sys.values.asDiagonal() * sys.vectors.adjoint();
    mat_ = hermitize(mat_);
  } else {
    mat_ = hermitize(mat);
  }
  eig_ = make_shared_eig(std::move(sys));
}

bool PsdOperator::is_projector() const {
  return frobenius(mat_ * mat_ - mat_) <= kProjectorTol;
}

PsdOperator PsdOperator::sqrt() const {
  EigenSystem sys{eig_->values.cwiseSqrt(), eig_->vectors};
  ComplexMatrix root =
      hermitize(sys.vectors * sys.values.asDiagonal() * sys.vectors.adjoint());
  return PsdOperator(std::move(root), make_shared_eig(std::move(sys)),
                     bounded_by_one_);
}

PsdOperator PsdOperator::complement() const {
  if (!bounded_by_one_) {
    throw std::domain_error("PsdOperator::complement requires bounded_by_one");
  }
  EigenSystem sys;
  sys.values = (1.0 - eig_->values.reverse().array()).matrix();
  sys.vectors = eig_->vectors.rowwise().reverse();
  for (Eigen::Index i = 0; i < sys.values.size(); ++i) {
    if (sys.values(i) < 0.0) sys.values(i) = 0.0;
  }
  ComplexMatrix m = hermitize(ComplexMatrix::Identity(dim(), dim()) - mat_);
  return PsdOperator(std::move(m), make_shared_eig(std::move(sys)), true);
}

PsdOperator psd_sqrt(const PsdOperator& op) { return op.sqrt(); }

DensityMatrix::DensityMatrix(ComplexMatrix mat,
                             std::shared_ptr<const EigenSystem> eig)
    : mat_(std::move(mat)), eig_(std::move(eig)) {}

DensityMatrix::DensityMatrix(const ComplexMatrix& mat) {
  EigenSystem sys = hermitian_eig(mat);
  require(sys.values.size() > 0, "DensityMatrix: empty matrix");
  const double scale = std::max(1.0, sys.values.cwiseAbs().maxCoeff());
  if (sys.values(0) < -kHardTol * scale) {
    throw std::domain_error("DensityMatrix: matrix is not positive semidefinite");
  }
  for (Eigen::Index i = 0; i < sys.values.size(); ++i) {
    if (sys.values(i) < 0.0) sys.values(i) = 0.0;
  }
  const double tr = sys.values.sum();
  if (!(tr > 1e-300)) {
    throw std::domain_error("DensityMatrix: trace is zero");
  }
  sys.values /= tr;
  mat_ = hermitize(sys.vectors * sys.values.asDiagonal() * sys.vectors.adjoint());
  eig_ = make_shared_eig(std::move(sys));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
  require(psi.size() > 0, "DensityMatrix::pure: empty vector");
  const double n = psi.norm();
  if (!(n > 1e-150)) {
    throw std::domain_error("DensityMatrix::pure: zero vector");
  }
  ComplexVector unit = psi / n;
  return DensityMatrix(unit * unit.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim) {
  require(dim >= 1, "DensityMatrix::maximally_mixed: dim must be positive");
  ComplexMatrix m = ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim);
  return DensityMatrix(m);
}

double DensityMatrix::purity() const {
  return eig_->values.squaredNorm();
}

bool DensityMatrix::is_pure(double tol) const {
  return eig_->values(dim() - 1) >= 1.0 - tol;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require(a.dim() == b.dim(), "trace_distance: dimension mismatch");
  EigenSystem diff = hermitian_eig(a.matrix() - b.matrix());
  return diff.values.cwiseAbs().sum();
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  require(a.dim() == b.dim(), "fidelity: dimension mismatch");
  const DensityMatrix* pure = nullptr;
  const DensityMatrix* other = nullptr;
  if (a.is_pure()) {
    pure = &a;
    other = &b;
  } else if (b.is_pure()) {
    pure = &b;
    other = &a;
  }
  if (pure != nullptr) {
    const ComplexVector psi = pure->eig().vectors.col(pure->dim() - 1);
    const double overlap =
        std::real((psi.adjoint() * other->matrix() * psi)(0, 0));
    return std::sqrt(std::clamp(overlap, 0.0, 1.0));
  }
  // General Uhlmann formula: F = Tr sqrt(sqrt(a) b sqrt(a)).
  ComplexMatrix sa = apply_spectral(a.eig(), [](double v) {
    return std::sqrt(std::max(v, 0.0));
  });
  EigenSystem inner = hermitian_eig(sa * b.matrix() * sa);
  double f = 0.0;
  for (Eigen::Index i = 0; i < inner.values.size(); ++i) {
    f += std::sqrt(std::max(inner.values(i), 0.0));
  }
  return std::min(f, 1.0);
}

ComplexVector purification_vector(const DensityMatrix& rho) {
  const Eigen::Index d = rho.dim();
  ComplexVector psi = ComplexVector::Zero(d * d);
  const EigenSystem& sys = rho.eig();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double lambda = std::max(sys.values(i), 0.0);
    if (lambda == 0.0) continue;
    const double w = std::sqrt(lambda);
    for (Eigen::Index a = 0; a < d; ++a) {
      psi(a * d + i) += w * sys.vectors(a, i);
    }
  }
  return psi;
}

DensityMatrix purify(const DensityMatrix& rho) {
  return DensityMatrix::pure(purification_vector(rho));
}

DensityMatrix partial_trace_reference(const DensityMatrix& joint,
                                      Eigen::Index system_dim) {
  const Eigen::Index d = system_dim;
  require(d >= 1 && joint.dim() % d == 0,
          "partial_trace_reference: incompatible dimensions");
  const Eigen::Index r = joint.dim() / d;
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  const ComplexMatrix& j = joint.matrix();
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      Complex acc = 0.0;
      for (Eigen::Index k = 0; k < r; ++k) {
        acc += j(a * r + k, b * r + k);
      }
      out(a, b) = acc;
    }
  }
  return DensityMatrix(out);
}

ComplexVector random_unit_vector(Eigen::Index dim, SplitRng& rng) {
  ComplexVector v(dim);
  double norm_sq = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) {
      v(i) = Complex(rng.normal(), rng.normal());
    }
    norm_sq = v.squaredNorm();
  } while (!(norm_sq > 1e-30));
  return v / std::sqrt(norm_sq);
}

DensityMatrix random_state(Eigen::Index dim, SplitRng& rng, StateKind kind) {
  require(dim >= 1, "random_state: dim must be positive");
  if (kind == StateKind::HaarPure) {
    return DensityMatrix::pure(random_unit_vector(dim, rng));
  }
  // Hilbert-Schmidt: rho = G G^dag / Tr, G square Ginibre.
  ComplexMatrix g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      g(i, j) = Complex(rng.normal(), rng.normal());
    }
  }
  ComplexMatrix m = g * g.adjoint();
  return DensityMatrix(m);
}

DensityMatrix random_state(Eigen::Index dim, std::uint64_t seed, StateKind kind) {
  SplitRng rng(seed);
  return random_state(dim, rng, kind);
}

PsdOperator random_projector(Eigen::Index dim, Eigen::Index rank, SplitRng& rng) {
  require(dim >= 1, "random_projector: dim must be positive");
  if (rank < 1 || rank > dim) {
    throw std::invalid_argument("random_projector: rank must be in [1, dim]");
  }
  if (rank == dim) {
    return PsdOperator(ComplexMatrix::Identity(dim, dim), true);
  }
  // Column span of a Ginibre block is Haar on the Grassmannian.
  ComplexMatrix g(dim, rank);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < rank; ++j) {
      g(i, j) = Complex(rng.normal(), rng.normal());
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(dim, rank);
  return PsdOperator(q * q.adjoint(), true);
}

PsdOperator random_projector(Eigen::Index dim, Eigen::Index rank,
                             std::uint64_t seed) {
  SplitRng rng(seed);
  return random_projector(dim, rank, rng);
}

PsdOperator random_effect(Eigen::Index dim, SplitRng& rng) {
  require(dim >= 1, "random_effect: dim must be positive");
  ComplexMatrix g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      g(i, j) = Complex(rng.normal(), rng.normal());
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(dim, dim);
  RealVector spectrum(dim);
  for (Eigen::Index i = 0; i < dim; ++i) spectrum(i) = rng.uniform();
  return PsdOperator(q * spectrum.asDiagonal() * q.adjoint(), true);
}

}  // namespace qevent
