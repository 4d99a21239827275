#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qevent/qla.hpp"

namespace qevent {

inline constexpr std::uint64_t kDefaultProductCap = 1ull << 20;

// Two-outcome measurement 0 <= M <= 1 with Kraus pair {sqrt(M), sqrt(1-M)}.
// "Accept" is the sqrt(M) branch.
class TwoOutcomeMeasurement {
 public:
  explicit TwoOutcomeMeasurement(const PsdOperator& m);
  explicit TwoOutcomeMeasurement(const ComplexMatrix& m);

  const PsdOperator& op() const { return m_; }
  const PsdOperator& accept_kraus() const { return accept_; }
  const PsdOperator& reject_kraus() const { return reject_; }
  bool projective() const { return projective_; }
  Eigen::Index dim() const { return m_.dim(); }

  TwoOutcomeMeasurement complement() const;
  double accept_probability(const DensityMatrix& rho) const;

 private:
  PsdOperator m_;
  PsdOperator accept_;
  PsdOperator reject_;
  bool projective_;
};

// Ordered set of two-outcome measurements on a common dimension.
class MeasurementEnsemble {
 public:
  explicit MeasurementEnsemble(std::vector<TwoOutcomeMeasurement> ms,
                               std::vector<std::string> labels = {});

  std::size_t size() const { return ms_.size(); }
  Eigen::Index dim() const { return ms_.front().dim(); }
  const TwoOutcomeMeasurement& operator[](std::size_t i) const { return ms_[i]; }
  const std::vector<TwoOutcomeMeasurement>& measurements() const { return ms_; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool all_projective() const;

  // Mean operator (1/m) sum_i M_i.
  ComplexMatrix mean_operator() const;

 private:
  std::vector<TwoOutcomeMeasurement> ms_;
  std::vector<std::string> labels_;
};

// {1 - M_1, ..., 1 - M_m}; applying it twice is the identity map.
MeasurementEnsemble complement_ensemble(const MeasurementEnsemble& ens);

// Blended measurement of an ensemble: the (m+1)-outcome instrument with
//   E_0 = sqrt(1 - sum_i M_i / m)   (reject)
//   E_i = sqrt(M_i / m)             (accept on measurement i)
class BlendedMeasurement {
 public:
  explicit BlendedMeasurement(const MeasurementEnsemble& ens);

  std::size_t num_outcomes() const { return e_ops_.size(); }  // m + 1
  const PsdOperator& outcome(std::size_t i) const { return e_ops_[i]; }
  const PsdOperator& reject_outcome() const { return e_ops_[0]; }
  const MeasurementEnsemble& source() const { return *source_; }
  Eigen::Index dim() const { return e_ops_.front().dim(); }

  // ||sum_i E_i^2 - I||_F
  double completeness_residual() const;

 private:
  std::shared_ptr<const MeasurementEnsemble> source_;
  std::vector<PsdOperator> e_ops_;
};

BlendedMeasurement make_blended(const MeasurementEnsemble& ens);

// Enumerates all m^k ordered products F[i_1] * F[i_2] * ... * F[i_k] of a
// factor set, exactly once each, in lexicographic index order (indices[0] is
// the leftmost factor and the slowest digit). k = 0 yields the identity once.
// Memory stays O(k d^2) via a prefix-product stack. seek() re-positions the
// cursor so workers can split the linear index range.
//
// Throws std::length_error when m^k exceeds the cap (exact enumeration
// infeasible; fall back to Monte Carlo).
class ProductEnumerator {
 public:
  ProductEnumerator(std::vector<ComplexMatrix> factors, int k,
                    std::uint64_t cap = kDefaultProductCap);

  std::uint64_t total() const { return total_; }

  // Advances to the next product; false once the range is exhausted.
  bool next();
  const std::vector<int>& indices() const { return indices_; }
  const ComplexMatrix& product() const { return prefix_.back(); }

  // Position the cursor so the following next() yields the product with the
  // given linear index (mixed-radix, indices_[0] most significant).
  void seek(std::uint64_t linear);
  void set_end(std::uint64_t end_linear) { end_ = end_linear; }

 private:
  void rebuild_from(int pos);

  std::vector<ComplexMatrix> factors_;
  int k_;
  Eigen::Index dim_;
  std::uint64_t total_ = 0;
  std::uint64_t cursor_ = 0;  // linear index of the item produced next
  std::uint64_t end_ = 0;
  bool started_ = false;
  std::vector<int> indices_;
  std::vector<ComplexMatrix> prefix_;  // prefix_[j] = product of factors 0..j-1; prefix_[0] = I
};

// Factor sets used with the enumerator.
std::vector<ComplexMatrix> measurement_operators(const MeasurementEnsemble& ens);
std::vector<ComplexMatrix> complement_operators(const MeasurementEnsemble& ens);

// All m^k ordered products of the ensemble's measurement operators.
ProductEnumerator enumerate_products(const MeasurementEnsemble& ens, int k,
                                     std::uint64_t cap = kDefaultProductCap);

}  // namespace qevent
