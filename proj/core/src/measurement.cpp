#include "qevent/measurement.hpp"

#include <stdexcept>
#include <utility>

namespace qevent {

namespace {

PsdOperator as_bounded(const PsdOperator& m) {
  if (m.bounded_by_one()) return m;
  return PsdOperator(m.matrix(), true);
}

}  // namespace

TwoOutcomeMeasurement::TwoOutcomeMeasurement(const PsdOperator& m)
    : m_(as_bounded(m)),
      accept_(m_.sqrt()),
      reject_(m_.complement().sqrt()),
      projective_(m_.is_projector()) {}

TwoOutcomeMeasurement::TwoOutcomeMeasurement(const ComplexMatrix& m)
    : TwoOutcomeMeasurement(PsdOperator(m, true)) {}

TwoOutcomeMeasurement TwoOutcomeMeasurement::complement() const {
  return TwoOutcomeMeasurement(m_.complement());
}

double TwoOutcomeMeasurement::accept_probability(const DensityMatrix& rho) const {
  if (rho.dim() != dim()) {
    throw std::invalid_argument("accept_probability: dimension mismatch");
  }
  return std::real((m_.matrix() * rho.matrix()).trace());
}

MeasurementEnsemble::MeasurementEnsemble(std::vector<TwoOutcomeMeasurement> ms,
                                         std::vector<std::string> labels)
    : ms_(std::move(ms)), labels_(std::move(labels)) {
  if (ms_.empty()) {
    throw std::invalid_argument("MeasurementEnsemble: at least one measurement");
  }
  const Eigen::Index d = ms_.front().dim();
  for (const auto& m : ms_) {
    if (m.dim() != d) {
      throw std::invalid_argument("MeasurementEnsemble: mixed dimensions");
    }
  }
  if (labels_.empty()) {
    labels_.reserve(ms_.size());
    for (std::size_t i = 0; i < ms_.size(); ++i) {
      labels_.push_back("M" + std::to_string(i + 1));
    }
  } else if (labels_.size() != ms_.size()) {
    throw std::invalid_argument("MeasurementEnsemble: label count mismatch");
  }
}

bool MeasurementEnsemble::all_projective() const {
  for (const auto& m : ms_) {
    if (!m.projective()) return false;
  }
  return true;
}

ComplexMatrix MeasurementEnsemble::mean_operator() const {
  ComplexMatrix acc = ComplexMatrix::Zero(dim(), dim());
  for (const auto& m : ms_) acc += m.op().matrix();
  return acc / static_cast<double>(size());
}

MeasurementEnsemble complement_ensemble(const MeasurementEnsemble& ens) {
  std::vector<TwoOutcomeMeasurement> out;
  out.reserve(ens.size());
  for (const auto& m : ens.measurements()) out.push_back(m.complement());
  std::vector<std::string> labels;
  labels.reserve(ens.size());
  for (const auto& l : ens.labels()) labels.push_back("not_" + l);
  return MeasurementEnsemble(std::move(out), std::move(labels));
}

BlendedMeasurement::BlendedMeasurement(const MeasurementEnsemble& ens)
    : source_(std::make_shared<MeasurementEnsemble>(ens)) {
  const double m = static_cast<double>(ens.size());
  e_ops_.reserve(ens.size() + 1);
  ComplexMatrix rest =
      ComplexMatrix::Identity(ens.dim(), ens.dim()) - ens.mean_operator();
  e_ops_.push_back(PsdOperator(rest, true).sqrt());
  for (const auto& meas : ens.measurements()) {
    e_ops_.push_back(PsdOperator(meas.op().matrix() / m, true).sqrt());
  }
}

double BlendedMeasurement::completeness_residual() const {
  ComplexMatrix acc = ComplexMatrix::Zero(dim(), dim());
  for (const auto& e : e_ops_) {
    acc += e.matrix() * e.matrix();
  }
  return frobenius(acc - ComplexMatrix::Identity(dim(), dim()));
}

BlendedMeasurement make_blended(const MeasurementEnsemble& ens) {
  return BlendedMeasurement(ens);
}

ProductEnumerator::ProductEnumerator(std::vector<ComplexMatrix> factors, int k,
                                     std::uint64_t cap)
    : factors_(std::move(factors)), k_(k) {
  if (factors_.empty()) {
    throw std::invalid_argument("ProductEnumerator: empty factor set");
  }
  if (k_ < 0) {
    throw std::invalid_argument("ProductEnumerator: negative length");
  }
  dim_ = factors_.front().rows();
  for (const auto& f : factors_) {
    if (f.rows() != dim_ || f.cols() != dim_) {
      throw std::invalid_argument("ProductEnumerator: factors must be square, same dim");
    }
  }
  const std::uint64_t m = factors_.size();
  total_ = 1;
  for (int i = 0; i < k_; ++i) {
    if (total_ > cap / m) {
      throw std::length_error(
          "exact enumeration infeasible: m^k exceeds cap, use Monte Carlo");
    }
    total_ *= m;
  }
  if (total_ > cap) {
    throw std::length_error(
        "exact enumeration infeasible: m^k exceeds cap, use Monte Carlo");
  }
  end_ = total_;
  indices_.assign(static_cast<std::size_t>(k_), 0);
  prefix_.assign(static_cast<std::size_t>(k_) + 1,
                 ComplexMatrix::Identity(dim_, dim_));
}

void ProductEnumerator::rebuild_from(int pos) {
  for (int j = pos; j < k_; ++j) {
    prefix_[static_cast<std::size_t>(j) + 1] =
        prefix_[static_cast<std::size_t>(j)] *
        factors_[static_cast<std::size_t>(indices_[static_cast<std::size_t>(j)])];
  }
}

void ProductEnumerator::seek(std::uint64_t linear) {
  cursor_ = linear;
  started_ = false;
}

bool ProductEnumerator::next() {
  if (cursor_ >= end_) return false;
  const std::uint64_t m = factors_.size();
  std::uint64_t rem = cursor_;
  int first_changed = started_ ? k_ : 0;
  for (int j = k_ - 1; j >= 0; --j) {
    const int digit = static_cast<int>(rem % m);
    rem /= m;
    if (digit != indices_[static_cast<std::size_t>(j)]) {
      indices_[static_cast<std::size_t>(j)] = digit;
      first_changed = j;
    }
  }
  if (!started_) first_changed = 0;
  rebuild_from(first_changed);
  started_ = true;
  ++cursor_;
  return true;
}

std::vector<ComplexMatrix> measurement_operators(const MeasurementEnsemble& ens) {
  std::vector<ComplexMatrix> out;
  out.reserve(ens.size());
  for (const auto& m : ens.measurements()) out.push_back(m.op().matrix());
  return out;
}

std::vector<ComplexMatrix> complement_operators(const MeasurementEnsemble& ens) {
  std::vector<ComplexMatrix> out;
  out.reserve(ens.size());
  const ComplexMatrix id = ComplexMatrix::Identity(ens.dim(), ens.dim());
  for (const auto& m : ens.measurements()) out.push_back(id - m.op().matrix());
  return out;
}

ProductEnumerator enumerate_products(const MeasurementEnsemble& ens, int k,
                                     std::uint64_t cap) {
  return ProductEnumerator(measurement_operators(ens), k, cap);
}

}  // namespace qevent
