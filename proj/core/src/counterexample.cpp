#include "qevent/counterexample.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "qevent/parallel.hpp"

namespace qevent {

namespace {

using Matrix2 = Eigen::Matrix2cd;
using Vector2 = Eigen::Vector2cd;

Matrix2 spectral_map(const Matrix2& hermitian, double (*f)(double)) {
  Eigen::SelfAdjointEigenSolver<Matrix2> solver(hermitian);
  Eigen::Vector2d mapped;
  mapped(0) = f(solver.eigenvalues()(0));
  mapped(1) = f(solver.eigenvalues()(1));
  return solver.eigenvectors() * mapped.asDiagonal() *
         solver.eigenvectors().adjoint();
}

double clamped_sqrt(double v) { return std::sqrt(std::max(v, 0.0)); }
double inv_fourth_root(double v) { return std::pow(v, -0.25); }

double expect(const Matrix2& op, const Vector2& v) {
  return std::real((v.adjoint() * op * v)(0, 0));
}

double trace_with(const Matrix2& op, const Matrix2& sigma) {
  return std::real((op * sigma).trace());
}

void fill_instrument(CounterexampleInstance& inst, double eps) {
  const double g = (1.0 + eps - eps * eps * eps - std::pow(eps, 4)) / (1.0 + eps);
  Vector2 one;
  one << 0.0, 1.0;
  Vector2 u_b;  // |0> + e |1>
  u_b << 1.0, eps;
  Vector2 u_a;  // |0> - e^2 |1>
  u_a << 1.0, -eps * eps;

  inst.reject_op = std::sqrt(g) * (one * one.adjoint());
  inst.accept_b_op =
      spectral_map((eps / (1.0 + eps)) * (u_b * u_b.adjoint()), clamped_sqrt);
  inst.accept_a_op =
      spectral_map((1.0 / (1.0 + eps)) * (u_a * u_a.adjoint()), clamped_sqrt);

  inst.proj_a = (u_a * u_a.adjoint()) / u_a.squaredNorm();
  inst.proj_b = (u_b * u_b.adjoint()) / u_b.squaredNorm();

  inst.psi << eps, -1.0;
  inst.psi /= inst.psi.norm();

  const Matrix2 completeness = inst.reject_op * inst.reject_op +
                               inst.accept_b_op * inst.accept_b_op +
                               inst.accept_a_op * inst.accept_a_op;
  if ((completeness - Matrix2::Identity()).norm() > 1e-8) {
    throw std::runtime_error(
        "counterexample instrument violates completeness beyond 1e-8");
  }
}

}  // namespace

MeasurementEnsemble CounterexampleInstance::expanded_ensemble(
    std::int64_t max_total) const {
  const std::int64_t total = size_a + size_b;
  if (total > max_total) {
    throw std::length_error(
        "expanded_ensemble: multiset too large; use the scalar dynamics");
  }
  const ComplexMatrix op_a = (kind == CounterexampleKind::Blended)
                                 ? ComplexMatrix(proj_a)
                                 : ComplexMatrix(m_a);
  const ComplexMatrix op_b = (kind == CounterexampleKind::Blended)
                                 ? ComplexMatrix(proj_b)
                                 : ComplexMatrix(m_b);
  std::vector<TwoOutcomeMeasurement> ms;
  std::vector<std::string> labels;
  ms.reserve(static_cast<std::size_t>(total));
  for (std::int64_t i = 0; i < size_a; ++i) {
    ms.emplace_back(PsdOperator(op_a, true));
    labels.push_back("A" + std::to_string(i + 1));
  }
  for (std::int64_t i = 0; i < size_b; ++i) {
    ms.emplace_back(PsdOperator(op_b, true));
    labels.push_back("B" + std::to_string(i + 1));
  }
  return MeasurementEnsemble(std::move(ms), std::move(labels));
}

CounterexampleInstance build_blended_counterexample(double eps) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw std::invalid_argument("build_blended_counterexample: need 0 < eps < 1/2");
  }
  CounterexampleInstance inst;
  inst.kind = CounterexampleKind::Blended;
  inst.eps = eps;
  fill_instrument(inst, eps);
  inst.size_a = static_cast<std::int64_t>(std::ceil(std::pow(eps, -3.0)));
  inst.size_b = static_cast<std::int64_t>(std::ceil(std::pow(eps, -2.0)));
  return inst;
}

CounterexampleInstance build_random_counterexample(double eps,
                                                   std::int64_t copies_a) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw std::invalid_argument("build_random_counterexample: need 0 < eps < 1/2");
  }
  CounterexampleInstance inst;
  inst.kind = CounterexampleKind::Random;
  inst.eps = eps;
  fill_instrument(inst, eps);

  inst.m_b = inst.accept_b_op * inst.accept_b_op;
  const Matrix2 not_m_b = Matrix2::Identity() - inst.m_b;
  Eigen::SelfAdjointEigenSolver<Matrix2> guard(not_m_b);
  if (guard.eigenvalues()(0) < 1e-8) {
    throw std::domain_error(
        "build_random_counterexample: I - E2^2 is numerically singular");
  }
  const Matrix2 conditioner = spectral_map(not_m_b, inv_fourth_root);
  const Matrix2 k_op = conditioner * inst.reject_op * conditioner;
  Matrix2 m_a = Matrix2::Identity() - k_op * k_op;
  Eigen::SelfAdjointEigenSolver<Matrix2> spectrum(m_a);
  if (spectrum.eigenvalues()(0) < -1e-8 ||
      spectrum.eigenvalues()(1) > 1.0 + 1e-8) {
    throw std::domain_error(
        "build_random_counterexample: M_A spectrum escapes [0, 1]");
  }
  Eigen::Vector2d clamped;
  clamped(0) = std::clamp(spectrum.eigenvalues()(0), 0.0, 1.0);
  clamped(1) = std::clamp(spectrum.eigenvalues()(1), 0.0, 1.0);
  inst.m_a = spectrum.eigenvectors() * clamped.asDiagonal() *
             spectrum.eigenvectors().adjoint();

  inst.sqrt_m_a = spectral_map(inst.m_a, clamped_sqrt);
  inst.sqrt_m_b = spectral_map(inst.m_b, clamped_sqrt);
  inst.sqrt_not_m_a =
      spectral_map(Matrix2::Identity() - inst.m_a, clamped_sqrt);
  inst.sqrt_not_m_b = spectral_map(not_m_b, clamped_sqrt);

  inst.size_a = (copies_a > 0)
                    ? copies_a
                    : static_cast<std::int64_t>(
                          std::ceil(20.0 * std::pow(eps, -3.0)));
  inst.size_b = inst.size_a;
  return inst;
}

namespace {

// One shot of the blended instrument; returns (accepted, first accept in B).
std::pair<bool, bool> blended_shot(const CounterexampleInstance& inst,
                                   std::int64_t rounds, SplitRng& rng) {
  const Matrix2 e1_sq = inst.reject_op * inst.reject_op;
  const Matrix2 e2_sq = inst.accept_b_op * inst.accept_b_op;
  Vector2 v = inst.psi;
  for (std::int64_t round = 0; round < rounds; ++round) {
    const double p_reject = expect(e1_sq, v);
    const double p_b = expect(e2_sq, v);
    const double total = 1.0;  // completeness; dust folded into the draw
    const double u = rng.uniform() * total;
    if (u < p_b) return {true, true};
    if (u < p_b + (1.0 - p_reject - p_b)) return {true, false};
    v = inst.reject_op * v;
    v /= v.norm();
  }
  return {false, false};
}

std::pair<bool, bool> random_shot(const CounterexampleInstance& inst,
                                  std::int64_t rounds, SplitRng& rng) {
  const double w_a = static_cast<double>(inst.size_a) /
                     static_cast<double>(inst.size_a + inst.size_b);
  Vector2 v = inst.psi;
  for (std::int64_t round = 0; round < rounds; ++round) {
    const bool pick_a = rng.uniform() < w_a;
    const Matrix2& m = pick_a ? inst.m_a : inst.m_b;
    const double p = expect(m, v);
    if (rng.bernoulli(p)) return {true, !pick_a};
    const Matrix2& kraus = pick_a ? inst.sqrt_not_m_a : inst.sqrt_not_m_b;
    v = kraus * v;
    v /= v.norm();
  }
  return {false, false};
}

}  // namespace

CounterexampleRun run_counterexample(const CounterexampleInstance& inst,
                                     std::int64_t rounds,
                                     const EngineConfig& config) {
  if (config.shots < 1) {
    throw std::invalid_argument("run_counterexample: shots must be >= 1");
  }
  const std::int64_t r = rounds > 0 ? rounds : inst.default_rounds();
  std::atomic<std::int64_t> accepted{0};
  std::atomic<std::int64_t> first_in_b{0};
  parallel_for(config.shots, config.threads, [&](std::int64_t shot) {
    SplitRng rng = SplitRng::for_stream(config.rng_seed,
                                        static_cast<std::uint64_t>(shot));
    const auto [accepted_shot, in_b] =
        (inst.kind == CounterexampleKind::Blended)
            ? blended_shot(inst, r, rng)
            : random_shot(inst, r, rng);
    if (accepted_shot) {
      accepted.fetch_add(1, std::memory_order_relaxed);
      if (in_b) first_in_b.fetch_add(1, std::memory_order_relaxed);
    }
  });
  CounterexampleRun run;
  run.shots = config.shots;
  run.rounds = r;
  run.accepted = accepted.load();
  run.first_in_b = first_in_b.load();
  run.accept_rate =
      static_cast<double>(run.accepted) / static_cast<double>(run.shots);
  run.accept_halfwidth99 = hoeffding_halfwidth99(run.shots);
  if (run.accepted > 0) {
    run.first_in_b_rate =
        static_cast<double>(run.first_in_b) / static_cast<double>(run.accepted);
    run.first_in_b_halfwidth99 = hoeffding_halfwidth99(run.accepted);
  }
  return run;
}

CounterexampleExactRates counterexample_rates_exact(
    const CounterexampleInstance& inst, std::int64_t rounds) {
  const std::int64_t r = rounds > 0 ? rounds : inst.default_rounds();
  Matrix2 sigma = inst.psi * inst.psi.adjoint();  // unnormalized survivor
  CounterexampleExactRates rates;
  if (inst.kind == CounterexampleKind::Blended) {
    const Matrix2 e2_sq = inst.accept_b_op * inst.accept_b_op;
    const Matrix2 e3_sq = inst.accept_a_op * inst.accept_a_op;
    for (std::int64_t j = 0; j < r; ++j) {
      rates.first_in_b += trace_with(e2_sq, sigma);
      rates.first_in_a += trace_with(e3_sq, sigma);
      sigma = inst.reject_op * sigma * inst.reject_op;
    }
  } else {
    const double w_a = static_cast<double>(inst.size_a) /
                       static_cast<double>(inst.size_a + inst.size_b);
    const double w_b = 1.0 - w_a;
    for (std::int64_t j = 0; j < r; ++j) {
      rates.first_in_b += w_b * trace_with(inst.m_b, sigma);
      rates.first_in_a += w_a * trace_with(inst.m_a, sigma);
      sigma = w_a * (inst.sqrt_not_m_a * sigma * inst.sqrt_not_m_a) +
              w_b * (inst.sqrt_not_m_b * sigma * inst.sqrt_not_m_b);
    }
  }
  rates.accept = rates.first_in_a + rates.first_in_b;
  rates.conditional_b =
      (rates.accept > 1e-300) ? rates.first_in_b / rates.accept : 0.0;
  return rates;
}

double blended_counterexample_accept_exact(const CounterexampleInstance& inst,
                                           std::int64_t k) {
  Eigen::SelfAdjointEigenSolver<Matrix2> solver(inst.reject_op);
  double survival = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double lambda = std::max(solver.eigenvalues()(i), 0.0);
    const double weight =
        std::norm((solver.eigenvectors().col(i).adjoint() * inst.psi)(0, 0));
    survival += weight * std::pow(lambda, 2.0 * static_cast<double>(k));
  }
  return 1.0 - survival;
}

double blended_counterexample_first_in_b_exact(
    const CounterexampleInstance& inst, std::int64_t k) {
  const Matrix2 e2_sq = inst.accept_b_op * inst.accept_b_op;
  Matrix2 sigma = inst.psi * inst.psi.adjoint();
  double total = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    total += trace_with(e2_sq, sigma);
    sigma = inst.reject_op * sigma * inst.reject_op;
  }
  return total;
}

double alternation_first_b_exact(const CounterexampleInstance& inst,
                                 std::int64_t k) {
  if (inst.kind != CounterexampleKind::Random) {
    throw std::invalid_argument(
        "alternation_first_b_exact: random-kind instance required");
  }
  Matrix2 sigma = inst.psi * inst.psi.adjoint();
  double total = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    total += trace_with(inst.m_b, sigma);
    sigma = inst.sqrt_not_m_b * sigma * inst.sqrt_not_m_b;
    sigma = inst.sqrt_not_m_a * sigma * inst.sqrt_not_m_a;
  }
  return total;
}

}  // namespace qevent
