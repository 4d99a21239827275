#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qevent/protocols.hpp"

using namespace qevent;

namespace {

DensityMatrix basis_state(Eigen::Index d, Eigen::Index i) {
  ComplexVector v = ComplexVector::Zero(d);
  v(i) = 1.0;
  return DensityMatrix::pure(v);
}

MeasurementEnsemble example_pair() {
  // rank-one projector onto the first basis vector plus |+><+|; the mean
  // operator is [[3/4, 1/4], [1/4, 1/4]] with eigenvalues (2 +- sqrt 2)/4
  ComplexMatrix target = ComplexMatrix::Zero(2, 2);
  target(0, 0) = 1.0;
  ComplexMatrix plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  return MeasurementEnsemble(
      {TwoOutcomeMeasurement(target), TwoOutcomeMeasurement(plus)});
}

}  // namespace

TEST_CASE("planted generators: weights land where requested") {
  OrInstance one = make_case_one_instance(4, 6, 0.1, 0.5, 11);
  CHECK(one.p_down() == doctest::Approx(0.9).epsilon(1e-10));
  CHECK(one.p_up() == doctest::Approx(1.4).epsilon(1e-10));
  CHECK(one.beta() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(one.good_indices().size() == 1);
  CHECK(one.ensemble().all_projective());

  OrInstance two = make_case_two_instance(4, 5, 0.05, 13);
  CHECK(two.p_up() == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(two.tag() == CaseTag::Two);
}

TEST_CASE("OrInstance: tags are validated") {
  OrInstance two = make_case_two_instance(3, 3, 0.04, 5);
  CHECK_THROWS_AS(OrInstance(two.ensemble(), two.state(), CaseTag::One,
                             /*eps=*/0.05, /*delta=*/1.0),
                  std::invalid_argument);
}

TEST_CASE("or-blended: m copies of one projector accept with probability p") {
  // E0 is then a projector, so B(m) collapses to the single-shot weight.
  SplitRng rng(3);
  PsdOperator proj = random_projector(3, 1, rng);
  DensityMatrix rho = random_state(3, rng);
  std::vector<TwoOutcomeMeasurement> copies(4, TwoOutcomeMeasurement(proj));
  MeasurementEnsemble ens(std::move(copies));
  const double p =
      std::real((proj.matrix() * rho.matrix()).trace());
  const double bm = blended_exact(rho, ens, 4).accept_prob;
  CHECK(bm == doctest::Approx(p).epsilon(1e-10));
}

TEST_CASE("or-blended bounds: exact accept probability obeys Thm-style bounds") {
  OrInstance one = make_case_one_instance(4, 6, 0.1, 0.5, 17);
  const double bm =
      blended_exact(one.state(), one.ensemble(), 6).accept_prob;
  CHECK(bm >= 0.9 * 0.9 / 4.0 - 1e-9);
  CHECK(bm <= one.p_up() + 1e-9);

  OrInstance two = make_case_two_instance(4, 6, 0.05, 19);
  const double bm2 =
      blended_exact(two.state(), two.ensemble(), 6).accept_prob;
  CHECK(bm2 <= 0.05 + 1e-9);
}

TEST_CASE("run_or_blended: sampler sits inside the interval around B(m)") {
  OrInstance one = make_case_one_instance(4, 6, 0.1, 0.5, 23);
  EngineConfig config{.rng_seed = 1, .shots = 20000, .halt_on_accept = true,
                      .threads = 2};
  OrAggregate agg = run_or_blended(one, config);
  CHECK(agg.bounds_hold);
  CHECK(std::abs(agg.accept_rate - agg.exact_accept) <= agg.halfwidth99);
}

TEST_CASE("run_or_random: identity ensemble always accepts") {
  TwoOutcomeMeasurement identity(
      PsdOperator(ComplexMatrix::Identity(2, 2), true));
  OrInstance inst(MeasurementEnsemble({identity}),
                  DensityMatrix::maximally_mixed(2), CaseTag::Unknown, 0.5,
                  1.0);
  EngineConfig config{.rng_seed = 2, .shots = 300, .halt_on_accept = true,
                      .threads = 1};
  OrAggregate agg = run_or_random(inst, config);
  CHECK(agg.accept_rate == 1.0);
}

TEST_CASE("run_or_random: case bounds hold empirically") {
  EngineConfig config{.rng_seed = 5, .shots = 20000, .halt_on_accept = true,
                      .threads = 2};
  const double sigma3 = 3.0 / (2.0 * std::sqrt(20000.0));

  OrInstance one = make_case_one_instance(4, 6, 0.1, 0.5, 29);
  OrAggregate agg1 = run_or_random(one, config);
  const double lower =
      std::min(0.9 * 0.9 / 4.5, (3.0 - std::sqrt(5.0)) / 4.0);
  CHECK(agg1.accept_rate >= lower - sigma3);

  OrInstance two = make_case_two_instance(4, 6, 0.05, 31);
  OrAggregate agg2 = run_or_random(two, config);
  CHECK(agg2.accept_rate <= 2.0 * 0.05 + sigma3);
}

TEST_CASE("run_or_random: refuses non-projective ensembles") {
  SplitRng rng(37);
  MeasurementEnsemble ens({TwoOutcomeMeasurement(random_effect(3, rng))});
  OrInstance inst(ens, random_state(3, rng), CaseTag::Unknown, 0.5, 1.0);
  EngineConfig config;
  CHECK_THROWS_AS(run_or_random(inst, config), std::invalid_argument);
  SplitRng rng2(38);
  CHECK_THROWS_AS(run_or_random_once(inst, rng2), std::invalid_argument);
}

TEST_CASE("event finding: certain single measurement is found and good") {
  TwoOutcomeMeasurement identity(
      PsdOperator(ComplexMatrix::Identity(2, 2), true));
  OrInstance inst(MeasurementEnsemble({identity}),
                  DensityMatrix::maximally_mixed(2), CaseTag::One, 0.1, 1.0);
  SplitRng rng(41);
  EventFindingResult res =
      run_event_finding_once(inst, SamplingMode::Blended, rng);
  CHECK(res.accepted);
  CHECK(res.first_index == 0);
  CHECK(res.good == true);
  CHECK(res.beta == doctest::Approx(0.0));
}

TEST_CASE("event finding: case-one lower bounds, blended and random") {
  EngineConfig config{.rng_seed = 7, .shots = 20000, .halt_on_accept = true,
                      .threads = 2};
  const double sigma3 = 3.0 / (2.0 * std::sqrt(20000.0));

  OrInstance inst = make_case_one_instance(4, 6, 0.1, 0.5, 43);
  EventFindingAggregate blended =
      run_event_finding(inst, SamplingMode::Blended, config);
  const double blended_lower = std::pow(0.9, 3) / (12.0 * 1.5);
  CHECK(blended.theorem_lower ==
        doctest::Approx(blended_lower).epsilon(1e-10));
  CHECK(blended.good_rate >= blended_lower - sigma3);
  CHECK(blended.bound_holds);

  EventFindingAggregate random =
      run_event_finding(inst, SamplingMode::Random, config);
  const double random_lower = std::pow(0.9, 7) / (1296.0 * std::pow(1.5, 3));
  CHECK(random.theorem_lower == doctest::Approx(random_lower).epsilon(1e-10));
  CHECK(random.good_rate >= random_lower - sigma3);
}

TEST_CASE("event finding: case-two accept stays under the cap") {
  EngineConfig config{.rng_seed = 11, .shots = 20000, .halt_on_accept = true,
                      .threads = 2};
  const double sigma3 = 3.0 / (2.0 * std::sqrt(20000.0));
  OrInstance two = make_case_two_instance(4, 6, 0.05, 47);
  EventFindingAggregate blended =
      run_event_finding(two, SamplingMode::Blended, config);
  CHECK(blended.accept_rate <= 0.05 + sigma3);
  EventFindingAggregate random =
      run_event_finding(two, SamplingMode::Random, config);
  CHECK(random.accept_rate <= 0.1 + sigma3);
}

TEST_CASE("event finding: empirical good rate tracks the exact engine") {
  OrInstance inst = make_case_one_instance(3, 4, 0.2, 0.4, 53);
  const double exact = exact_good_first_accept_blended(inst, 4);
  EngineConfig config{.rng_seed = 13, .shots = 40000, .halt_on_accept = true,
                      .threads = 2};
  EventFindingAggregate agg =
      run_event_finding(inst, SamplingMode::Blended, config);
  CHECK(std::abs(agg.good_rate - exact) <= agg.halfwidth99);

  const double exact_random = exact_good_first_accept_random(inst, 4);
  EventFindingAggregate agg_random =
      run_event_finding(inst, SamplingMode::Random, config);
  CHECK(std::abs(agg_random.good_rate - exact_random) <=
        agg_random.halfwidth99);
}

TEST_CASE("mean estimation: eigenstate input reduces to a binomial") {
  ComplexMatrix m(2, 2);
  m << 0.75, 0.25, 0.25, 0.25;
  EigenSystem sys = hermitian_eig(m);
  DensityMatrix rho = DensityMatrix::pure(sys.vectors.col(1));
  const double lambda = sys.values(1);

  VariancePrediction pred = mean_estimation_variance(rho, example_pair(), 5);
  CHECK(pred.sigma_sq == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pred.total ==
        doctest::Approx(lambda * (1.0 - lambda) / 5.0).epsilon(1e-10));

  SplitRng rng(59);
  double mean = 0.0;
  const int shots = 20000;
  for (int s = 0; s < shots; ++s) {
    mean += run_mean_estimation(rho, example_pair(), 5, 1, rng).estimate;
  }
  mean /= shots;
  CHECK(std::abs(mean - lambda) <= 0.01);
}

TEST_CASE("mean estimation: estimator is unbiased within four standard errors") {
  SplitRng seeder(61);
  MeasurementEnsemble ens = example_pair();
  DensityMatrix rho = random_state(2, seeder);
  const double truth =
      std::real((ens.mean_operator() * rho.matrix()).trace());
  SplitRng rng(67);
  const int shots = 40000;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < shots; ++s) {
    const double est = run_mean_estimation(rho, ens, 4, 2, rng).estimate;
    sum += est;
    sum_sq += est * est;
  }
  const double mean = sum / shots;
  const double var = (sum_sq - shots * mean * mean) / (shots - 1);
  const double se = std::sqrt(var / shots);
  CHECK(std::abs(mean - truth) <= 4.0 * se);
}

TEST_CASE("mean estimation: variance formula matches the exact count law") {
  SplitRng rng(71);
  MeasurementEnsemble ens = example_pair();
  for (int t = 1; t <= 8; ++t) {
    DensityMatrix rho = random_state(2, rng);
    VariancePrediction pred = mean_estimation_variance(rho, ens, t);
    const std::vector<double> pmf =
        mean_estimation_count_distribution(rho, ens, t);
    double mean = 0.0, second = 0.0, mass = 0.0;
    for (int x = 0; x <= t; ++x) {
      const double scaled = static_cast<double>(x) / t;
      mean += pmf[static_cast<std::size_t>(x)] * scaled;
      second += pmf[static_cast<std::size_t>(x)] * scaled * scaled;
      mass += pmf[static_cast<std::size_t>(x)];
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pred.total == doctest::Approx(second - mean * mean).epsilon(1e-10));
  }
}

TEST_CASE("mean estimation: count law matches the brute-force Kraus walk") {
  SplitRng rng(73);
  MeasurementEnsemble ens = example_pair();
  DensityMatrix rho = random_state(2, rng);
  for (int t : {1, 3, 5}) {
    const std::vector<double> formula =
        mean_estimation_count_distribution(rho, ens, t);
    const std::vector<double> walked =
        mean_estimation_count_distribution_bruteforce(rho, ens, t);
    REQUIRE(formula.size() == walked.size());
    for (std::size_t x = 0; x < formula.size(); ++x) {
      CHECK(formula[x] == doctest::Approx(walked[x]).epsilon(1e-12));
    }
  }
}

TEST_CASE("mean estimation: residual variance bound and the example numbers") {
  ComplexMatrix m(2, 2);
  m << 0.75, 0.25, 0.25, 0.25;
  EigenSystem sys = hermitian_eig(m);
  // equal-weight superposition of the extreme eigenvectors maximizes sigma^2
  ComplexVector worst =
      (sys.vectors.col(0) + sys.vectors.col(1)) / std::sqrt(2.0);
  VariancePrediction pred = mean_estimation_variance(
      DensityMatrix::pure(worst), example_pair(), 1000);
  CHECK(pred.sigma_sq_bound == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(pred.sigma_sq == doctest::Approx(0.125).epsilon(1e-10));
  CHECK(pred.sigma_sq <= pred.sigma_sq_bound + 1e-12);

  SplitRng rng(79);
  for (int trial = 0; trial < 10; ++trial) {
    DensityMatrix rho = random_state(2, rng);
    VariancePrediction p = mean_estimation_variance(rho, example_pair(), 3);
    CHECK(p.sigma_sq <= p.sigma_sq_bound + 1e-12);
  }
}

TEST_CASE("mean estimation: worst-case empirical variance stays near 1/8") {
  // large t on the worst-case pure state: the binomial part shrinks to
  // lambda(1-lambda)/t and the residual 1/8 dominates
  ComplexMatrix m(2, 2);
  m << 0.75, 0.25, 0.25, 0.25;
  EigenSystem sys = hermitian_eig(m);
  ComplexVector worst =
      (sys.vectors.col(0) + sys.vectors.col(1)) / std::sqrt(2.0);
  DensityMatrix rho = DensityMatrix::pure(worst);
  MeasurementEnsemble ens = example_pair();

  const int t = 1000;
  const int shots = 10000;
  SplitRng rng(89);
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < shots; ++s) {
    const double est = run_mean_estimation(rho, ens, t, 1, rng).estimate;
    sum += est;
    sum_sq += est * est;
  }
  const double mean = sum / shots;
  const double var = (sum_sq - shots * mean * mean) / (shots - 1);
  CHECK(var <= 0.125 + 0.01);
  CHECK(var >= 0.125 - 0.01);  // it concentrates at the residual, too
}

TEST_CASE("mean estimation: mixed input is refused") {
  CHECK_THROWS_AS(mean_estimation_variance(DensityMatrix::maximally_mixed(2),
                                           example_pair(), 3),
                  std::invalid_argument);
}

TEST_CASE("mean estimation: per-copy counts are consistent") {
  SplitRng rng(83);
  MeanEstimationReport report =
      run_mean_estimation(basis_state(2, 0), example_pair(), 6, 3, rng);
  CHECK(report.per_copy_counts.size() == 3);
  const int total =
      std::accumulate(report.per_copy_counts.begin(),
                      report.per_copy_counts.end(), 0);
  CHECK(report.estimate == doctest::Approx(total / 18.0).epsilon(1e-12));
  CHECK(report.estimate >= 0.0);
  CHECK(report.estimate <= 1.0);
}
