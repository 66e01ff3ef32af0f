#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace dbobs {
namespace {

using testing::Rng;

const double kCbrt2 = std::cbrt(2.0);
const double kSqrt2 = std::sqrt(2.0);

double rel(const Vector3& got, const Vector3& want) {
  return (got - want).norm() / std::max(want.norm(), std::numeric_limits<double>::min());
}

Vector3 normal3(Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return {nd(rng), nd(rng), nd(rng)};
}

/// Log-uniform in [1e-2, 1e2].
double log_uniform(Rng& rng) { return std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 2.0)(rng)); }

Vector3 positive3(Rng& rng) { return {log_uniform(rng), log_uniform(rng), log_uniform(rng)}; }

// homogeneous example ------------------------------------------------------

TEST(HomogF, Examples) {
  EXPECT_EQ(homog_f({1, 1, 1}), Vector3(1, 1, 2));
  EXPECT_EQ(homog_f({0, 0, 0}), Vector3(0, 0, 0));
  EXPECT_LT((homog_f({1, 1, 2}) - Vector3(1, kCbrt2, 2)).norm(), 1e-15);
}

TEST(HomogF, CubeRootKeepsSign) {
  EXPECT_DOUBLE_EQ(homog_f({0, 0, -8})(1), -2.0);
  EXPECT_DOUBLE_EQ(homog_f_inverse({1, 0, -7})(0), -2.0);
}

TEST(HomogFInverse, Examples) {
  EXPECT_EQ(homog_f_inverse({1, 1, 2}), Vector3(1, 1, 1));
  EXPECT_EQ(homog_f_inverse({0, 0, 0}), Vector3(0, 0, 0));
}

TEST(HomogFInverse, RoundTripIncludingNegativeCoordinates) {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector3 x = normal3(rng) * 3.0;
    EXPECT_LT(rel(homog_f(homog_f_inverse(x)), x), 1e-10) << x.transpose();
    EXPECT_LT(rel(homog_f_inverse(homog_f(x)), x), 1e-10) << x.transpose();
  }
}

TEST(HomogObserverStep, Examples) {
  EXPECT_EQ(homog_observer_step({0, 0, 0}, 1), Vector3(0, 1, 1));
  EXPECT_LT((homog_observer_step({0, 1, 1}, 1) - Vector3(1, kCbrt2, 2)).norm(), 1e-15);
  const Vector3 x(0.4, -1.2, 2.5);
  EXPECT_LT(rel(homog_observer_step(x, homog_h(x)), homog_f(x)), 1e-15);
}

TEST(HomogObserverStep, IsFOfClassIntersection) {
  Rng rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector3 xhat = normal3(rng);
    const double y = normal3(rng)(0);
    const Vector3 meet = homog_class_intersection(xhat, y);
    EXPECT_EQ(meet(0), y);
    EXPECT_LT(rel(homog_observer_step(xhat, y), homog_f(meet)), 1e-14);
  }
}

TEST(Dilation, Examples) {
  const Vector3 x(0.3, -2, 5);
  EXPECT_EQ(dilation_apply(1.0, x), x);
  EXPECT_EQ(dilation_apply(0.0, x), Vector3::Zero());
  EXPECT_EQ(dilation_apply(2.0, {1, 1, 1}), Vector3(2, 2, 8));
}

// example with input -------------------------------------------------------

TEST(InputF, Examples) {
  EXPECT_LT((input_f({1, 2, 1}, 4) - Vector3(2, 1, 2 * kSqrt2)).norm(), 1e-15);
  EXPECT_EQ(input_f({1, 1, 1}, 1), Vector3(1, 1, 1));
}

TEST(InputF, PreimageIdentity) {
  Rng rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector3 x = positive3(rng);
    const double u = log_uniform(rng);
    EXPECT_LT(rel(input_f(input_f_preimage(x, u), u), x), 1e-12);
  }
}

TEST(InputF, DomainErrors) {
  EXPECT_THROW(input_f({0, 1, 1}, 1), DomainError);
  EXPECT_THROW(input_f({1, -1, 1}, 1), DomainError);
  EXPECT_THROW(input_f({1, 1, 1}, 0), DomainError);
  EXPECT_THROW(input_f({1, 1, 1e-301}, 1), DomainError);
  EXPECT_THROW(input_observer_step({1, 1, 1}, -2, 1), DomainError);
}

TEST(InputObserverStep, WorkedTrace) {
  EXPECT_LT((input_observer_step({1, 1, 1}, 1, 4) - Vector3(1, 1, 2)).norm(), 1e-15);
  EXPECT_LT((input_observer_step({1, 1, 2}, 2, 4) - Vector3(4, 2, 2)).norm(), 1e-15);
  EXPECT_LT((input_observer_step({4, 2, 2}, 4 * kSqrt2, 4) - Vector3(16 * kSqrt2, 0.5, 4 * kSqrt2)).norm(), 1e-13);
}

TEST(InputObserverStep, IsFOfClassIntersection) {
  Rng rng(104);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector3 xhat = positive3(rng);
    const double y = log_uniform(rng);
    const double u = log_uniform(rng);
    const Vector3 meet = input_class_intersection(xhat, y);
    EXPECT_EQ(meet(0), y);
    EXPECT_LT(rel(input_observer_step(xhat, y, u), input_f(meet, u)), 1e-13);
  }
}

// run_observer -------------------------------------------------------------

TEST(RunObserver, HomogeneousHandTrace) {
  const NonlinearTrace trace = run_observer(homogeneous_system(), Vector3(1, 1, 1), Vector3(0, 0, 0), {}, 6);
  ASSERT_EQ(trace.size(), 7u);
  EXPECT_TRUE(trace.inputs.empty());
  EXPECT_LT((trace.observer_states[1] - Vector3(0, 1, 1)).norm(), 1e-15);
  EXPECT_LT((trace.observer_states[2] - Vector3(1, kCbrt2, 2)).norm(), 1e-12);
  EXPECT_LT((trace.plant_states[2] - Vector3(1, kCbrt2, 2)).norm(), 1e-12);
  for (std::size_t k = 2; k < trace.size(); ++k) EXPECT_LE(trace.errors[k], 1e-12 * trace.plant_states[k].norm());
  EXPECT_EQ(trace.deadbeat_horizon, 2);
}

TEST(RunObserver, InputHandTrace) {
  const std::vector<double> u(6, 4.0);
  const NonlinearTrace trace = run_observer(with_input_system(), Vector3(1, 2, 1), Vector3(1, 1, 1), u, 5);
  ASSERT_EQ(trace.inputs.size(), trace.size());
  const Vector3 phi3(16 * kSqrt2, 0.5, 4 * kSqrt2);
  EXPECT_LT((trace.plant_states[3] - phi3).norm(), 1e-12);
  EXPECT_LT((trace.observer_states[3] - phi3).norm(), 1e-12);
  EXPECT_GT(trace.errors[2], 1.0);
  EXPECT_EQ(trace.deadbeat_horizon, 3);
}

TEST(RunObserver, ExactEstimateStaysAtRoundoff) {
  Rng rng(105);
  const Vector3 x = normal3(rng);
  const NonlinearTrace t1 = run_observer(homogeneous_system(), x, x, {}, 5);
  for (std::size_t k = 0; k < t1.size(); ++k) EXPECT_LE(t1.errors[k], 1e-13 * t1.plant_states[k].norm());
  const Vector3 p = positive3(rng);
  const NonlinearTrace t2 = run_observer(with_input_system(), p, p, std::vector<double>(5, 2.0), 5);
  for (std::size_t k = 0; k < t2.size(); ++k) EXPECT_LE(t2.errors[k], 1e-13 * t2.plant_states[k].norm());
}

TEST(RunObserver, DomainViolationNamesTheStep) {
  try {
    run_observer(with_input_system(), Vector3(1, 1, 1), Vector3(1, 1, 1), {1.0, -1.0, 1.0, 1.0}, 3);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(run_observer(with_input_system(), Vector3(1, 0, 1), Vector3(1, 1, 1), {1, 1, 1}, 3), DomainError);
}

TEST(RunObserver, RejectsShortRunsAndMissingInputs) {
  EXPECT_THROW(run_observer(homogeneous_system(), Vector3(1, 1, 1), Vector3(0, 0, 0), {}, 2), InvalidInput);
  EXPECT_THROW(run_observer(with_input_system(), Vector3(1, 1, 1), Vector3(1, 1, 1), {1.0, 1.0}, 3), InvalidInput);
  EXPECT_THROW(system_by_name("lorenz"), InvalidInput);
}

TEST(RunObserver, ExactlySizedInputLeavesLastEntryUnset) {
  const NonlinearTrace trace = run_observer(with_input_system(), Vector3(1, 2, 1), Vector3(1, 1, 1), {4, 4, 4}, 3);
  ASSERT_EQ(trace.inputs.size(), 4u);
  EXPECT_TRUE(std::isnan(trace.inputs.back()));
}

// properties ---------------------------------------------------------------

TEST(NonlinearProperties, PlantHomogeneity) {
  Rng rng(111);
  std::uniform_real_distribution<double> lam(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double l = lam(rng);
    const Vector3 x = normal3(rng);
    EXPECT_LT(rel(homog_f(dilation_apply(l, x)), dilation_apply(l, homog_f(x))), 1e-9);
    EXPECT_NEAR(homog_h(dilation_apply(l, x)), l * homog_h(x), 1e-9 * std::abs(l * homog_h(x)));
  }
}

TEST(NonlinearProperties, ObserverHomogeneity) {
  Rng rng(112);
  std::uniform_real_distribution<double> lam(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double l = lam(rng);
    const Vector3 xhat = normal3(rng);
    const double y = normal3(rng)(0);
    EXPECT_LT(rel(homog_observer_step(dilation_apply(l, xhat), l * y), dilation_apply(l, homog_observer_step(xhat, y))),
              1e-9);
  }
}

TEST(NonlinearProperties, ClassIntersectionAtTrueStateIsTheState) {
  Rng rng(113);
  const ObservedSystem hom = homogeneous_system();
  const ObservedSystem inp = with_input_system();
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = normal3(rng);
    EXPECT_LT(testing::rel_err(hom.class_intersection(x, hom.output(x)), x), 1e-14);
    const Vector p = positive3(rng);
    EXPECT_LT(testing::rel_err(inp.class_intersection(p, inp.output(p)), p), 1e-14);
  }
}

TEST(NonlinearProperties, DeadbeatFromRandomStarts) {
  Rng rng(114);
  for (int trial = 0; trial < 100; ++trial) {
    const NonlinearTrace h = run_observer(homogeneous_system(), normal3(rng), normal3(rng), {}, 8);
    for (std::size_t k = 3; k < h.size(); ++k) {
      EXPECT_LE(h.errors[k], 1e-8 * h.plant_states[k].norm()) << "homogeneous trial " << trial << " k=" << k;
    }
    std::vector<double> u(5);
    for (double& v : u) v = log_uniform(rng);
    const NonlinearTrace w = run_observer(with_input_system(), positive3(rng), positive3(rng), u, 5);
    for (std::size_t k = 3; k < w.size(); ++k) {
      EXPECT_LE(w.errors[k], 1e-8 * w.plant_states[k].norm()) << "with-input trial " << trial << " k=" << k;
    }
  }
}

}  // namespace
}  // namespace dbobs
