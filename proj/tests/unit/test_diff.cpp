#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "nfa/diff/adam.hpp"
#include "nfa/diff/losses.hpp"
#include "nfa/diff/ops.hpp"
#include "nfa/diff/parameter_set.hpp"
#include "support.hpp"

using namespace nfa;
using diff::Tensor;

namespace {

void expect_values(const Tensor& t, std::vector<double> expected, double tol = 0.0) {
  ASSERT_EQ(t.numel(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t.at(i), expected[i], tol) << i;
}

Tensor rand_param(std::mt19937_64& rng, diff::Shape shape) {
  return Tensor::parameter(shape, testkit::random_values(rng, diff::numel(shape)));
}

}  // namespace

TEST(Ops, MatmulIdentity) {
  auto a = Tensor::constant({2, 2}, {1, 2, 3, 4});
  auto i = Tensor::constant({2, 2}, {1, 0, 0, 1});
  expect_values(diff::matmul(a, i), {1, 2, 3, 4});
}

TEST(Ops, SoftmaxSymmetric) {
  expect_values(diff::softmax_lastdim(Tensor::constant({3}, {0, 0, 0})), {1.0 / 3, 1.0 / 3, 1.0 / 3},
                1e-15);
}

TEST(Ops, Relu) { expect_values(diff::relu(Tensor::constant({3}, {-1, 2, -3})), {0, 2, 0}); }

TEST(Ops, ShapeMismatchNamesOpAndShapes) {
  auto a = Tensor::constant({2, 3}, std::vector<double>(6, 1.0));
  auto b = Tensor::constant({2, 3}, std::vector<double>(6, 1.0));
  try {
    diff::matmul(a, b);
    FAIL() << "expected shape error";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(2,3)"), std::string::npos) << msg;
  }
}

TEST(Ops, NonFiniteRaisesInStrictMode) {
  auto x = Tensor::constant({2}, {1.0, 0.0});
  EXPECT_THROW(diff::log(x), std::domain_error);
  diff::FiniteModeScope lax(false);
  EXPECT_TRUE(std::isinf(diff::log(x).at(1)));
}

TEST(Ops, StraightThroughForwardIsOneHotBackwardIsIdentity) {
  auto soft = Tensor::parameter({3}, {0.2, 0.5, 0.3});
  auto hard = diff::straight_through(soft);
  expect_values(hard, {0, 1, 0});
  diff::backward(diff::sum(diff::mul(hard, Tensor::constant({3}, {1.5, -2.0, 0.25}))));
  expect_values(Tensor::constant({3}, std::vector<double>(soft.grad().begin(), soft.grad().end())),
                {1.5, -2.0, 0.25});
}

TEST(Backward, SumGradIsOnes) {
  auto x = Tensor::parameter({3}, {1, 2, 3});
  diff::backward(diff::sum(x));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SquareGrad) {
  auto x = Tensor::parameter({1}, {2});
  diff::backward(diff::sum(diff::mul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
}

TEST(Backward, NonScalarLossRejected) {
  auto x = Tensor::parameter({2}, {1, 2});
  EXPECT_THROW(diff::backward(diff::tanh(x)), std::invalid_argument);
}

TEST(Backward, EachNodeVisitedOnce) {
  auto x = Tensor::parameter({2}, {0.3, -0.2});
  auto t = diff::tanh(x);
  auto loss = diff::sum(diff::add(diff::mul(t, t), t));
  diff::backward(loss);
  EXPECT_EQ(t.backward_visits(), 1u);
  EXPECT_EQ(loss.backward_visits(), 1u);
}

TEST(Backward, DetachStopsGradient) {
  auto x = Tensor::parameter({2}, {0.3, -0.2});
  diff::backward(diff::sum(diff::mul(x.detach(), x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.3);
  EXPECT_DOUBLE_EQ(x.grad()[1], -0.2);
}

TEST(Backward, TwoLayerTanhNetworkMatchesFiniteDifference) {
  std::mt19937_64 rng(3);
  auto x = Tensor::constant({4, 5}, testkit::random_values(rng, 20));
  auto w1 = rand_param(rng, {5, 6});
  auto b1 = rand_param(rng, {6});
  auto w2 = rand_param(rng, {6, 3});
  auto b2 = rand_param(rng, {3});
  auto loss = [&] {
    auto h = diff::tanh(diff::add(diff::matmul(x, w1), b1));
    return diff::mean(diff::tanh(diff::add(diff::matmul(h, w2), b2)));
  };
  EXPECT_LT(testkit::gradcheck(loss, {w1, b1, w2, b2}).max_rel_error, 1e-4);
}

// Finite-difference check of every differentiable op kind over 20 seeds.
class OpGradcheck : public ::testing::TestWithParam<int> {};

TEST_P(OpGradcheck, AllOps) {
  const auto results = testkit::op_gradchecks(static_cast<std::uint64_t>(GetParam()));
  EXPECT_GE(results.size(), 20u);
  for (const auto& r : results) EXPECT_LT(r.error, 1e-4) << r.name << " seed " << GetParam();
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradcheck, ::testing::Range(0, 20));

TEST(Losses, UniformCrossEntropyIsLnL) {
  auto logits = Tensor::constant({2, 8}, std::vector<double>(16, 0.3));
  std::vector<int> labels{1, 7};
  EXPECT_NEAR(diff::nll_mean(diff::log_softmax_lastdim(logits), labels).item(), std::log(8.0), 1e-12);
}

TEST(Losses, LabelOutOfRange) {
  auto logits = Tensor::constant({1, 3}, {0, 0, 0});
  std::vector<int> labels{3};
  EXPECT_THROW(diff::nll_mean(logits, labels), std::invalid_argument);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  diff::ParameterSet ps;
  auto p = Tensor::parameter({2}, {1.0, -2.0});
  ps.add("p", p);
  diff::backward(diff::scale(diff::sum(p), 0.0));
  diff::AdamState st;
  diff::adam_step(ps, {.lr = 0.1}, st);
  EXPECT_EQ(p.at(0), 1.0);
  EXPECT_EQ(p.at(1), -2.0);
}

TEST(Adam, FirstStepPinned) {
  diff::ParameterSet ps;
  auto p = Tensor::parameter({1}, {0.5});
  ps.add("p", p);
  diff::backward(diff::sum(p));  // g = 1
  diff::AdamState st;
  diff::adam_step(ps, {.lr = 0.1, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8}, st);
  // m_hat = 1, v_hat = 1: step = 0.1 / (1 + 1e-8)
  EXPECT_NEAR(0.5 - p.at(0), 0.099999999000000010, 1e-16);
}

TEST(Adam, MissingGradientIsError) {
  diff::ParameterSet ps;
  ps.add("p", Tensor::parameter({1}, {0.5}));
  diff::AdamState st;
  EXPECT_THROW(diff::adam_step(ps, {.lr = 0.1}, st), std::logic_error);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    diff::ParameterSet ps;
    auto p = Tensor::parameter({3}, {0.1, 0.2, 0.3});
    ps.add("p", p);
    diff::AdamState st;
    for (int i = 0; i < 5; ++i) {
      ps.zero_grad();
      diff::backward(diff::sum(diff::mul(diff::tanh(p), p)));
      diff::adam_step(ps, {.lr = 0.01}, st);
    }
    return std::vector<double>(p.value().begin(), p.value().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(ParameterSet, CountsAndNames) {
  diff::ParameterSet ps;
  EXPECT_EQ(diff::param_count(ps), 0u);
  ps.add("w", Tensor::parameter({16, 16}, std::vector<double>(256, 0.0)));
  ps.add("b", Tensor::parameter({16}, std::vector<double>(16, 0.0)));
  EXPECT_EQ(diff::param_count(ps), 272u);
  EXPECT_THROW(ps.add("w", Tensor::parameter({1}, {0.0})), std::invalid_argument);
}
