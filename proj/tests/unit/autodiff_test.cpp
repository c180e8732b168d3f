#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gradcheck.hpp"
#include "naive_conv.hpp"
#include "trigan/autodiff/adam.hpp"
#include "trigan/autodiff/ops.hpp"

namespace trigan {
namespace {

using testing::gradcheck;
using testing::random_tensor;
using testing::weighted_sum;

constexpr int kInstances = 20;

TEST(Tensor, FactoriesAndShapes) {
    const Tensor z = Tensor::zeros({2, 3});
    EXPECT_EQ(z.numel(), 6u);
    EXPECT_EQ(z.rank(), 2u);
    EXPECT_FALSE(z.requires_grad());
    EXPECT_DOUBLE_EQ(Tensor::full({4}, 2.5).at(3), 2.5);
    EXPECT_DOUBLE_EQ(Tensor::scalar(7.0).item(), 7.0);
    EXPECT_THROW(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
    EXPECT_THROW(Tensor::from({0, 2}, {}), ShapeError);
    EXPECT_THROW(Tensor::zeros({2}).item(), ShapeError);
}

TEST(Tensor, CopiesShareStorageClonesDoNot) {
    Tensor a = Tensor::from({2}, {1.0, 2.0});
    Tensor b = a;
    Tensor c = a.clone();
    b.values()[0] = 9.0;
    EXPECT_DOUBLE_EQ(a.at(0), 9.0);
    EXPECT_DOUBLE_EQ(c.at(0), 1.0);
    EXPECT_TRUE(a.same_storage(b));
    EXPECT_FALSE(a.same_storage(c));
}

TEST(Tensor, DisablingGradDiscardsIt) {
    Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
    Graph g;
    g.backward(ops::sum(g, w));
    ASSERT_TRUE(w.has_grad());
    EXPECT_DOUBLE_EQ(w.grad()[0], 1.0);
    w.set_requires_grad(false);
    EXPECT_FALSE(w.has_grad());
    w.set_requires_grad(true);
    EXPECT_DOUBLE_EQ(w.grad()[0], 0.0);
}

TEST(Graph, LeafGradientsAccumulateAcrossBackwardPasses) {
    Tensor w = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
    Graph g;
    const Tensor loss = ops::sum(g, ops::mul(g, w, w));
    g.backward(loss);
    const std::vector<double> once(w.grad().begin(), w.grad().end());
    g.backward(loss);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(w.grad()[i], 2.0 * once[i]);
    w.zero_grad();
    EXPECT_EQ(w.grad()[0], 0.0);
}

TEST(Graph, UnreachedBranchesReceiveNothing) {
    Tensor a = Tensor::from({2}, {1.0, 2.0}, true);
    Tensor b = Tensor::from({2}, {3.0, 4.0}, true);
    Graph g;
    const Tensor used = ops::sum(g, a);
    const Tensor unused = ops::sum(g, b);
    (void)unused;
    g.backward(used);
    EXPECT_DOUBLE_EQ(a.grad()[1], 1.0);
    EXPECT_DOUBLE_EQ(b.grad()[0], 0.0);
    EXPECT_DOUBLE_EQ(b.grad()[1], 0.0);
}

TEST(Graph, RejectsNonScalarLoss) {
    Tensor a = Tensor::from({2}, {1.0, 2.0}, true);
    Graph g;
    EXPECT_THROW(g.backward(ops::tanh(g, a)), ShapeError);
}

TEST(Graph, ConstantsNeverGetGradients) {
    Tensor c = Tensor::from({2}, {1.0, 2.0});
    Tensor w = Tensor::from({2}, {0.5, 0.5}, true);
    Graph g;
    g.backward(ops::sum(g, ops::mul(g, c, w)));
    EXPECT_FALSE(c.has_grad());
    EXPECT_DOUBLE_EQ(w.grad()[1], 2.0);
}

TEST(Graph, DetachedTensorCutsTheGraph) {
    Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
    Graph g;
    const Tensor y = ops::mul(g, w, w);
    const Tensor cut = y.detached();
    EXPECT_FALSE(cut.requires_grad());
    Tensor v = Tensor::from({2}, {1.0, 1.0}, true);
    g.backward(ops::sum(g, ops::mul(g, cut, v)));
    EXPECT_DOUBLE_EQ(w.grad()[0], 0.0);
    EXPECT_DOUBLE_EQ(v.grad()[1], 4.0);
}

TEST(Ops, SoftmaxMatchesOracle) {
    Graph g;
    const Tensor p = ops::softmax(g, Tensor::from({1, 3}, {1.0, 2.0, 3.0}));
    EXPECT_NEAR(p.at(0), 0.09003057317038046, 1e-15);
    EXPECT_NEAR(p.at(1), 0.24472847105479765, 1e-15);
    EXPECT_NEAR(p.at(2), 0.6652409557748219, 1e-15);
}

TEST(Ops, SoftmaxIsStableForHugeLogits) {
    Graph g;
    const Tensor p = ops::softmax(g, Tensor::from({1, 2}, {1000.0, 1000.0}));
    EXPECT_DOUBLE_EQ(p.at(0), 0.5);
    const Tensor lp = ops::log_softmax(g, Tensor::from({1, 2}, {-1000.0, 0.0}));
    EXPECT_DOUBLE_EQ(lp.at(0), -1000.0);
    EXPECT_TRUE(std::isfinite(lp.at(1)));
}

TEST(Ops, LogClampsAtFloor) {
    Graph g;
    const Tensor y = ops::log(g, Tensor::from({2}, {0.0, 1.0}));
    EXPECT_DOUBLE_EQ(y.at(0), std::log(ops::kLogFloor));
    EXPECT_DOUBLE_EQ(y.at(1), 0.0);
}

TEST(Ops, ShapeErrorsNameTheOperation) {
    Graph g;
    try {
        ops::linear(g, Tensor::zeros({2, 3}), Tensor::zeros({4, 5}));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("linear"), std::string::npos);
    }
    EXPECT_THROW(ops::add(g, Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
    EXPECT_THROW(ops::conv2d(g, Tensor::zeros({1, 2, 5, 5}), Tensor::zeros({3, 1, 3, 3}), {}, {}), ShapeError);
    EXPECT_THROW(ops::gather(g, Tensor::zeros({2, 3}), std::vector<std::size_t>{0, 3}), std::exception);
    EXPECT_THROW(ops::reshape(g, Tensor::zeros({2, 3}), {4}), ShapeError);
}

// --- finite-difference checks, kInstances random instances each ---

class GradCheck : public ::testing::Test {
protected:
    std::mt19937_64 rng{12345};

    void expect_pass(const testing::LossFn& f, std::vector<Tensor> inputs) {
        const auto r = gradcheck(f, std::move(inputs));
        EXPECT_TRUE(r.passed()) << r.worst << " rel " << r.max_rel_error;
    }
    // Values bounded away from zero so kinks are never straddled.
    Tensor away_from_zero(Shape shape) {
        Tensor t = random_tensor(std::move(shape), rng, 0.1, 1.0, true);
        std::bernoulli_distribution sign(0.5);
        for (double& v : t.values()) v = sign(rng) ? v : -v;
        return t;
    }
};

TEST_F(GradCheck, Linear) {
    for (int k = 0; k < kInstances; ++k) {
        const std::uint64_t s = rng();
        expect_pass(
            [s](Graph& g, const std::vector<Tensor>& in) {
                std::mt19937_64 r(s);
                return weighted_sum(g, ops::linear(g, in[0], in[1], in[2]), r);
            },
            {random_tensor({3, 4}, rng, -1, 1, true), random_tensor({5, 4}, rng, -1, 1, true),
             random_tensor({5}, rng, -1, 1, true)});
    }
}

TEST_F(GradCheck, Conv2d) {
    for (int k = 0; k < kInstances; ++k) {
        const std::size_t stride = 1 + k % 2, pad = k % 3;
        const std::uint64_t s = rng();
        expect_pass(
            [s, stride, pad](Graph& g, const std::vector<Tensor>& in) {
                std::mt19937_64 r(s);
                return weighted_sum(g, ops::conv2d(g, in[0], in[1], in[2], {stride, pad}), r);
            },
            {random_tensor({2, 2, 5, 5}, rng, -1, 1, true), random_tensor({3, 2, 3, 3}, rng, -1, 1, true),
             random_tensor({3}, rng, -1, 1, true)});
    }
}

TEST_F(GradCheck, Conv2dTranspose) {
    for (int k = 0; k < kInstances; ++k) {
        const std::size_t stride = 1 + k % 2, pad = k % 2;
        const std::uint64_t s = rng();
        expect_pass(
            [s, stride, pad](Graph& g, const std::vector<Tensor>& in) {
                std::mt19937_64 r(s);
                return weighted_sum(g, ops::conv2d_transpose(g, in[0], in[1], in[2], {stride, pad}), r);
            },
            {random_tensor({2, 2, 3, 3}, rng, -1, 1, true), random_tensor({2, 3, 4, 4}, rng, -1, 1, true),
             random_tensor({3}, rng, -1, 1, true)});
    }
}

TEST_F(GradCheck, BatchNormTrainAndEval) {
    for (int k = 0; k < kInstances; ++k) {
        const ops::BatchNormMode modes[] = {ops::BatchNormMode::train, ops::BatchNormMode::train_frozen_stats,
                                            ops::BatchNormMode::eval};
        const auto mode = modes[k % 3];
        Tensor rm = random_tensor({3}, rng, -0.5, 0.5);
        Tensor rv = random_tensor({3}, rng, 0.5, 1.5);
        const std::uint64_t s = rng();
        expect_pass(
            [s, mode, rm, rv](Graph& g, const std::vector<Tensor>& in) mutable {
                std::mt19937_64 r(s);
                return weighted_sum(g, ops::batchnorm2d(g, in[0], in[1], in[2], rm, rv, {mode}), r);
            },
            {random_tensor({3, 3, 2, 2}, rng, -2, 2, true), random_tensor({3}, rng, 0.5, 1.5, true),
             random_tensor({3}, rng, -1, 1, true)});
    }
}

TEST_F(GradCheck, Activations) {
    for (int k = 0; k < kInstances; ++k) {
        const std::uint64_t s = rng();
        expect_pass(
            [s](Graph& g, const std::vector<Tensor>& in) {
                std::mt19937_64 r(s);
                Tensor y = ops::leaky_relu(g, in[0], 0.2);
                y = ops::add(g, y, ops::relu(g, in[0]));
                y = ops::add(g, y, ops::tanh(g, in[0]));
                y = ops::add(g, y, ops::sigmoid(g, in[0]));
                return weighted_sum(g, y, r);
            },
            {away_from_zero({4, 5})});
    }
}

TEST_F(GradCheck, SoftmaxFamilyAndLog) {
    for (int k = 0; k < kInstances; ++k) {
        const std::uint64_t s = rng();
        expect_pass(
            [s](Graph& g, const std::vector<Tensor>& in) {
                std::mt19937_64 r(s);
                Tensor y = ops::add(g, ops::softmax(g, in[0]), ops::log_softmax(g, in[0]));
                y = ops::add(g, y, ops::log(g, in[1]));
                return weighted_sum(g, y, r);
            },
            {random_tensor({3, 4}, rng, -3, 3, true), random_tensor({3, 4}, rng, 0.2, 2.0, true)});
    }
}

TEST_F(GradCheck, ArithmeticAndReductions) {
    for (int k = 0; k < kInstances; ++k) {
        const std::uint64_t s = rng();
        expect_pass(
            [s](Graph& g, const std::vector<Tensor>& in) {
                std::mt19937_64 r(s);
                Tensor y = ops::mul(g, ops::add(g, in[0], in[1]), ops::sub(g, in[0], in[1]));
                y = ops::affine(g, y, -1.7, 0.3);
                const Tensor rows = ops::mean_rows(g, y);
                const Tensor picked = ops::gather(g, y, std::vector<std::size_t>{2, 0, 1});
                return ops::add(g, ops::add(g, weighted_sum(g, rows, r), ops::mean(g, picked)), ops::sum(g, y));
            },
            {random_tensor({3, 4}, rng, -1, 1, true), random_tensor({3, 4}, rng, -1, 1, true)});
    }
}

TEST_F(GradCheck, ReshapeAndConcat) {
    for (int k = 0; k < kInstances; ++k) {
        const std::uint64_t s = rng();
        expect_pass(
            [s](Graph& g, const std::vector<Tensor>& in) {
                std::mt19937_64 r(s);
                const std::vector<Tensor> parts{in[0], ops::reshape(g, in[1], {1, 2, 3})};
                return weighted_sum(g, ops::tanh(g, ops::concat(g, parts)), r);
            },
            {random_tensor({2, 2, 3}, rng, -1, 1, true), random_tensor({6}, rng, -1, 1, true)});
    }
}

// --- convolution oracle ---

TEST(ConvOracle, MatchesNaiveLoopsUpTo7x7) {
    std::mt19937_64 rng(7);
    for (std::size_t size = 3; size <= 7; ++size) {
        for (std::size_t k : {1u, 3u, 4u}) {
            if (k > size) continue;
            for (std::size_t stride : {1u, 2u}) {
                for (std::size_t pad = 0; pad <= 1; ++pad) {
                    const Tensor x = random_tensor({2, 3, size, size}, rng);
                    const Tensor w = random_tensor({4, 3, k, k}, rng);
                    const Tensor b = random_tensor({4}, rng);
                    Graph g;
                    const Tensor y = ops::conv2d(g, x, w, b, {stride, pad});
                    Shape shape;
                    const auto ref = testing::naive_conv2d(x, w, b, stride, pad, shape);
                    ASSERT_EQ(y.shape(), shape);
                    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y.at(i), ref[i], 1e-10);

                    const Tensor wt = random_tensor({3, 2, k, k}, rng);
                    const Tensor bt = random_tensor({2}, rng);
                    if ((size - 1) * stride + k <= 2 * pad) continue;
                    const Tensor yt = ops::conv2d_transpose(g, x, wt, bt, {stride, pad});
                    const auto ref_t = testing::naive_conv2d_transpose(x, wt, bt, stride, pad, shape);
                    ASSERT_EQ(yt.shape(), shape);
                    for (std::size_t i = 0; i < ref_t.size(); ++i) ASSERT_NEAR(yt.at(i), ref_t[i], 1e-10);
                }
            }
        }
    }
}

TEST(ConvOracle, TransposedOutputSize) {
    Graph g;
    const Tensor y = ops::conv2d_transpose(g, Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({2, 3, 4, 4}), {}, {2, 1});
    EXPECT_EQ(y.shape(), (Shape{1, 3, 8, 8}));
}

// --- batch norm running statistics ---

TEST(BatchNorm, RunningStatsOnlyMoveInTrainMode) {
    Tensor x = Tensor::from({2, 1, 1, 2}, {1.0, 3.0, 5.0, 7.0});
    Tensor gamma = Tensor::full({1}, 1.0), beta = Tensor::zeros({1});
    Tensor rm = Tensor::zeros({1}), rv = Tensor::full({1}, 1.0);
    Graph g;
    ops::batchnorm2d(g, x, gamma, beta, rm, rv, {ops::BatchNormMode::train_frozen_stats});
    EXPECT_EQ(rm.at(0), 0.0);
    EXPECT_EQ(rv.at(0), 1.0);
    const Tensor y = ops::batchnorm2d(g, x, gamma, beta, rm, rv, {ops::BatchNormMode::train});
    // mean 4, unbiased variance 20/3
    EXPECT_NEAR(rm.at(0), 0.4, 1e-15);
    EXPECT_NEAR(rv.at(0), 0.9 + 0.1 * 20.0 / 3.0, 1e-15);
    EXPECT_NEAR(y.at(0), -3.0 / std::sqrt(5.0 + 1e-5), 1e-12);
    const Tensor e = ops::batchnorm2d(g, x, gamma, beta, rm, rv, {ops::BatchNormMode::eval});
    EXPECT_NEAR(e.at(0), (1.0 - 0.4) / std::sqrt(rv.at(0) + 1e-5), 1e-12);
}

// --- Adam ---

double adam_quadratic(double beta1, double beta2) {
    Tensor w = Tensor::scalar(0.0, true);
    AdamState state{{0.1, beta1, beta2, 1e-8}, 0, {}, {}};
    const std::vector<NamedTensor> params{{"w", w}};
    for (int i = 0; i < 100; ++i) {
        w.zero_grad();
        Graph g;
        const Tensor d = ops::affine(g, w, 1.0, -3.0);
        g.backward(ops::mul(g, d, d));
        adam_step(params, state);
    }
    return w.item();
}

TEST(Adam, QuadraticTrajectoryMatchesOracle) {
    EXPECT_NEAR(adam_quadratic(0.5, 0.999), 2.9984580531739677, 1e-12);
    EXPECT_NEAR(adam_quadratic(0.9, 0.999), 2.98065543752781, 1e-12);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Tensor w = Tensor::from({2}, {1.0, -1.0}, true);
    w.mutable_grad()[0] = 0.3;
    w.mutable_grad()[1] = -50.0;
    AdamState state;
    const std::vector<NamedTensor> params{{"w", w}};
    adam_step(params, state);
    EXPECT_NEAR(w.at(0), 1.0 - 2e-4, 1e-11);
    EXPECT_NEAR(w.at(1), -1.0 + 2e-4, 1e-11);
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, NonFiniteGradientLeavesEverythingUntouched) {
    Tensor a = Tensor::from({1}, {1.0}, true), b = Tensor::from({1}, {2.0}, true);
    a.mutable_grad()[0] = 1.0;
    b.mutable_grad()[0] = std::numeric_limits<double>::quiet_NaN();
    AdamState state;
    const std::vector<NamedTensor> params{{"a", a}, {"b", b}};
    try {
        adam_step(params, state);
        FAIL() << "expected NonFiniteGradient";
    } catch (const NonFiniteGradient& e) {
        EXPECT_EQ(e.parameter(), "b");
    }
    EXPECT_EQ(a.at(0), 1.0);
    EXPECT_EQ(state.step, 0u);
}

TEST(Adam, FrozenParametersAreSkipped) {
    Tensor a = Tensor::from({1}, {1.0}, true), b = Tensor::from({1}, {2.0}, true);
    a.mutable_grad()[0] = 1.0;
    b.set_requires_grad(false);
    AdamState state;
    const std::vector<NamedTensor> params{{"a", a}, {"b", b}};
    adam_step(params, state);
    EXPECT_LT(a.at(0), 1.0);
    EXPECT_EQ(b.at(0), 2.0);
}

}  // namespace
}  // namespace trigan
