#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "trigan/autodiff/ops.hpp"
#include "trigan/losses/losses.hpp"

namespace trigan {
namespace {

using testing::gradcheck;
using testing::random_tensor;

Tensor logits(std::vector<double> v, std::size_t cols) {
    const std::size_t rows = v.size() / cols;
    return Tensor::from({rows, cols}, std::move(v), true);
}

TEST(SupervisedLoss, MatchesOracle) {
    Graph g;
    const std::vector<int> y{1};
    EXPECT_NEAR(supervised_loss(g, logits({1.0, 2.0}, 2), y).item(), 0.31326168751822283, 1e-15);
}

TEST(SupervisedLoss, UniformLogitsGiveLogC) {
    for (std::size_t c : {2u, 3u, 10u}) {
        Graph g;
        const std::vector<int> y(4, 1);
        EXPECT_NEAR(supervised_loss(g, Tensor::full({4, c}, 0.37), y).item(), std::log(static_cast<double>(c)),
                    1e-12);
    }
}

TEST(SupervisedLoss, RejectsBadLabels) {
    Graph g;
    const std::vector<int> y{2};
    EXPECT_THROW(supervised_loss(g, logits({1.0, 2.0}, 2), y), std::invalid_argument);
    const std::vector<int> two{0, 1};
    EXPECT_THROW(supervised_loss(g, logits({1.0, 2.0}, 2), two), ShapeError);
}

TEST(PseudoLabelLoss, ConfidentSampleMatchesOracle) {
    Graph g;
    const PseudoLabelLoss pl = pseudo_label_loss(g, logits({std::log(0.95), std::log(0.05)}, 2), 0.9);
    EXPECT_NEAR(pl.loss.item(), 0.05129329438755053, 1e-15);
    EXPECT_EQ(pl.accepted_fraction, 1.0);
}

TEST(PseudoLabelLoss, ThresholdIsStrictAndAveragesOverFullBatch) {
    Graph g;
    // row 0: p = 0.95 accepted, row 1: uniform rejected
    const PseudoLabelLoss pl = pseudo_label_loss(g, logits({std::log(0.95), std::log(0.05), 0.0, 0.0}, 2), 0.9);
    EXPECT_NEAR(pl.loss.item(), 0.05129329438755053 / 2.0, 1e-15);
    EXPECT_EQ(pl.accepted_fraction, 0.5);
    const PseudoLabelLoss at = pseudo_label_loss(g, logits({0.0, 0.0}, 2), 0.5);
    EXPECT_EQ(at.accepted_fraction, 0.0);
    EXPECT_EQ(at.loss.item(), 0.0);
}

TEST(PseudoLabelLoss, TauOneRejectsEverything) {
    Graph g;
    const PseudoLabelLoss pl = pseudo_label_loss(g, logits({30.0, -30.0, -5.0, 5.0}, 2), 1.0);
    EXPECT_EQ(pl.loss.item(), 0.0);
    EXPECT_EQ(pl.accepted_fraction, 0.0);
}

TEST(PseudoLabelLoss, LabelsCarryNoGradient) {
    // d/dz of -log softmax(z)[argmax] with the argmax held fixed.
    Tensor z = logits({2.0, 0.0, -1.0}, 3);
    Graph g;
    g.backward(pseudo_label_loss(g, z, 0.5).loss);
    double denom = std::exp(2.0) + 1.0 + std::exp(-1.0);
    EXPECT_NEAR(z.grad()[0], std::exp(2.0) / denom - 1.0, 1e-14);
    EXPECT_NEAR(z.grad()[1], 1.0 / denom, 1e-14);
}

TEST(KlConsistency, MatchesOracleAndDirection) {
    // batch-mean softmax of single rows: P = [.7, .3], Q = [.4, .6]
    Graph g;
    const Tensor lp = logits({std::log(0.7), std::log(0.3)}, 2);
    const Tensor lq = logits({std::log(0.4), std::log(0.6)}, 2);
    EXPECT_NEAR(kl_consistency_loss(g, lp, lq).item(), 0.18378689738681229, 1e-14);
    const double reverse = 0.4 * std::log(0.4 / 0.7) + 0.6 * std::log(0.6 / 0.3);
    EXPECT_NEAR(kl_consistency_loss(g, lp, lq, KlDirection::fake_to_real).item(), reverse, 1e-14);
}

TEST(KlConsistency, SelfDivergenceIsZero) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 10; ++k) {
        Graph g;
        const Tensor z = random_tensor({5, 3}, rng, -4, 4);
        EXPECT_LT(std::abs(kl_consistency_loss(g, z, z).item()), 1e-12);
    }
}

TEST(KlDirection, ParsesBothSpellings) {
    EXPECT_EQ(parse_kl_direction("real-to-fake"), KlDirection::real_to_fake);
    EXPECT_EQ(parse_kl_direction("fake-to-real"), KlDirection::fake_to_real);
    EXPECT_THROW(parse_kl_direction("sideways"), std::invalid_argument);
}

TEST(DiscriminatorLoss, MatchesOracle) {
    Graph g;
    const DiscriminatorLoss d =
        discriminator_loss(g, Tensor::from({2}, {0.9, 0.8}, true), Tensor::from({2}, {0.1, 0.2}, true));
    EXPECT_NEAR(d.loss.item(), 0.32850406697203606, 1e-15);
    EXPECT_NEAR(d.real_term + d.fake_term, d.loss.item(), 1e-15);
}

TEST(GeneratorObjective, MatchesOracle) {
    Graph g;
    const Objective o = generator_objective(g, Tensor::from({1}, {0.5}, true),
                                            logits({std::log(0.95), std::log(0.05)}, 2), LossWeights{});
    EXPECT_NEAR(o.loss.item(), 0.69366011350382081, 1e-15);
    EXPECT_NEAR(o.report.l_cu, 0.05129329438755053, 1e-15);
}

TEST(ClassifierObjective, CompositeMatchesOracle) {
    Graph g;
    const std::vector<int> y{1};
    const Objective o = classifier_objective(g, logits({1.0, 2.0}, 2), y,
                                             logits({std::log(0.95), std::log(0.05)}, 2), LossWeights{});
    EXPECT_NEAR(o.report.l_kl, 1.6216475604715331, 1e-14);
    EXPECT_NEAR(o.loss.item(), 0.80026888860355827, 1e-14);
    EXPECT_EQ(o.report.l_c_total, o.loss.item());
}

TEST(ClassifierObjective, ZeroWeightsReduceToSupervisedBitExactly) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 10; ++k) {
        const Tensor a = random_tensor({4, 3}, rng, -3, 3, true);
        const Tensor b = random_tensor({4, 3}, rng, -3, 3, true);
        const std::vector<int> y{0, 2, 1, 1};
        Graph g1, g2;
        const Objective o = classifier_objective(g1, a, y, b, {0.5, 0.0, 0.0});
        g1.backward(o.loss);
        const std::vector<double> grad_obj(a.grad().begin(), a.grad().end());
        EXPECT_FALSE(b.has_grad() && std::any_of(b.grad().begin(), b.grad().end(), [](double v) { return v != 0; }));
        Tensor a2 = a.detached();
        a2.set_requires_grad(true);
        const Tensor s = supervised_loss(g2, a2, y);
        g2.backward(s);
        EXPECT_EQ(o.loss.item(), s.item());
        for (std::size_t i = 0; i < grad_obj.size(); ++i) EXPECT_EQ(grad_obj[i], a2.grad()[i]);
    }
}

TEST(GeneratorObjective, ZeroLambdaIsTheAdversarialTerm) {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 10; ++k) {
        const Tensor d = random_tensor({5}, rng, 0.05, 0.95, true);
        const Tensor z = random_tensor({5, 2}, rng, -6, 6, true);
        Graph g;
        const Objective o = generator_objective(g, d, z, {0.5, 0.3, 0.0});
        const Tensor adv = ops::scale(g, ops::mean(g, ops::log(g, d)), -1.0);
        EXPECT_EQ(o.loss.item(), adv.item());
    }
}

TEST(LossWeights, ValidationNamesField) {
    EXPECT_THROW((LossWeights{1.5, 0.3, 0.01}.validate()), std::invalid_argument);
    EXPECT_THROW((LossWeights{0.9, -1.0, 0.01}.validate()), std::invalid_argument);
    EXPECT_THROW((LossWeights{0.9, 0.3, NAN}.validate()), std::invalid_argument);
}

// --- finite differences through every loss ---

class LossGradCheck : public ::testing::Test {
protected:
    std::mt19937_64 rng{99};
    void expect_pass(const testing::LossFn& f, std::vector<Tensor> in) {
        const auto r = gradcheck(f, std::move(in));
        EXPECT_TRUE(r.passed()) << r.worst << " rel " << r.max_rel_error;
    }
};

TEST_F(LossGradCheck, Supervised) {
    for (int k = 0; k < 20; ++k) {
        const std::vector<int> y{0, 2, 1};
        expect_pass([y](Graph& g, const std::vector<Tensor>& in) { return supervised_loss(g, in[0], y); },
                    {random_tensor({3, 3}, rng, -3, 3, true)});
    }
}

TEST_F(LossGradCheck, PseudoLabelAwayFromThreshold) {
    int checked = 0;
    while (checked < 20) {
        Tensor z = random_tensor({4, 2}, rng, -4, 4, true);
        // skip instances within 0.02 of tau or near an argmax tie
        bool near = false;
        for (std::size_t r = 0; r < 4; ++r) {
            const double a = z.at(2 * r), b = z.at(2 * r + 1);
            const double p = 1.0 / (1.0 + std::exp(-std::abs(a - b)));
            near = near || std::abs(p - 0.9) < 0.02 || std::abs(a - b) < 0.05;
        }
        if (near) continue;
        expect_pass([](Graph& g, const std::vector<Tensor>& in) { return pseudo_label_loss(g, in[0], 0.9).loss; },
                    {z});
        ++checked;
    }
}

TEST_F(LossGradCheck, KlBothDirections) {
    for (int k = 0; k < 20; ++k) {
        const auto dir = k % 2 == 0 ? KlDirection::real_to_fake : KlDirection::fake_to_real;
        expect_pass([dir](Graph& g,
                          const std::vector<Tensor>& in) { return kl_consistency_loss(g, in[0], in[1], dir); },
                    {random_tensor({3, 3}, rng, -2, 2, true), random_tensor({4, 3}, rng, -2, 2, true)});
    }
}

TEST_F(LossGradCheck, Discriminator) {
    for (int k = 0; k < 20; ++k) {
        expect_pass([](Graph& g, const std::vector<Tensor>& in) { return discriminator_loss(g, in[0], in[1]).loss; },
                    {random_tensor({4}, rng, 0.05, 0.95, true), random_tensor({4}, rng, 0.05, 0.95, true)});
    }
}

TEST_F(LossGradCheck, GeneratorComposite) {
    for (int k = 0; k < 20; ++k) {
        Tensor z = random_tensor({4, 2}, rng, -4, 4, true);
        // confident rows far from the threshold
        for (std::size_t r = 0; r < 4; ++r) {
            z.values()[2 * r] = (r % 2 == 0 ? 4.0 : 0.1) + 0.1 * z.at(2 * r);
            z.values()[2 * r + 1] = 0.0;
        }
        expect_pass(
            [](Graph& g, const std::vector<Tensor>& in) {
                return generator_objective(g, in[0], in[1], {0.9, 0.3, 0.5}).loss;
            },
            {random_tensor({4}, rng, 0.05, 0.95, true), z});
    }
}

TEST_F(LossGradCheck, ClassifierComposite) {
    for (int k = 0; k < 20; ++k) {
        Tensor zg = random_tensor({4, 2}, rng, -4, 4, true);
        for (std::size_t r = 0; r < 4; ++r) {
            zg.values()[2 * r] = (r % 2 == 0 ? 4.0 : 0.1) + 0.1 * zg.at(2 * r);
            zg.values()[2 * r + 1] = 0.0;
        }
        const std::vector<int> y{0, 1, 1};
        expect_pass(
            [y](Graph& g, const std::vector<Tensor>& in) {
                return classifier_objective(g, in[0], y, in[1], {0.9, 0.3, 0.5}).loss;
            },
            {random_tensor({3, 2}, rng, -2, 2, true), zg});
    }
}

}  // namespace
}  // namespace trigan
