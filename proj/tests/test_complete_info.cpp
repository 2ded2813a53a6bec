#include <gtest/gtest.h>

#include <random>

#include "instances.hpp"
#include "oracles.hpp"
#include "posauction/complete_info.hpp"
#include "posauction/errors.hpp"

using namespace posauction;
using Rows = std::vector<std::vector<double>>;

namespace {

const MechanismSpec kGfp{PaymentRule::FirstPrice, std::nullopt};

double max_value(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

std::vector<int> hint_vector(const TieHint& hint, std::size_t k) {
    std::vector<int> out(k, -1);
    for (const auto& [pos, agent] : hint) out[pos] = static_cast<int>(agent);
    return out;
}

}  // namespace

TEST(TruthfulVcg, ThreeAgents) {
    const auto r = truthful_vcg(ValueProfile({3, 2, 1}), SlotCurve({2, 1}));
    EXPECT_EQ(r.ordering, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(r.payments, (std::vector<double>{3, 1}));
    EXPECT_EQ(r.utilities, (std::vector<double>{3, 1, 0}));
}

TEST(TruthfulVcg, DegenerateProfiles) {
    const auto single = truthful_vcg(ValueProfile({5}), SlotCurve({1}));
    EXPECT_EQ(single.payments, (std::vector<double>{0}));
    EXPECT_EQ(single.utilities, (std::vector<double>{5}));
    const auto tie = truthful_vcg(ValueProfile({2, 2}), SlotCurve({1}));
    EXPECT_EQ(tie.payments, (std::vector<double>{2}));
    EXPECT_EQ(tie.utilities[tie.ordering[0]], 0.0);
}

TEST(TruthfulVcg, RecursionMatchesSumAndEnvyFree) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = instances::random_instance(rng);
        const SlotCurve beta(inst.beta);
        const ValueProfile values(inst.values);
        const auto r = truthful_vcg(values, beta);
        const auto sum = oracle::vcg_sum_formula(inst.values, inst.beta);
        const std::size_t k = beta.k();
        for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(r.payments[j], sum[j], 1e-12);
        for (std::size_t i = 0; i < k && i < values.n(); ++i) {
            const double v = values[r.ordering[i]];
            for (std::size_t j = 0; j < k; ++j) {
                EXPECT_GE(beta[i] * v - r.payments[i], beta[j] * v - r.payments[j] - 1e-12);
            }
        }
    }
}

TEST(Construction, PaperInstance) {
    const auto eq = construct_equilibrium_bids(ValueProfile({3, 2, 1}), SlotCurve({2, 1}));
    EXPECT_EQ(eq.bids.to_rows(), (std::vector<std::vector<double>>{{3, 0}, {3, 1}, {2, 1}}));
    EXPECT_EQ(eq.tie_hint, (TieHint{{0, 0}, {1, 1}}));
    const auto out =
        run_auction(kGfp, eq.bids, SlotCurve({2, 1}), ValueProfile({3, 2, 1}), eq.tie_hint);
    EXPECT_EQ(out.payments, (std::vector<double>{3, 1, 0}));
}

TEST(Construction, SingleAgentBidsZero) {
    const auto eq = construct_equilibrium_bids(ValueProfile({4}), SlotCurve({3, 2, 1}));
    EXPECT_EQ(eq.bids.to_rows(), (std::vector<std::vector<double>>{{0, 0, 0}}));
    const auto out = run_auction(kGfp, eq.bids, SlotCurve({3, 2, 1}), ValueProfile({4}),
                                 eq.tie_hint);
    EXPECT_EQ(out.assignment.agent_at(0), 0u);
    EXPECT_EQ(out.payments[0], 0.0);
}

TEST(Construction, EqualValuesStillEquilibrium) {
    const ValueProfile values({2, 2, 2});
    const SlotCurve beta({2, 1});
    const auto eq = construct_equilibrium_bids(values, beta);
    const auto report = verify_nash(eq.bids, eq.tie_hint, values, kGfp, beta,
                                    DeviationGrid::standard(2.0), 1e-6);
    EXPECT_TRUE(report.is_equilibrium) << report.max_gain;
}

TEST(Construction, AgreesWithBruteForceNashOracle) {
    const ValueProfile values({3, 2, 1});
    const SlotCurve beta({2, 1});
    const auto eq = construct_equilibrium_bids(values, beta);
    const double gain = oracle::gfp_bruteforce_max_gain(eq.bids.to_rows(), {3, 2, 1}, {2, 1},
                                                        hint_vector(eq.tie_hint, 2), 6.0, 0.05);
    EXPECT_LE(gain, 1e-12);
}

TEST(VerifyNash, ConstructedEquilibriumPasses) {
    const ValueProfile values({3, 2, 1});
    const SlotCurve beta({2, 1});
    const auto eq = construct_equilibrium_bids(values, beta);
    DeviationGrid grid = DeviationGrid::standard(3.0);
    grid.epsilons = {1e-6};
    const auto report = verify_nash(eq.bids, eq.tie_hint, values, kGfp, beta, grid, 1e-6);
    EXPECT_TRUE(report.is_equilibrium);
    EXPECT_TRUE(report.efficiency_flag);
    EXPECT_TRUE(report.payment_floor_ok);
    EXPECT_FALSE(report.worst_violation.has_value());
}

TEST(VerifyNash, TruthfulGfpBidsFail) {
    const ValueProfile values({3, 2, 1});
    const SlotCurve beta({2, 1});
    const ExpressiveBidProfile bids(instances::proportional_bids({3, 2, 1}, {2, 1}));
    const auto report =
        verify_nash(bids, {}, values, kGfp, beta, DeviationGrid::standard(3.0), 1e-6);
    EXPECT_FALSE(report.is_equilibrium);
    ASSERT_TRUE(report.worst_violation.has_value());
    EXPECT_GT(report.worst_violation->gain, 1e-6);
    // The reported deviation really is profitable (checked with the naive oracle).
    auto rows = bids.to_rows();
    const std::size_t agent = report.worst_violation->agent;
    const double before = oracle::gfp_utility(rows, {3, 2, 1}, {2, 1}, agent, {});
    rows[agent] = report.worst_violation->bids;
    const double after = oracle::gfp_utility(rows, {3, 2, 1}, {2, 1}, agent, {});
    EXPECT_NEAR(after - before, report.worst_violation->gain, 1e-12);
}

TEST(VerifyNash, LoneZeroBidder) {
    const auto report = verify_nash(ExpressiveBidProfile(Rows{{0, 0}}), {}, ValueProfile({1}), kGfp,
                                    SlotCurve({2, 1}), DeviationGrid::standard(1.0), 1e-9);
    EXPECT_TRUE(report.is_equilibrium);
}

TEST(VerifyNash, RejectsEmptyGrid) {
    DeviationGrid grid;
    EXPECT_THROW(verify_nash(ExpressiveBidProfile(Rows{{0}}), {}, ValueProfile({1}), kGfp,
                             SlotCurve({1}), grid, 1e-9),
                 DomainError);
}

TEST(VerifyNash, RunsOnSimplifiedMechanisms) {
    // GFP_alpha with alpha = beta and truthful scalars: the winner can shade.
    MechanismSpec spec{PaymentRule::FirstPrice, ScalingVector({2, 1})};
    const auto report = verify_nash(SimplifiedBidProfile{{3, 2, 1}, ScalingVector({2, 1})}, {},
                                    ValueProfile({3, 2, 1}), spec, SlotCurve({2, 1}),
                                    DeviationGrid::standard(3.0), 1e-6);
    EXPECT_FALSE(report.is_equilibrium);
}

TEST(PaymentFloor, Cases) {
    const ValueProfile values({3, 2, 1});
    const SlotCurve beta({2, 1});
    const auto eq = construct_equilibrium_bids(values, beta);
    auto out = run_auction(kGfp, eq.bids, beta, values, eq.tie_hint);
    EXPECT_TRUE(check_payment_floor(out, values, beta, 1e-12));

    auto zero = out;
    std::fill(zero.payments.begin(), zero.payments.end(), 0.0);
    EXPECT_FALSE(check_payment_floor(zero, values, beta, 1e-12));

    auto inflated = out;
    for (auto& p : inflated.payments) p += 1.0;
    EXPECT_TRUE(check_payment_floor(inflated, values, beta, 1e-12));

    Assignment wrong(2, 3);
    wrong.assign(0, 2);
    wrong.assign(1, 1);
    AuctionOutcome bad{wrong, {0, 0, 0}, {0, 0, 0}};
    EXPECT_THROW(check_payment_floor(bad, values, beta, 1e-12), DomainError);
}

TEST(CompleteInfoProperties, ConstructedEquilibria) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 60; ++trial) {
        const auto inst = instances::random_instance(rng, 6, 4);
        const ValueProfile values(inst.values);
        const SlotCurve beta(inst.beta);
        const auto eq = construct_equilibrium_bids(values, beta);
        const auto out = run_auction(kGfp, eq.bids, beta, values, eq.tie_hint);
        EXPECT_TRUE(is_efficient(out.assignment, beta, values));
        const auto vcg = truthful_vcg(values, beta);
        for (std::size_t j = 0; j < beta.k(); ++j) {
            EXPECT_NEAR(out.payments[*out.assignment.agent_at(j)], vcg.payments[j], 1e-10);
        }
        const auto report = verify_nash(eq.bids, eq.tie_hint, values, kGfp, beta,
                                        DeviationGrid::standard(max_value(inst.values)), 1e-6);
        EXPECT_TRUE(report.is_equilibrium) << "trial " << trial << " gain " << report.max_gain;
    }
}

TEST(CompleteInfoProperties, InefficientOutcomesAreNotEquilibria) {
    // Sampled converse: random row-monotone bids whose GFP outcome is
    // inefficient always admit a profitable deviation.
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 40; ++trial) {
        const auto inst = instances::random_instance(rng, 5, 3);
        const std::size_t n = inst.values.size();
        const std::size_t k = inst.beta.size();
        oracle::Matrix rows(n, std::vector<double>(k));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) rows[i][j] = inst.beta[j] * inst.values[i] * unit(rng);
            std::sort(rows[i].begin(), rows[i].end(), std::greater<>());
        }
        const ValueProfile values(inst.values);
        const SlotCurve beta(inst.beta);
        const ExpressiveBidProfile bids(rows);
        if (is_efficient(greedy_allocate(bids, k), beta, values)) continue;
        ++checked;
        const auto report = verify_nash(bids, {}, values, kGfp, beta,
                                        DeviationGrid::standard(max_value(inst.values)), 1e-9);
        EXPECT_FALSE(report.is_equilibrium) << "trial " << trial;
    }
    EXPECT_GE(checked, 20);
}
