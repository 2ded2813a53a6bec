#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "instances.hpp"
#include "posauction/auction.hpp"
#include "posauction/complete_info.hpp"
#include "posauction/errors.hpp"

using namespace posauction;
using Rows = std::vector<std::vector<double>>;

namespace {

std::vector<std::optional<std::size_t>> holders(const Assignment& a) {
    std::vector<std::optional<std::size_t>> out;
    for (std::size_t j = 0; j < a.positions(); ++j) out.push_back(a.agent_at(j));
    return out;
}

using Holders = std::vector<std::optional<std::size_t>>;

}  // namespace

TEST(SlotCurve, RejectsInvalidEntries) {
    EXPECT_THROW(SlotCurve(std::vector<double>{}), DimensionError);
    EXPECT_THROW(SlotCurve({1.0, 0.0}), DomainError);
    EXPECT_THROW(SlotCurve({1.0, 2.0}), DomainError);
    EXPECT_THROW(SlotCurve({-1.0}), DomainError);
    const SlotCurve c({2.0, 2.0, 1.0});
    EXPECT_EQ(c.k(), 3u);
    EXPECT_EQ(c.at_or_zero(3), 0.0);
    EXPECT_THROW(ScalingVector({1.0, 3.0}), DomainError);
}

TEST(BidProfile, RowsMustBeNonNegativeAndNonIncreasing) {
    EXPECT_THROW(ExpressiveBidProfile(Rows{{1.0, 2.0}}), DomainError);
    EXPECT_THROW(ExpressiveBidProfile(Rows{{1.0, -0.5}}), DomainError);
    EXPECT_THROW(ExpressiveBidProfile(Rows{{1.0, 0.5}, {1.0}}), DimensionError);
    EXPECT_NO_THROW(ExpressiveBidProfile(Rows{{0.0, 0.0}}));
    EXPECT_THROW(ValueProfile({1.0, -1.0}), DomainError);
}

TEST(GreedyAllocate, StrictOrdering) {
    const ExpressiveBidProfile bids(Rows{{5, 3}, {4, 2}, {1, 1}});
    EXPECT_EQ(holders(greedy_allocate(bids, 2)), (Holders{0, 1}));
}

TEST(GreedyAllocate, TieHintPicksHintedAgent) {
    const ExpressiveBidProfile bids(Rows{{3, 0}, {3, 1}, {2, 1}});
    EXPECT_EQ(holders(greedy_allocate(bids, 2, {{0, 0}})), (Holders{0, 1}));
    // Without the hint the lowest index still wins position 1 here.
    EXPECT_EQ(holders(greedy_allocate(bids, 2)), (Holders{0, 1}));
    // A hint toward agent 1 flips the tie.
    EXPECT_EQ(holders(greedy_allocate(bids, 2, {{0, 1}})), (Holders{1, 2}));
}

TEST(GreedyAllocate, HintIgnoredWhenNotMaximal) {
    const ExpressiveBidProfile bids(Rows{{5, 3}, {4, 2}});
    EXPECT_EQ(holders(greedy_allocate(bids, 2, {{0, 1}})), (Holders{0, 1}));
}

TEST(GreedyAllocate, LowestIndexBreaksTies) {
    const ExpressiveBidProfile bids(Rows{{3, 1}, {3, 1}});
    EXPECT_EQ(holders(greedy_allocate(bids, 2)), (Holders{0, 1}));
}

TEST(GreedyAllocate, ZeroBidsCanWinAndExtraPositionsStayEmpty) {
    const ExpressiveBidProfile bids(Rows{{0, 0}});
    EXPECT_EQ(holders(greedy_allocate(bids, 2)), (Holders{0, std::nullopt}));
}

TEST(GreedyAllocate, RejectsTooManyPositions) {
    const ExpressiveBidProfile bids(Rows{{1, 1}});
    EXPECT_THROW(greedy_allocate(bids, 3), DimensionError);
}

TEST(FirstPrice, PaysOwnBid) {
    const ExpressiveBidProfile bids(Rows{{5, 3}, {4, 2}});
    EXPECT_EQ(first_price_payments(bids, greedy_allocate(bids, 2)), (std::vector<double>{5, 2}));
    const ExpressiveBidProfile eq(Rows{{3, 0}, {3, 1}, {2, 1}});
    EXPECT_EQ(first_price_payments(eq, greedy_allocate(eq, 2, {{0, 0}, {1, 1}})),
              (std::vector<double>{3, 1, 0}));
    const ExpressiveBidProfile zero(Rows{{0, 0}, {0, 0}});
    EXPECT_EQ(first_price_payments(zero, greedy_allocate(zero, 2)), (std::vector<double>{0, 0}));
}

TEST(FirstPrice, RejectsForeignAssignment) {
    const ExpressiveBidProfile bids(Rows{{5, 3}, {4, 2}});
    Assignment a(2, 3);
    EXPECT_THROW(first_price_payments(bids, a), DimensionError);
}

TEST(SecondPrice, NextLowerBid) {
    const ExpressiveBidProfile bids(Rows{{5, 3}, {4, 2}, {1, 1}});
    EXPECT_EQ(second_price_payments(bids, greedy_allocate(bids, 2)),
              (std::vector<double>{4, 1, 0}));
    const ExpressiveBidProfile single(Rows{{7}});
    EXPECT_EQ(second_price_payments(single, greedy_allocate(single, 1)), (std::vector<double>{0}));
    const ExpressiveBidProfile two(Rows{{5, 3}, {4, 2}});
    EXPECT_EQ(second_price_payments(two, greedy_allocate(two, 2)), (std::vector<double>{4, 0}));
}

TEST(Vcg, ProportionalBidsMatchClosedForm) {
    const ExpressiveBidProfile bids(Rows{{6, 3}, {4, 2}, {2, 1}});
    const auto pay = vcg_payments_from_bids(bids, greedy_allocate(bids, 2), 2);
    EXPECT_NEAR(pay[0], 3.0, 1e-12);
    EXPECT_NEAR(pay[1], 1.0, 1e-12);
    EXPECT_EQ(pay[2], 0.0);
}

TEST(Vcg, SingleAgentAndIdenticalPair) {
    const ExpressiveBidProfile one(Rows{{4}});
    EXPECT_EQ(vcg_payments_from_bids(one, greedy_allocate(one, 1), 1), (std::vector<double>{0}));
    const ExpressiveBidProfile pair(Rows{{2.5}, {2.5}});
    EXPECT_EQ(vcg_payments_from_bids(pair, greedy_allocate(pair, 1), 1),
              (std::vector<double>{2.5, 0}));
}

TEST(RunAuction, SimplifiedFirstPrice) {
    const SlotCurve beta({2, 1});
    MechanismSpec spec{PaymentRule::FirstPrice, ScalingVector({2, 1})};
    const auto out = run_auction(spec, SimplifiedBidProfile{{1, 0.5}, ScalingVector({2, 1})},
                                 beta, ValueProfile({3, 2}));
    EXPECT_EQ(holders(out.assignment), (Holders{0, 1}));
    EXPECT_EQ(out.payments, (std::vector<double>{2, 0.5}));
    EXPECT_EQ(out.utilities, (std::vector<double>{4, 1.5}));
}

TEST(RunAuction, SimplifiedSecondPrice) {
    MechanismSpec spec{PaymentRule::SecondPrice, ScalingVector({1})};
    const auto out = run_auction(spec, SimplifiedBidProfile{{4, 3}, ScalingVector({1})},
                                 SlotCurve({1}), ValueProfile({5, 4}));
    EXPECT_EQ(out.payments, (std::vector<double>{3, 0}));
}

TEST(RunAuction, GspWithAlphaEqualBeta) {
    MechanismSpec spec{PaymentRule::SecondPrice, ScalingVector({2, 1})};
    const auto out = run_auction(spec, SimplifiedBidProfile{{3, 2, 1}, ScalingVector({2, 1})},
                                 SlotCurve({2, 1}), ValueProfile({3, 2, 1}));
    EXPECT_EQ(out.payments, (std::vector<double>{4, 1, 0}));
}

TEST(RunAuction, ExpressiveVcgTruthfulEqualsClosedForm) {
    const SlotCurve beta({2, 1});
    const ValueProfile values({3, 2, 1});
    const ExpressiveBidProfile bids(instances::proportional_bids({3, 2, 1}, {2, 1}));
    const auto out = run_auction({PaymentRule::Vcg, std::nullopt}, bids, beta, values);
    const auto vcg = truthful_vcg(values, beta);
    EXPECT_NEAR(out.payments[0], vcg.payments[0], 1e-12);
    EXPECT_NEAR(out.payments[1], vcg.payments[1], 1e-12);
    EXPECT_EQ(out.payments[2], 0.0);
}

TEST(RunAuction, ShapeMismatches) {
    const SlotCurve beta({2, 1});
    const ValueProfile values({3, 2});
    const ExpressiveBidProfile bids(Rows{{2, 1}, {1, 1}});
    EXPECT_THROW(run_auction({PaymentRule::FirstPrice, ScalingVector({2, 1})}, bids, beta, values),
                 DimensionError);
    EXPECT_THROW(run_auction({PaymentRule::FirstPrice, std::nullopt},
                             SimplifiedBidProfile{{1, 1}, ScalingVector({2, 1})}, beta, values),
                 DimensionError);
    EXPECT_THROW(run_auction({PaymentRule::FirstPrice, ScalingVector({1, 1})},
                             SimplifiedBidProfile{{1, 1}, ScalingVector({2, 1})}, beta, values),
                 DimensionError);
    EXPECT_THROW(run_auction({PaymentRule::FirstPrice, std::nullopt}, bids, beta,
                             ValueProfile({1, 2, 3})),
                 DimensionError);
    EXPECT_THROW(parse_payment_rule("dutch"), ConfigError);
}

TEST(RunAuction, FewerAgentsThanPositions) {
    const auto out = run_auction({PaymentRule::SecondPrice, std::nullopt},
                                 ExpressiveBidProfile(Rows{{3, 2, 1}}), SlotCurve({3, 2, 1}),
                                 ValueProfile({1}));
    EXPECT_EQ(holders(out.assignment), (Holders{0, std::nullopt, std::nullopt}));
    EXPECT_EQ(out.payments, (std::vector<double>{0}));
}

// Properties over random instances.

TEST(AuctionProperties, GreedyMatchesNaiveOracleAndPaymentsOrdered) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + trial % 7;
        const std::size_t k = 1 + trial % 4;
        oracle::Matrix rows(n, std::vector<double>(k));
        for (auto& row : rows) {
            for (auto& b : row) b = std::round(4.0 * unit(rng)) / 2.0;  // many ties
            std::sort(row.begin(), row.end(), std::greater<>());
        }
        const ExpressiveBidProfile bids(rows);
        const Assignment a = greedy_allocate(bids, k);
        const auto expected = oracle::greedy(rows, k);
        for (std::size_t j = 0; j < k; ++j) {
            const auto got = a.agent_at(j);
            ASSERT_EQ(got ? static_cast<int>(*got) : -1, expected[j]);
        }
        EXPECT_EQ(a, greedy_allocate(bids, k));  // determinism
        const auto fp = first_price_payments(bids, a);
        const auto sp = second_price_payments(bids, a);
        const auto vcg = vcg_payments_from_bids(bids, a, k);
        const auto vcg_oracle = oracle::vcg_remove_and_reallocate(rows, k);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GE(fp[i], sp[i]);
            EXPECT_GE(sp[i], 0.0);
            EXPECT_GE(vcg[i], 0.0);
            EXPECT_NEAR(vcg[i], vcg_oracle[i], 1e-12);
        }
    }
}

TEST(AuctionProperties, ProportionalBidsAllocateByScalar) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = instances::random_instance(rng);
        const ExpressiveBidProfile bids(instances::proportional_bids(inst.values, inst.beta));
        const std::size_t k = inst.beta.size();
        const Assignment a = greedy_allocate(bids, k);
        const auto order = order_by_value(ValueProfile(inst.values));
        for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(a.agent_at(j), order[j]);

        const auto out = run_auction({PaymentRule::Vcg, std::nullopt}, bids,
                                     SlotCurve(inst.beta), ValueProfile(inst.values));
        for (double u : out.utilities) EXPECT_GE(u, -1e-12);  // individual rationality
    }
}
