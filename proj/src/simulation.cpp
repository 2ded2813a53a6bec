#include "posauction/simulation.hpp"

#include <cmath>

#include "posauction/complete_info.hpp"
#include "posauction/errors.hpp"
#include "posauction/parallel.hpp"

namespace posauction {

namespace {

// Running mean / sum of squared deviations, mergeable in a fixed order.
struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }

    void merge(const Moments& other) {
        if (other.count == 0.0) return;
        const double total = count + other.count;
        const double delta = other.mean - mean;
        mean += delta * other.count / total;
        m2 += other.m2 + delta * delta * count * other.count / total;
        count = total;
    }

    MeanEstimate estimate() const {
        MeanEstimate out{mean, std::nullopt};
        if (count > 1.0) out.std_error = std::sqrt(m2 / (count - 1.0) / count);
        return out;
    }
};

struct BlockResult {
    Moments first_price, vcg, difference;
    std::vector<RoundRevenue> rounds;
};

}  // namespace

RevenueEstimate simulate_revenue(const BayesSetting& s, const EquilibriumBidTable& table,
                                 std::size_t samples, std::uint64_t seed, bool keep_rounds) {
    if (samples < 1) throw DomainError("need at least one sample");
    if (table.k() != s.k() || table.n() != s.n()) {
        throw DimensionError("bid table was built for a different setting");
    }
    const std::size_t n = s.n();
    const std::size_t k = s.k();
    const std::size_t blocks = (samples + kRoundsPerBlock - 1) / kRoundsPerBlock;
    std::vector<BlockResult> results(blocks);

    parallel_for(blocks, [&](std::size_t b) {
        RandomStream rng(seed, b);
        BlockResult& out = results[b];
        const std::size_t begin = b * kRoundsPerBlock;
        const std::size_t end = std::min(samples, begin + kRoundsPerBlock);
        std::vector<double> draws(n);
        ExpressiveBidProfile bids(n, k);
        for (std::size_t r = begin; r < end; ++r) {
            for (double& v : draws) v = s.dist().sample(rng);
            for (std::size_t i = 0; i < n; ++i) bids.set_row(i, table.evaluate(draws[i]));
            const Assignment assignment = greedy_allocate(bids, k);
            double gfp = 0.0;
            for (double p : first_price_payments(bids, assignment)) gfp += p;
            double vcg = 0.0;
            for (double p : truthful_vcg(ValueProfile(draws), s.curve()).payments) vcg += p;

            out.first_price.add(gfp);
            out.vcg.add(vcg);
            out.difference.add(gfp - vcg);
            if (keep_rounds) out.rounds.push_back({gfp, vcg});
        }
    });

    Moments first_price, vcg, difference;
    RevenueEstimate estimate;
    estimate.samples = samples;
    for (auto& block : results) {
        first_price.merge(block.first_price);
        vcg.merge(block.vcg);
        difference.merge(block.difference);
        if (keep_rounds) {
            estimate.rounds.insert(estimate.rounds.end(), block.rounds.begin(),
                                   block.rounds.end());
        }
    }
    estimate.first_price = first_price.estimate();
    estimate.vcg = vcg.estimate();
    estimate.difference = difference.estimate();
    return estimate;
}

}  // namespace posauction
