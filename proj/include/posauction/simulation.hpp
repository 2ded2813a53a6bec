#pragma once

// Paired Monte Carlo revenue comparison: expressive first-price auction under
// a tabulated bid function versus the truthful VCG outcome on the same draws.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "posauction/bayes.hpp"
#include "posauction/bid_table.hpp"

namespace posauction {

struct RoundRevenue {
    double first_price = 0.0;
    double vcg = 0.0;
};

struct MeanEstimate {
    double mean = 0.0;
    // Standard error of the mean; empty for a single sample.
    std::optional<double> std_error;
};

struct RevenueEstimate {
    std::size_t samples = 0;
    MeanEstimate first_price;
    MeanEstimate vcg;
    MeanEstimate difference;  // first_price - vcg, per round
    std::vector<RoundRevenue> rounds;  // filled only on request
};

inline constexpr std::size_t kRoundsPerBlock = 4096;

// Each block of kRoundsPerBlock rounds draws from its own counter-based
// stream (seed, block index); blocks are merged in index order, so results
// are bit-identical for any thread count.
RevenueEstimate simulate_revenue(const BayesSetting& s, const EquilibriumBidTable& table,
                                 std::size_t samples, std::uint64_t seed,
                                 bool keep_rounds = false);

}  // namespace posauction
