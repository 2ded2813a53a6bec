#pragma once

// Complete-information analysis of the expressive first-price auction:
// truthful VCG payments, the target-profit equilibrium bids, and a Nash
// verifier over structured unilateral deviations.

#include <cstddef>
#include <optional>
#include <vector>

#include "posauction/auction.hpp"

namespace posauction {

struct VcgResult {
    // Agent indices sorted by value, descending.
    std::vector<std::size_t> ordering;
    // Payment attached to each position, p_0..p_{k-1}.
    std::vector<double> payments;
    // Truthful VCG utility per agent (original agent index).
    std::vector<double> utilities;
};

// p_j = (beta_j - beta_{j+1}) v_(j+1) + p_{j+1}, with missing values read as 0.
VcgResult truthful_vcg(const ValueProfile& values, const SlotCurve& curve);

struct EquilibriumProfile {
    ExpressiveBidProfile bids;
    // Position j points to the j-th highest agent.
    TieHint tie_hint;
};

// b_ij = max(beta_j v_i - u_i, 0) with u the truthful VCG utilities. Bids
// that tie mathematically (holder of j and the next agent down, both at p_j)
// are produced bit-identical so the tie hint decides them.
EquilibriumProfile construct_equilibrium_bids(const ValueProfile& values,
                                              const SlotCurve& curve);

struct DeviationGrid {
    // Spacing of the uniform price grid over [0, max bid].
    double step = 0.0;
    // Increments added to the current winning bid of each target position.
    std::vector<double> epsilons;
    // Every `coarse_stride`-th grid price is also tried coordinate-wise.
    std::size_t coarse_stride = 10;

    // Step 1e-3 * v_max, ladder {1e-3, 1e-6} * v_max.
    static DeviationGrid standard(double v_max);
};

struct Deviation {
    std::size_t agent = 0;
    std::vector<double> bids;  // expanded per-position bids
    double gain = 0.0;
};

struct NashReport {
    bool is_equilibrium = false;
    double max_gain = 0.0;
    // Only set when the best deviation gains more than the tolerance.
    std::optional<Deviation> worst_violation;
    bool efficiency_flag = false;
    bool payment_floor_ok = false;
};

// Searches flat-then-zero deviations (price p on positions 0..j, 0 below) at
// each target position for the current winning bid, the epsilon ladder above
// it, and the uniform grid, plus coarse single-coordinate changes. Simplified
// mechanisms are searched over scalar bids instead.
NashReport verify_nash(const BidProfile& bids, const TieHint& tie_hint,
                       const ValueProfile& values, const MechanismSpec& spec,
                       const SlotCurve& curve, const DeviationGrid& grid,
                       double tol);

// True iff welfare of the assignment is maximal up to `tol` (relative).
bool is_efficient(const Assignment& assignment, const SlotCurve& curve,
                  const ValueProfile& values, double tol = 1e-12);

// Every assigned agent pays at least the truthful VCG price of its position,
// minus `tol`. Throws DomainError for inefficient outcomes.
bool check_payment_floor(const AuctionOutcome& outcome, const ValueProfile& values,
                         const SlotCurve& curve, double tol);

}  // namespace posauction
