#pragma once

// Position auction primitives: slot curves, bid profiles, greedy allocation
// and the first-price / second-price / VCG payment rules.
//
// Agents and positions are 0-based throughout the library. Position 0 is the
// top slot.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace posauction {

// Strictly positive, non-increasing vector. Shared representation for the
// quality curve and the public scaling vector of simplified auctions.
class PositiveNonIncreasing {
public:
    PositiveNonIncreasing() = default;
    explicit PositiveNonIncreasing(std::vector<double> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    double operator[](std::size_t j) const { return entries_[j]; }
    // Entry j, or 0 for the virtual position one past the end.
    double at_or_zero(std::size_t j) const noexcept {
        return j < entries_.size() ? entries_[j] : 0.0;
    }
    std::span<const double> entries() const noexcept { return entries_; }

private:
    std::vector<double> entries_;
};

// Per-position value multipliers beta_0 >= beta_1 >= ... > 0.
class SlotCurve : public PositiveNonIncreasing {
public:
    SlotCurve() = default;
    explicit SlotCurve(std::vector<double> betas)
        : PositiveNonIncreasing(std::move(betas)) {}
    std::size_t k() const noexcept { return size(); }
};

// Public vector alpha turning a scalar bid into per-position bids.
class ScalingVector : public PositiveNonIncreasing {
public:
    ScalingVector() = default;
    explicit ScalingVector(std::vector<double> alphas)
        : PositiveNonIncreasing(std::move(alphas)) {}
};

// Non-negative per-conversion values, one per agent.
class ValueProfile {
public:
    ValueProfile() = default;
    explicit ValueProfile(std::vector<double> values);

    std::size_t n() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

// n x k matrix of non-negative bids, each row non-increasing over positions.
// Zero bids are allowed.
class ExpressiveBidProfile {
public:
    ExpressiveBidProfile() = default;
    ExpressiveBidProfile(std::size_t agents, std::size_t positions);
    explicit ExpressiveBidProfile(std::vector<std::vector<double>> rows);

    std::size_t agents() const noexcept { return agents_; }
    std::size_t positions() const noexcept { return positions_; }

    double operator()(std::size_t agent, std::size_t position) const {
        return data_[agent * positions_ + position];
    }
    std::span<const double> row(std::size_t agent) const {
        return {data_.data() + agent * positions_, positions_};
    }
    // Replaces one agent's bid vector; the row must satisfy the invariants.
    void set_row(std::size_t agent, std::span<const double> bids);

    std::vector<std::vector<double>> to_rows() const;

private:
    std::size_t agents_ = 0;
    std::size_t positions_ = 0;
    std::vector<double> data_;
};

// Scalar bids extended to position j as bids[i] * alphas[j].
struct SimplifiedBidProfile {
    std::vector<double> bids;
    ScalingVector scaling;

    ExpressiveBidProfile expand() const;
};

using BidProfile = std::variant<ExpressiveBidProfile, SimplifiedBidProfile>;

// Preferred winner per position, consulted only when that agent attains the
// maximal remaining bid.
using TieHint = std::map<std::size_t, std::size_t>;

// Partial injective map position -> agent.
class Assignment {
public:
    Assignment() = default;
    Assignment(std::size_t positions, std::size_t agents);

    std::size_t positions() const noexcept { return holder_.size(); }
    std::size_t agents() const noexcept { return slot_.size(); }

    std::optional<std::size_t> agent_at(std::size_t position) const {
        return holder_[position];
    }
    std::optional<std::size_t> position_of(std::size_t agent) const {
        return slot_[agent];
    }
    void assign(std::size_t position, std::size_t agent);

    bool operator==(const Assignment&) const = default;

private:
    std::vector<std::optional<std::size_t>> holder_;
    std::vector<std::optional<std::size_t>> slot_;
};

struct AuctionOutcome {
    Assignment assignment;
    std::vector<double> payments;
    std::vector<double> utilities;
};

enum class PaymentRule { FirstPrice, SecondPrice, Vcg };

struct MechanismSpec {
    PaymentRule payment_rule = PaymentRule::FirstPrice;
    // Empty for the expressive variant.
    std::optional<ScalingVector> scaling;

    bool expressive() const noexcept { return !scaling.has_value(); }
};

PaymentRule parse_payment_rule(std::string_view name);
std::string_view to_string(PaymentRule rule) noexcept;

// Fills positions top to bottom with the highest remaining bid. Ties go to the
// hinted agent when it attains the maximum, otherwise to the lowest index.
// Positions beyond the number of agents stay empty.
Assignment greedy_allocate(const ExpressiveBidProfile& bids, std::size_t k,
                           const TieHint& tie_hint = {});

std::vector<double> first_price_payments(const ExpressiveBidProfile& bids,
                                         const Assignment& assignment);

// The holder of position j pays the largest bid on j among agents that hold
// none of positions 0..j; 0 when no such agent exists.
std::vector<double> second_price_payments(const ExpressiveBidProfile& bids,
                                          const Assignment& assignment);

// Externality according to bids, computed by removing each winner and
// re-running the greedy rule on the remaining agents.
std::vector<double> vcg_payments_from_bids(const ExpressiveBidProfile& bids,
                                           const Assignment& assignment,
                                           std::size_t k,
                                           const TieHint& tie_hint = {});

// VCG payment of a single assigned agent; 0 for agents without a position.
double vcg_payment_of(const ExpressiveBidProfile& bids, const Assignment& assignment,
                      std::size_t k, std::size_t agent, const TieHint& tie_hint = {});

AuctionOutcome run_auction(const MechanismSpec& spec, const BidProfile& bids,
                           const SlotCurve& curve, const ValueProfile& values,
                           const TieHint& tie_hint = {});

// Welfare sum_j beta_j * v_{agent at j} of an assignment.
double welfare(const Assignment& assignment, const SlotCurve& curve,
               const ValueProfile& values);

// Indices of agents sorted by value, descending; ties by lower index first.
std::vector<std::size_t> order_by_value(const ValueProfile& values);

}  // namespace posauction
