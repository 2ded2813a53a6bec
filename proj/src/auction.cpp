#include "posauction/auction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "posauction/errors.hpp"

namespace posauction {

namespace {

bool finite_non_negative(double x) { return std::isfinite(x) && x >= 0.0; }

void check_row(std::span<const double> row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (!finite_non_negative(row[j])) {
            throw DomainError("bids must be finite and non-negative");
        }
        if (j > 0 && row[j] > row[j - 1]) {
            throw DomainError("bid rows must be non-increasing over positions");
        }
    }
}

void check_assignment(const ExpressiveBidProfile& bids,
                      const Assignment& assignment) {
    if (assignment.agents() != bids.agents() ||
        assignment.positions() > bids.positions()) {
        throw DimensionError("assignment does not match the bid profile");
    }
}

// Greedy rule with some agents removed from consideration.
Assignment greedy_excluding(const ExpressiveBidProfile& bids, std::size_t k,
                            const TieHint& tie_hint,
                            std::optional<std::size_t> excluded) {
    Assignment assignment(k, bids.agents());
    std::vector<bool> taken(bids.agents(), false);
    if (excluded) taken[*excluded] = true;

    for (std::size_t j = 0; j < k; ++j) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < bids.agents(); ++i) {
            if (taken[i]) continue;
            if (!best || bids(i, j) > bids(*best, j)) best = i;
        }
        if (!best) break;
        if (auto hint = tie_hint.find(j); hint != tie_hint.end()) {
            const std::size_t h = hint->second;
            if (h < bids.agents() && !taken[h] && bids(h, j) == bids(*best, j)) {
                best = h;
            }
        }
        assignment.assign(j, *best);
        taken[*best] = true;
    }
    return assignment;
}

double assigned_bid_value(const ExpressiveBidProfile& bids,
                          const Assignment& assignment,
                          std::optional<std::size_t> skip) {
    double total = 0.0;
    for (std::size_t j = 0; j < assignment.positions(); ++j) {
        const auto agent = assignment.agent_at(j);
        if (agent && agent != skip) total += bids(*agent, j);
    }
    return total;
}

}  // namespace

PositiveNonIncreasing::PositiveNonIncreasing(std::vector<double> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty()) throw DimensionError("curve must have at least one entry");
    for (std::size_t j = 0; j < entries_.size(); ++j) {
        if (!std::isfinite(entries_[j]) || entries_[j] <= 0.0) {
            throw DomainError("curve entries must be finite and strictly positive");
        }
        if (j > 0 && entries_[j] > entries_[j - 1]) {
            throw DomainError("curve entries must be non-increasing");
        }
    }
}

ValueProfile::ValueProfile(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!finite_non_negative(v)) {
            throw DomainError("values must be finite and non-negative");
        }
    }
}

ExpressiveBidProfile::ExpressiveBidProfile(std::size_t agents, std::size_t positions)
    : agents_(agents), positions_(positions), data_(agents * positions, 0.0) {}

ExpressiveBidProfile::ExpressiveBidProfile(std::vector<std::vector<double>> rows)
    : agents_(rows.size()), positions_(rows.empty() ? 0 : rows.front().size()) {
    data_.reserve(agents_ * positions_);
    for (const auto& r : rows) {
        if (r.size() != positions_) throw DimensionError("ragged bid matrix");
        check_row(r);
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

void ExpressiveBidProfile::set_row(std::size_t agent, std::span<const double> bids) {
    if (agent >= agents_ || bids.size() != positions_) {
        throw DimensionError("bid row does not match the profile");
    }
    check_row(bids);
    std::copy(bids.begin(), bids.end(), data_.begin() + agent * positions_);
}

std::vector<std::vector<double>> ExpressiveBidProfile::to_rows() const {
    std::vector<std::vector<double>> rows;
    rows.reserve(agents_);
    for (std::size_t i = 0; i < agents_; ++i) {
        auto r = row(i);
        rows.emplace_back(r.begin(), r.end());
    }
    return rows;
}

ExpressiveBidProfile SimplifiedBidProfile::expand() const {
    ExpressiveBidProfile out(bids.size(), scaling.size());
    std::vector<double> row(scaling.size());
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (!finite_non_negative(bids[i])) {
            throw DomainError("scalar bids must be finite and non-negative");
        }
        for (std::size_t j = 0; j < scaling.size(); ++j) row[j] = bids[i] * scaling[j];
        out.set_row(i, row);
    }
    return out;
}

Assignment::Assignment(std::size_t positions, std::size_t agents)
    : holder_(positions), slot_(agents) {}

void Assignment::assign(std::size_t position, std::size_t agent) {
    if (position >= holder_.size() || agent >= slot_.size()) {
        throw DimensionError("assignment index out of range");
    }
    if (holder_[position] || slot_[agent]) {
        throw DomainError("position or agent already assigned");
    }
    holder_[position] = agent;
    slot_[agent] = position;
}

PaymentRule parse_payment_rule(std::string_view name) {
    if (name == "first-price" || name == "gfp") return PaymentRule::FirstPrice;
    if (name == "second-price" || name == "gsp") return PaymentRule::SecondPrice;
    if (name == "vcg") return PaymentRule::Vcg;
    throw ConfigError("unknown payment rule: " + std::string(name));
}

std::string_view to_string(PaymentRule rule) noexcept {
    switch (rule) {
        case PaymentRule::FirstPrice: return "first-price";
        case PaymentRule::SecondPrice: return "second-price";
        case PaymentRule::Vcg: return "vcg";
    }
    return "unknown";
}

Assignment greedy_allocate(const ExpressiveBidProfile& bids, std::size_t k,
                           const TieHint& tie_hint) {
    if (k > bids.positions()) {
        throw DimensionError("more positions requested than bid columns");
    }
    return greedy_excluding(bids, k, tie_hint, std::nullopt);
}

std::vector<double> first_price_payments(const ExpressiveBidProfile& bids,
                                         const Assignment& assignment) {
    check_assignment(bids, assignment);
    std::vector<double> payments(bids.agents(), 0.0);
    for (std::size_t j = 0; j < assignment.positions(); ++j) {
        if (auto agent = assignment.agent_at(j)) payments[*agent] = bids(*agent, j);
    }
    return payments;
}

std::vector<double> second_price_payments(const ExpressiveBidProfile& bids,
                                          const Assignment& assignment) {
    check_assignment(bids, assignment);
    std::vector<double> payments(bids.agents(), 0.0);
    for (std::size_t j = 0; j < assignment.positions(); ++j) {
        const auto holder = assignment.agent_at(j);
        if (!holder) continue;
        double next = 0.0;
        for (std::size_t i = 0; i < bids.agents(); ++i) {
            const auto pos = assignment.position_of(i);
            if (pos && *pos <= j) continue;
            next = std::max(next, bids(i, j));
        }
        payments[*holder] = next;
    }
    return payments;
}

double vcg_payment_of(const ExpressiveBidProfile& bids, const Assignment& assignment,
                      std::size_t k, std::size_t agent, const TieHint& tie_hint) {
    if (!assignment.position_of(agent)) return 0.0;
    const double with_agent = assigned_bid_value(bids, assignment, agent);
    const Assignment without = greedy_excluding(bids, k, tie_hint, agent);
    const double without_agent = assigned_bid_value(bids, without, std::nullopt);
    return std::max(0.0, without_agent - with_agent);
}

std::vector<double> vcg_payments_from_bids(const ExpressiveBidProfile& bids,
                                           const Assignment& assignment,
                                           std::size_t k, const TieHint& tie_hint) {
    check_assignment(bids, assignment);
    if (k > bids.positions() || assignment.positions() != k) {
        throw DimensionError("assignment does not cover k positions");
    }
    std::vector<double> payments(bids.agents(), 0.0);
    for (std::size_t i = 0; i < bids.agents(); ++i) {
        payments[i] = vcg_payment_of(bids, assignment, k, i, tie_hint);
    }
    return payments;
}

AuctionOutcome run_auction(const MechanismSpec& spec, const BidProfile& bids,
                           const SlotCurve& curve, const ValueProfile& values,
                           const TieHint& tie_hint) {
    const std::size_t k = curve.k();
    ExpressiveBidProfile expanded;
    if (const auto* simple = std::get_if<SimplifiedBidProfile>(&bids)) {
        if (spec.expressive()) {
            throw DimensionError("simplified bids submitted to an expressive mechanism");
        }
        if (simple->scaling.size() != k ||
            !std::equal(simple->scaling.entries().begin(), simple->scaling.entries().end(),
                        spec.scaling->entries().begin(), spec.scaling->entries().end())) {
            throw DimensionError("scaling vector does not match the mechanism");
        }
        expanded = simple->expand();
    } else {
        if (!spec.expressive()) {
            throw DimensionError("expressive bids submitted to a simplified mechanism");
        }
        expanded = std::get<ExpressiveBidProfile>(bids);
    }
    if (expanded.positions() < k) throw DimensionError("fewer bid columns than positions");
    if (expanded.agents() != values.n()) {
        throw DimensionError("bid profile and value profile disagree on agent count");
    }

    AuctionOutcome outcome;
    outcome.assignment = greedy_allocate(expanded, k, tie_hint);
    switch (spec.payment_rule) {
        case PaymentRule::FirstPrice:
            outcome.payments = first_price_payments(expanded, outcome.assignment);
            break;
        case PaymentRule::SecondPrice:
            outcome.payments = second_price_payments(expanded, outcome.assignment);
            break;
        case PaymentRule::Vcg:
            outcome.payments =
                vcg_payments_from_bids(expanded, outcome.assignment, k, tie_hint);
            break;
    }
    outcome.utilities.resize(values.n());
    for (std::size_t i = 0; i < values.n(); ++i) {
        const auto pos = outcome.assignment.position_of(i);
        const double gross = pos ? curve[*pos] * values[i] : 0.0;
        outcome.utilities[i] = gross - outcome.payments[i];
    }
    return outcome;
}

double welfare(const Assignment& assignment, const SlotCurve& curve,
               const ValueProfile& values) {
    double total = 0.0;
    for (std::size_t j = 0; j < assignment.positions() && j < curve.k(); ++j) {
        if (auto agent = assignment.agent_at(j)) total += curve[j] * values[*agent];
    }
    return total;
}

std::vector<std::size_t> order_by_value(const ValueProfile& values) {
    std::vector<std::size_t> order(values.n());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] > values[b];
    });
    return order;
}

}  // namespace posauction
