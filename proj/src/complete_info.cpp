#include "posauction/complete_info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "posauction/errors.hpp"

namespace posauction {

namespace {

double sorted_value(const ValueProfile& values, const std::vector<std::size_t>& order,
                    std::size_t rank) {
    return rank < order.size() ? values[order[rank]] : 0.0;
}

double optimal_welfare(const SlotCurve& curve, const ValueProfile& values) {
    const auto order = order_by_value(values);
    double total = 0.0;
    for (std::size_t j = 0; j < curve.k() && j < order.size(); ++j) {
        total += curve[j] * values[order[j]];
    }
    return total;
}

double agent_payment(PaymentRule rule, const ExpressiveBidProfile& bids,
                     const Assignment& assignment, std::size_t k,
                     const TieHint& tie_hint, std::size_t agent) {
    const auto pos = assignment.position_of(agent);
    if (!pos) return 0.0;
    switch (rule) {
        case PaymentRule::FirstPrice:
            return bids(agent, *pos);
        case PaymentRule::SecondPrice: {
            double next = 0.0;
            for (std::size_t i = 0; i < bids.agents(); ++i) {
                const auto other = assignment.position_of(i);
                if (other && *other <= *pos) continue;
                next = std::max(next, bids(i, *pos));
            }
            return next;
        }
        case PaymentRule::Vcg:
            return vcg_payment_of(bids, assignment, k, agent, tie_hint);
    }
    return 0.0;
}

// Evaluates one agent's utility for a candidate profile.
class UtilityProbe {
public:
    UtilityProbe(PaymentRule rule, const SlotCurve& curve, const ValueProfile& values,
                 const TieHint& tie_hint)
        : rule_(rule), curve_(curve), values_(values), tie_hint_(tie_hint) {}

    double operator()(const ExpressiveBidProfile& bids, std::size_t agent) const {
        const std::size_t k = curve_.k();
        const Assignment a = greedy_allocate(bids, k, tie_hint_);
        const auto pos = a.position_of(agent);
        const double gross = pos ? curve_[*pos] * values_[agent] : 0.0;
        return gross - agent_payment(rule_, bids, a, k, tie_hint_, agent);
    }

private:
    PaymentRule rule_;
    const SlotCurve& curve_;
    const ValueProfile& values_;
    const TieHint& tie_hint_;
};

std::vector<double> price_grid(double max_price, double step) {
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor(max_price / step));
    grid.reserve(count + 2);
    for (std::size_t g = 0; g <= count; ++g) grid.push_back(static_cast<double>(g) * step);
    if (grid.back() < max_price) grid.push_back(max_price);
    return grid;
}

}  // namespace

VcgResult truthful_vcg(const ValueProfile& values, const SlotCurve& curve) {
    const std::size_t k = curve.k();
    VcgResult result;
    result.ordering = order_by_value(values);
    result.payments.assign(k, 0.0);
    double next = 0.0;
    for (std::size_t j = k; j-- > 0;) {
        next += (curve[j] - curve.at_or_zero(j + 1)) *
                sorted_value(values, result.ordering, j + 1);
        result.payments[j] = next;
    }
    result.utilities.assign(values.n(), 0.0);
    for (std::size_t r = 0; r < k && r < values.n(); ++r) {
        const std::size_t agent = result.ordering[r];
        result.utilities[agent] = curve[r] * values[agent] - result.payments[r];
    }
    return result;
}

EquilibriumProfile construct_equilibrium_bids(const ValueProfile& values,
                                              const SlotCurve& curve) {
    const std::size_t k = curve.k();
    const std::size_t n = values.n();
    const VcgResult vcg = truthful_vcg(values, curve);

    EquilibriumProfile out{ExpressiveBidProfile(n, k), {}};
    std::vector<double> row(k);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t agent = vcg.ordering[r];
        const double v = values[agent];
        const double u = vcg.utilities[agent];
        for (std::size_t j = 0; j < k; ++j) {
            // beta_j v - u written as p_j minus the envy gap u - (beta_j v - p_j),
            // which is exactly zero for the holder of j and the agent just below.
            double gap = 0.0;
            if (r != j && r != j + 1) {
                gap = std::max(0.0, u - (curve[j] * v - vcg.payments[j]));
            }
            row[j] = std::max(vcg.payments[j] - gap, 0.0);
        }
        for (std::size_t j = k - 1; j-- > 0;) row[j] = std::max(row[j], row[j + 1]);
        out.bids.set_row(agent, row);
    }
    for (std::size_t j = 0; j < k && j < n; ++j) out.tie_hint[j] = vcg.ordering[j];
    return out;
}

DeviationGrid DeviationGrid::standard(double v_max) {
    const double scale = v_max > 0.0 ? v_max : 1.0;
    return DeviationGrid{1e-3 * scale, {1e-3 * scale, 1e-6 * scale}, 10};
}

bool is_efficient(const Assignment& assignment, const SlotCurve& curve,
                  const ValueProfile& values, double tol) {
    const double best = optimal_welfare(curve, values);
    return welfare(assignment, curve, values) >= best - tol * std::max(1.0, best);
}

bool check_payment_floor(const AuctionOutcome& outcome, const ValueProfile& values,
                         const SlotCurve& curve, double tol) {
    if (!is_efficient(outcome.assignment, curve, values)) {
        throw DomainError("payment floor is only defined for efficient outcomes");
    }
    const VcgResult vcg = truthful_vcg(values, curve);
    for (std::size_t j = 0; j < outcome.assignment.positions(); ++j) {
        const auto agent = outcome.assignment.agent_at(j);
        if (agent && outcome.payments[*agent] < vcg.payments[j] - tol) return false;
    }
    return true;
}

NashReport verify_nash(const BidProfile& bids, const TieHint& tie_hint,
                       const ValueProfile& values, const MechanismSpec& spec,
                       const SlotCurve& curve, const DeviationGrid& grid, double tol) {
    if (!(grid.step > 0.0) || grid.coarse_stride == 0) {
        throw DomainError("deviation grid must have a positive step");
    }
    const std::size_t k = curve.k();
    const std::size_t n = values.n();

    const auto* simple = std::get_if<SimplifiedBidProfile>(&bids);
    const ExpressiveBidProfile expanded =
        simple ? simple->expand() : std::get<ExpressiveBidProfile>(bids);

    NashReport report;
    const AuctionOutcome outcome = run_auction(spec, bids, curve, values, tie_hint);
    report.efficiency_flag = is_efficient(outcome.assignment, curve, values);
    report.payment_floor_ok =
        report.efficiency_flag && check_payment_floor(outcome, values, curve, tol);

    double max_bid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (double b : expanded.row(i)) max_bid = std::max(max_bid, b);
    }
    std::vector<double> winning(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (auto a = outcome.assignment.agent_at(j)) winning[j] = expanded(*a, j);
    }

    const UtilityProbe probe(spec.payment_rule, curve, values, tie_hint);
    double best_gain = -std::numeric_limits<double>::infinity();
    Deviation best;

    ExpressiveBidProfile scratch = expanded;
    std::vector<double> row(k);
    auto try_row = [&](std::size_t agent) {
        scratch.set_row(agent, row);
        const double gain = probe(scratch, agent) - outcome.utilities[agent];
        if (gain > best_gain) {
            best_gain = gain;
            best = Deviation{agent, row, gain};
        }
    };

    for (std::size_t agent = 0; agent < n; ++agent) {
        if (simple) {
            const ScalingVector& alpha = simple->scaling;
            std::vector<double> scalars;
            for (std::size_t j = 0; j < k; ++j) {
                scalars.push_back(winning[j] / alpha[j]);
                for (double eps : grid.epsilons) scalars.push_back((winning[j] + eps) / alpha[j]);
            }
            const double max_scalar = max_bid / alpha[k - 1];
            for (double c : price_grid(max_scalar, grid.step / alpha[0])) scalars.push_back(c);
            for (double c : scalars) {
                for (std::size_t j = 0; j < k; ++j) row[j] = c * alpha[j];
                try_row(agent);
            }
        } else {
            std::vector<double> prices = price_grid(max_bid, grid.step);
            for (std::size_t j = 0; j < k; ++j) {
                prices.push_back(winning[j]);
                for (double eps : grid.epsilons) prices.push_back(winning[j] + eps);
            }
            // Flat-then-zero: price p on positions 0..target, nothing below.
            for (std::size_t target = 0; target < k; ++target) {
                for (double p : prices) {
                    for (std::size_t j = 0; j < k; ++j) row[j] = j <= target ? p : 0.0;
                    try_row(agent);
                }
            }
            // Coarse single-coordinate changes, clamped back into the cone.
            const auto own = expanded.row(agent);
            for (std::size_t target = 0; target < k; ++target) {
                for (std::size_t g = 0; g < prices.size(); ++g) {
                    const bool ladder = g >= prices.size() - k * (1 + grid.epsilons.size());
                    if (!ladder && g % grid.coarse_stride != 0) continue;
                    const double p = prices[g];
                    for (std::size_t j = 0; j < k; ++j) {
                        if (j < target) row[j] = std::max(own[j], p);
                        else if (j == target) row[j] = p;
                        else row[j] = std::min(own[j], p);
                    }
                    try_row(agent);
                }
            }
        }
        scratch.set_row(agent, expanded.row(agent));
    }

    report.max_gain = n == 0 ? 0.0 : best_gain;
    report.is_equilibrium = report.max_gain <= tol;
    if (!report.is_equilibrium) report.worst_violation = best;
    return report;
}

}  // namespace posauction
