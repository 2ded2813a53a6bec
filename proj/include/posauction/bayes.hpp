#pragma once

// Incomplete-information equilibrium of the expressive first-price auction.
//
// With n agents whose values are i.i.d. from F on [0, vbar], the equilibrium
// bid on position j is b*_j(v): the expected truthful VCG payment for j,
// conditioned on v being the j-th highest value. This header provides both
// evaluation routes for b*, its derivative, the allocation probabilities
// P_{s,m}(x) of an agent reporting the vector x, expected utilities, the
// Myerson payment, and numerical residual checks for the identities that
// make b* an equilibrium.
//
// Positions are 0-based: position j here is the (j+1)-th slot.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "posauction/auction.hpp"
#include "posauction/distributions.hpp"
#include "posauction/quadrature.hpp"

namespace posauction {

// n agents, k = curve.k() positions, i.i.d. values. Requires n >= k + 1.
class BayesSetting {
public:
    BayesSetting(std::size_t n, SlotCurve curve, DistributionPtr dist,
                 QuadratureConfig cfg = {});

    std::size_t n() const noexcept { return n_; }
    std::size_t k() const noexcept { return curve_.k(); }
    const SlotCurve& curve() const noexcept { return curve_; }
    const ValueDistribution& dist() const noexcept { return *dist_; }
    const DistributionPtr& dist_ptr() const noexcept { return dist_; }
    const QuadratureConfig& cfg() const noexcept { return cfg_; }
    double upper() const { return dist_->upper(); }

private:
    std::size_t n_;
    SlotCurve curve_;
    DistributionPtr dist_;
    QuadratureConfig cfg_;
};

// Bid on position j as a function of a (reported) value. Everyone, deviator
// included, uses the same function. Empty means b*.
using BidFunction = std::function<double(std::size_t position, double value)>;

// b*_j(v) via the order-statistic integral (default path).
double bstar_integral(std::size_t j, double v, const BayesSetting& s);

// b*_j(v) via the alternating binomial sum over Z_{n-s+t}(v). Cancels badly
// for large n - s; meant as a cross-check.
double bstar_binomial(std::size_t j, double v, const BayesSetting& s);

// All positions at once, integral path.
std::vector<double> bstar(double v, const BayesSetting& s);

// d/dv b*_j(v). Uses the closed form with the binomial sum over t folded
// back into a single integral of r^{n-s} (1 - r)^{s-j}, r = F(u)/F(v).
// Undefined at v = 0.
double bstar_derivative(std::size_t j, double v, const BayesSetting& s);

// The same derivative as the literal alternating sum of Z terms.
double bstar_derivative_binomial(std::size_t j, double v, const BayesSetting& s);

// P_{s,m}(x): probability of winning position s against m opponents bidding
// b*(their value) when bidding b*_t(x_t) on each position t. x must be
// non-increasing and inside the support; only x_0..x_s matter.
double alloc_prob(std::size_t position, std::size_t opponents, std::span<const double> x,
                  const ValueDistribution& dist);

// P_{s,n-1}((v, ..., v)) for s = 0..k-1.
std::vector<double> truthful_alloc_probs(double v, const BayesSetting& s);

// u*(x, v) = sum_s P_{s,n-1}(x) (beta_s v - bid_s(x_s)).
double expected_utility(std::span<const double> x, double v, const BayesSetting& s,
                        const BidFunction& bids = {});

// sum_s beta_s int_0^v P_{s,n-1}(t, ..., t) dt, the utility of truthful play.
double truthful_utility_integral(double v, const BayesSetting& s);

// Expected payment pinned down by the efficient allocation:
// sum_s P_s(v) beta_s v - int_0^v sum_s P_s(z) beta_s dz.
double myerson_expected_payment(double v, const BayesSetting& s);

// sum_s P_{s,n-1}((v, ..., v)) b*_s(v), expected first-price payment under b*.
double bstar_expected_payment(double v, const BayesSetting& s);

// |central difference in x_j of u*((upper, x_j, v, ..., v), v) at x_j = v|.
// `upper` holds x_0..x_{j-1}; defaults to v on every coordinate.
double check_lemma1(std::size_t j, double v, const BayesSetting& s, double h,
                    std::span<const double> upper = {}, const BidFunction& bids = {});

// Minimum over the grid of the mixed central difference d/dv d/dx_j of
// g(x_j, v) = u*((upper, x_j, v, ..., v), v). `upper` defaults to the
// largest grid point (plus h) on every coordinate. Pairs whose stencil leaves
// the non-increasing reports (x_j - h < v + h when positions follow j) are
// skipped; throws DomainError if none remain.
double check_lemma2(std::size_t j, std::span<const double> v_grid,
                    std::span<const double> x_grid, const BayesSetting& s, double h,
                    std::span<const double> upper = {});

// |d/dv b*_j(v) - (n-j') f/F [(beta_j v - b*_j) - (beta_{j+1} v - b*_{j+1})]|
// with j' = j + 1 the 1-based index and b*_k = beta_k = 0.
double check_ode(std::size_t j, double v, const BayesSetting& s);

// Same residual with the left side replaced by a central difference of b*_j.
double check_ode_fd(std::size_t j, double v, const BayesSetting& s, double h);

// Finite-difference residual in x_j at the given x (x_j itself is the
// evaluation point). Without `lower` it checks
//   d/dx_j (P_{j,m} + P_{j+1,m}) = 0,                     m >= j + 1 (1-based),
// with `lower` = l it checks
//   d/dx_j P_{l,m} = 0,                                   m >= l >= j + 2.
// Both identities need x_{j+1} = ... = x_j; otherwise the residual is generally
// non-zero.
double check_auxiliary_lemmas(std::size_t j, std::size_t opponents,
                              std::optional<std::size_t> lower, std::span<const double> x,
                              const ValueDistribution& dist, double h);

struct BestResponseResult {
    // max over scanned x of u*(x, v) - u*((v, ..., v), v); >= 0 since the
    // truthful report is among the candidates.
    double max_gain = 0.0;
    std::vector<double> best_report;
    // Stage j: best gain from changing x_j alone, with x_{j+1..} truthful and
    // x_{<j} ranging over the grid (the inductive step, j = k-1 first).
    std::vector<double> stage_gains;
};

// Exhaustive scan of monotone reports on `grid_points` uniform points of
// [0, vbar] (plus v itself).
BestResponseResult best_response_scan(double v, const BayesSetting& s,
                                      std::size_t grid_points,
                                      const BidFunction& bids = {});

}  // namespace posauction
