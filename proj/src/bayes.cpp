#include "posauction/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "posauction/errors.hpp"

namespace posauction {

namespace {

double factorial(std::size_t m) {
    if (m > 170) throw DomainError("factorial overflows double");
    double out = 1.0;
    for (std::size_t i = 2; i <= m; ++i) out *= static_cast<double>(i);
    return out;
}

double binomial(std::size_t m, std::size_t r) {
    if (r > m) return 0.0;
    r = std::min(r, m - r);
    double out = 1.0;
    for (std::size_t i = 1; i <= r; ++i) {
        out = out * static_cast<double>(m - r + i) / static_cast<double>(i);
    }
    return std::round(out);
}

void check_position(std::size_t j, const BayesSetting& s) {
    if (j >= s.k()) throw DomainError("position index out of range");
}

void check_value(double v, const BayesSetting& s) {
    if (!(v >= 0.0) || v > s.upper()) throw DomainError("value outside the support");
}

double positive_cdf(double v, const ValueDistribution& dist) {
    const double fv = dist.cdf(v);
    if (!(fv > 0.0)) throw DomainError("F(v) = 0 for v > 0: not in the support");
    return fv;
}

// (n-j)! / ((n-s-1)! (s-j)!) in 1-based indices; weight of the (s+1)-th
// highest value's density when v is the j-th highest.
double order_stat_coef(std::size_t n, std::size_t j1, std::size_t s1) {
    return factorial(n - j1) / (factorial(n - s1 - 1) * factorial(s1 - j1));
}

double beta_gap(const SlotCurve& curve, std::size_t s) {
    return curve[s] - curve.at_or_zero(s + 1);
}

// P_{p,m}(x) for p = 0..x.size()-1 from the recursion, using F(x_t) values.
// Positions with p > m get probability 0.
std::vector<double> alloc_probs_from_cdf(std::span<const double> fx, std::size_t m) {
    const std::size_t count = fx.size();
    // not_above[s1] = 1 - sum_{t<s1} P_{t,s1-1}(x), 1-based.
    std::vector<double> not_above(count + 1, 1.0);
    for (std::size_t s1 = 2; s1 <= count; ++s1) {
        double won = 0.0;
        for (std::size_t t1 = 1; t1 < s1; ++t1) {
            won += binomial(s1 - 1, s1 - t1) *
                   std::pow(fx[t1 - 1], static_cast<double>(s1 - t1)) * not_above[t1];
        }
        not_above[s1] = 1.0 - won;
    }
    std::vector<double> probs(count, 0.0);
    for (std::size_t s1 = 1; s1 <= count && s1 <= m + 1; ++s1) {
        probs[s1 - 1] = binomial(m, m - s1 + 1) *
                        std::pow(fx[s1 - 1], static_cast<double>(m - s1 + 1)) *
                        not_above[s1];
    }
    return probs;
}

std::vector<double> cdf_values(std::span<const double> x, const ValueDistribution& dist) {
    std::vector<double> fx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) fx[i] = dist.cdf(x[i]);
    return fx;
}

double bid_on(const BidFunction& bids, std::size_t j, double x, const BayesSetting& s) {
    return bids ? bids(j, x) : bstar_integral(j, x, s);
}

// u*(x, v) without monotonicity checks; finite differences step outside the cone.
double utility_unchecked(std::span<const double> x, double v, const BayesSetting& s,
                         const BidFunction& bids) {
    const auto probs = alloc_probs_from_cdf(cdf_values(x, s.dist()), s.n() - 1);
    double total = 0.0;
    for (std::size_t p = 0; p < s.k(); ++p) {
        if (probs[p] == 0.0) continue;
        total += probs[p] * (s.curve()[p] * v - bid_on(bids, p, x[p], s));
    }
    return total;
}

double expected_allocation(double z, const BayesSetting& s) {
    const auto probs = truthful_alloc_probs(z, s);
    double total = 0.0;
    for (std::size_t p = 0; p < s.k(); ++p) total += s.curve()[p] * probs[p];
    return total;
}

void check_monotone_report(std::span<const double> x, const ValueDistribution& dist) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0) || x[i] > dist.upper()) {
            throw DomainError("report outside the support");
        }
        if (i > 0 && x[i] > x[i - 1]) throw DomainError("report must be non-increasing");
    }
}

void check_interior(double v, double h, double upper) {
    if (!(h > 0.0)) throw DomainError("step must be positive");
    if (!(v - h > 0.0) || v + h > upper) {
        throw DomainError("point must be at least h inside the support");
    }
}

// Enumerates non-increasing index tuples idx[from..to) with every entry <= cap.
template <class Visit>
void enumerate_monotone(std::vector<std::size_t>& idx, std::size_t from, std::size_t to,
                        std::size_t cap, std::size_t floor, Visit&& visit) {
    if (from == to) {
        visit();
        return;
    }
    for (std::size_t i = floor; i <= cap; ++i) {
        idx[from] = i;
        enumerate_monotone(idx, from + 1, to, i, floor, visit);
    }
}

}  // namespace

BayesSetting::BayesSetting(std::size_t n, SlotCurve curve, DistributionPtr dist,
                           QuadratureConfig cfg)
    : n_(n), curve_(std::move(curve)), dist_(std::move(dist)), cfg_(cfg) {
    if (!dist_) throw DomainError("missing value distribution");
    if (n_ < curve_.k() + 1) {
        throw DomainError("the Bayes setting needs n >= k + 1 agents (n = " +
                          std::to_string(n_) + ", k = " + std::to_string(curve_.k()) + ")");
    }
    cfg_.validate();
}

double bstar_integral(std::size_t j, double v, const BayesSetting& s) {
    check_position(j, s);
    check_value(v, s);
    if (v == 0.0) return 0.0;
    const auto& dist = s.dist();
    const double fv = positive_cdf(v, dist);
    const std::size_t n = s.n();
    const std::size_t j1 = j + 1;

    std::vector<double> weight;
    for (std::size_t s1 = j1; s1 <= s.k(); ++s1) {
        weight.push_back(beta_gap(s.curve(), s1 - 1) * order_stat_coef(n, j1, s1));
    }
    auto integrand = [&](double u) {
        const double r = dist.cdf(u) / fv;
        const double density = dist.pdf(u) / fv;
        double sum = 0.0;
        for (std::size_t s1 = j1; s1 <= s.k(); ++s1) {
            sum += weight[s1 - j1] * std::pow(r, static_cast<double>(n - s1 - 1)) *
                   std::pow(1.0 - r, static_cast<double>(s1 - j1));
        }
        return sum * density * u;
    };
    const auto breaks = dist.breakpoints();
    const double value = integrate(integrand, 0.0, v, breaks, s.cfg());
    return std::clamp(value, 0.0, s.curve()[j] * v);
}

double bstar_binomial(std::size_t j, double v, const BayesSetting& s) {
    check_position(j, s);
    check_value(v, s);
    if (v == 0.0) return 0.0;
    const std::size_t n = s.n();
    const std::size_t j1 = j + 1;
    double total = 0.0;
    for (std::size_t s1 = j1; s1 <= s.k(); ++s1) {
        const double coef = order_stat_coef(n, j1, s1);
        double inner = 0.0;
        for (std::size_t t = 0; t <= s1 - j1; ++t) {
            const auto m = static_cast<unsigned>(n - s1 + t);
            const double sign = t % 2 == 0 ? 1.0 : -1.0;
            inner += sign * binomial(s1 - j1, t) * coef / m *
                     (v - z_function(m, v, s.dist(), s.cfg()));
        }
        total += beta_gap(s.curve(), s1 - 1) * inner;
    }
    return total;
}

std::vector<double> bstar(double v, const BayesSetting& s) {
    std::vector<double> out(s.k());
    for (std::size_t j = 0; j < s.k(); ++j) out[j] = bstar_integral(j, v, s);
    return out;
}

double bstar_derivative(std::size_t j, double v, const BayesSetting& s) {
    check_position(j, s);
    check_value(v, s);
    if (v == 0.0) throw DomainError("b* derivative is undefined at v = 0");
    const auto& dist = s.dist();
    const double fv = positive_cdf(v, dist);
    const std::size_t n = s.n();
    const std::size_t j1 = j + 1;

    std::vector<double> weight;
    for (std::size_t s1 = j1; s1 <= s.k(); ++s1) {
        weight.push_back(beta_gap(s.curve(), s1 - 1) * order_stat_coef(n, j1, s1));
    }
    auto integrand = [&](double u) {
        const double r = dist.cdf(u) / fv;
        double sum = 0.0;
        for (std::size_t s1 = j1; s1 <= s.k(); ++s1) {
            sum += weight[s1 - j1] * std::pow(r, static_cast<double>(n - s1)) *
                   std::pow(1.0 - r, static_cast<double>(s1 - j1));
        }
        return sum;
    };
    const auto breaks = dist.breakpoints();
    return dist.pdf(v) / fv * integrate(integrand, 0.0, v, breaks, s.cfg());
}

double bstar_derivative_binomial(std::size_t j, double v, const BayesSetting& s) {
    check_position(j, s);
    check_value(v, s);
    if (v == 0.0) throw DomainError("b* derivative is undefined at v = 0");
    const auto& dist = s.dist();
    const double hazard = dist.pdf(v) / positive_cdf(v, dist);
    const std::size_t n = s.n();
    const std::size_t j1 = j + 1;
    double total = 0.0;
    for (std::size_t s1 = j1; s1 <= s.k(); ++s1) {
        const double coef = order_stat_coef(n, j1, s1);
        double inner = 0.0;
        for (std::size_t t = 0; t <= s1 - j1; ++t) {
            const auto m = static_cast<unsigned>(n - s1 + t);
            const double sign = t % 2 == 0 ? 1.0 : -1.0;
            inner += sign * binomial(s1 - j1, t) * coef * z_function(m, v, dist, s.cfg());
        }
        total += beta_gap(s.curve(), s1 - 1) * inner;
    }
    return hazard * total;
}

double alloc_prob(std::size_t position, std::size_t opponents, std::span<const double> x,
                  const ValueDistribution& dist) {
    if (position >= x.size()) throw DomainError("report vector shorter than position");
    if (position > opponents) {
        throw DomainError("position " + std::to_string(position + 1) +
                          " cannot be won against " + std::to_string(opponents) +
                          " opponents by the recursion");
    }
    check_monotone_report(x, dist);
    const auto fx = cdf_values(x.first(position + 1), dist);
    return std::clamp(alloc_probs_from_cdf(fx, opponents)[position], 0.0, 1.0);
}

std::vector<double> truthful_alloc_probs(double v, const BayesSetting& s) {
    check_value(v, s);
    const std::vector<double> fx(s.k(), s.dist().cdf(v));
    return alloc_probs_from_cdf(fx, s.n() - 1);
}

double expected_utility(std::span<const double> x, double v, const BayesSetting& s,
                        const BidFunction& bids) {
    if (x.size() != s.k()) throw DimensionError("report must have one entry per position");
    check_monotone_report(x, s.dist());
    check_value(v, s);
    return utility_unchecked(x, v, s, bids);
}

double truthful_utility_integral(double v, const BayesSetting& s) {
    check_value(v, s);
    const auto breaks = s.dist().breakpoints();
    return integrate([&](double z) { return expected_allocation(z, s); }, 0.0, v, breaks,
                     s.cfg());
}

double myerson_expected_payment(double v, const BayesSetting& s) {
    check_value(v, s);
    if (v == 0.0) return 0.0;
    return expected_allocation(v, s) * v - truthful_utility_integral(v, s);
}

double bstar_expected_payment(double v, const BayesSetting& s) {
    const auto probs = truthful_alloc_probs(v, s);
    double total = 0.0;
    for (std::size_t p = 0; p < s.k(); ++p) total += probs[p] * bstar_integral(p, v, s);
    return total;
}

double check_lemma1(std::size_t j, double v, const BayesSetting& s, double h,
                    std::span<const double> upper, const BidFunction& bids) {
    check_position(j, s);
    check_interior(v, h, s.upper());
    if (!upper.empty() && upper.size() != j) {
        throw DimensionError("upper coordinates must cover positions 0..j-1");
    }
    std::vector<double> x(s.k(), v);
    std::copy(upper.begin(), upper.end(), x.begin());
    x[j] = v + h;
    const double plus = utility_unchecked(x, v, s, bids);
    x[j] = v - h;
    const double minus = utility_unchecked(x, v, s, bids);
    return std::abs(plus - minus) / (2.0 * h);
}

double check_lemma2(std::size_t j, std::span<const double> v_grid,
                    std::span<const double> x_grid, const BayesSetting& s, double h,
                    std::span<const double> upper) {
    check_position(j, s);
    if (v_grid.empty() || x_grid.empty()) throw DomainError("empty grid");
    if (!upper.empty() && upper.size() != j) {
        throw DimensionError("upper coordinates must cover positions 0..j-1");
    }
    double top = 0.0;
    for (double g : v_grid) top = std::max(top, g);
    for (double g : x_grid) top = std::max(top, g);
    std::vector<double> upper_coords(upper.begin(), upper.end());
    if (upper.empty()) upper_coords.assign(j, std::min(top + h, s.upper()));
    const bool has_lower = j + 1 < s.k();

    auto g = [&](double xj, double value) {
        std::vector<double> x(s.k(), value);
        std::copy(upper_coords.begin(), upper_coords.end(), x.begin());
        x[j] = xj;
        return utility_unchecked(x, value, s, {});
    };
    double minimum = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double value : v_grid) {
        check_interior(value, h, s.upper());
        for (double xj : x_grid) {
            check_interior(xj, h, s.upper());
            // Every stencil point must be a non-increasing report.
            if (has_lower && xj - h < value + h) continue;
            if (!upper_coords.empty() &&
                *std::min_element(upper_coords.begin(), upper_coords.end()) < xj + h) {
                continue;
            }
            any = true;
            const double mixed = (g(xj + h, value + h) - g(xj + h, value - h) -
                                  g(xj - h, value + h) + g(xj - h, value - h)) /
                                 (4.0 * h * h);
            minimum = std::min(minimum, mixed);
        }
    }
    if (!any) throw DomainError("no grid pair keeps the report non-increasing");
    return minimum;
}

namespace {

double ode_rhs(std::size_t j, double v, const BayesSetting& s) {
    const auto& dist = s.dist();
    const double hazard = dist.pdf(v) / positive_cdf(v, dist);
    const double own = s.curve()[j] * v - bstar_integral(j, v, s);
    const double next =
        j + 1 < s.k() ? s.curve()[j + 1] * v - bstar_integral(j + 1, v, s) : 0.0;
    return static_cast<double>(s.n() - (j + 1)) * hazard * (own - next);
}

}  // namespace

double check_ode(std::size_t j, double v, const BayesSetting& s) {
    check_position(j, s);
    check_value(v, s);
    if (v == 0.0) throw DomainError("the differential equation is undefined at v = 0");
    return std::abs(bstar_derivative(j, v, s) - ode_rhs(j, v, s));
}

double check_ode_fd(std::size_t j, double v, const BayesSetting& s, double h) {
    check_position(j, s);
    check_interior(v, h, s.upper());
    const double fd = (bstar_integral(j, v + h, s) - bstar_integral(j, v - h, s)) / (2.0 * h);
    return std::abs(fd - ode_rhs(j, v, s));
}

double check_auxiliary_lemmas(std::size_t j, std::size_t opponents,
                              std::optional<std::size_t> lower, std::span<const double> x,
                              const ValueDistribution& dist, double h) {
    std::vector<std::size_t> tracked;
    if (lower) {
        if (*lower < j + 2 || opponents < *lower + 1) {
            throw DomainError("lower-position identity needs m >= l >= j + 2 (1-based)");
        }
        tracked = {*lower};
    } else {
        if (opponents < j + 2) throw DomainError("pair identity needs m >= j + 1 (1-based)");
        tracked = {j, j + 1};
    }
    const std::size_t needed = tracked.back() + 1;
    if (x.size() < needed) throw DimensionError("report vector too short");
    if (j >= x.size()) throw DimensionError("position outside the report");
    check_interior(x[j], h, dist.upper());

    std::vector<double> fx = cdf_values(x.first(needed), dist);
    auto tracked_sum = [&](double xj) {
        fx[j] = dist.cdf(xj);
        const auto probs = alloc_probs_from_cdf(fx, opponents);
        double sum = 0.0;
        for (std::size_t p : tracked) sum += probs[p];
        return sum;
    };
    const double plus = tracked_sum(x[j] + h);
    const double minus = tracked_sum(x[j] - h);
    return std::abs(plus - minus) / (2.0 * h);
}

BestResponseResult best_response_scan(double v, const BayesSetting& s,
                                      std::size_t grid_points, const BidFunction& bids) {
    check_value(v, s);
    if (grid_points < 2) throw DomainError("best-response grid needs at least two points");
    const std::size_t k = s.k();

    std::vector<double> grid(grid_points);
    for (std::size_t g = 0; g < grid_points; ++g) {
        grid[g] = s.upper() * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    }
    grid.push_back(v);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t truthful =
        static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), v) - grid.begin());

    std::vector<double> fgrid(grid.size());
    std::vector<std::vector<double>> bid_table(k, std::vector<double>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        fgrid[g] = s.dist().cdf(grid[g]);
        for (std::size_t p = 0; p < k; ++p) bid_table[p][g] = bid_on(bids, p, grid[g], s);
    }

    std::vector<double> fx(k);
    auto utility = [&](const std::vector<std::size_t>& idx) {
        for (std::size_t p = 0; p < k; ++p) fx[p] = fgrid[idx[p]];
        const auto probs = alloc_probs_from_cdf(fx, s.n() - 1);
        double total = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            total += probs[p] * (s.curve()[p] * v - bid_table[p][idx[p]]);
        }
        return total;
    };

    BestResponseResult result;
    std::vector<std::size_t> idx(k, truthful);
    const double baseline = utility(idx);
    result.max_gain = 0.0;
    result.best_report.assign(k, v);

    const std::size_t last = grid.size() - 1;
    enumerate_monotone(idx, 0, k, last, 0, [&] {
        const double gain = utility(idx) - baseline;
        if (gain > result.max_gain) {
            result.max_gain = gain;
            for (std::size_t p = 0; p < k; ++p) result.best_report[p] = grid[idx[p]];
        }
    });

    // Inductive stages: vary x_j with the positions below truthful and every
    // monotone choice of the positions above.
    result.stage_gains.assign(k, 0.0);
    for (std::size_t j = k; j-- > 0;) {
        double stage = 0.0;
        for (std::size_t xj = 0; xj <= last; ++xj) {
            std::vector<std::size_t> deviate(k, truthful);
            std::vector<std::size_t> reference(k, truthful);
            const std::size_t floor = std::max(xj, truthful);
            enumerate_monotone(deviate, 0, j, last, floor, [&] {
                std::copy(deviate.begin(), deviate.begin() + static_cast<long>(j),
                          reference.begin());
                deviate[j] = xj;
                stage = std::max(stage, utility(deviate) - utility(reference));
            });
        }
        result.stage_gains[j] = stage;
    }
    return result;
}

}  // namespace posauction
