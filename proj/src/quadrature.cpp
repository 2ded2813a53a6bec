#include "posauction/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "posauction/errors.hpp"

namespace posauction {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
using Gauss = boost::math::quadrature::gauss<double, 7>;

// Hard cap on subintervals; only pathological integrands get near it.
constexpr std::size_t kMaxIntervals = 100000;

struct Piece {
    double a, b;
    double value, error;
    unsigned depth;

    bool operator<(const Piece& other) const { return error < other.error; }
};

// Kronrod-15 estimate on [a, b]. The error is |K15 - G7| passed through
// QUADPACK's qk15 scaling, which guards against the two rules agreeing by
// luck across a jump. Boost's adaptive driver (1.74) leaves its estimate
// unscaled by the interval width, so only its nodes and weights are used.
Piece rule(const std::function<double(double)>& g, double a, double b, unsigned depth) {
    const auto& x = Kronrod::abscissa();
    const auto& wk = Kronrod::weights();
    const auto& wg = Gauss::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    std::array<double, 15> f{};
    f[0] = g(mid);
    for (std::size_t i = 1; i < x.size(); ++i) {
        f[2 * i - 1] = g(mid + half * x[i]);
        f[2 * i] = g(mid - half * x[i]);
    }
    double kronrod = f[0] * wk[0];
    double gauss = f[0] * wg[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double pair = f[2 * i - 1] + f[2 * i];
        kronrod += pair * wk[i];
        if (i % 2 == 0) gauss += pair * wg[i / 2];
    }
    const double mean = 0.5 * kronrod;
    double asc = wk[0] * std::abs(f[0] - mean);
    for (std::size_t i = 1; i < x.size(); ++i) {
        asc += wk[i] * (std::abs(f[2 * i - 1] - mean) + std::abs(f[2 * i] - mean));
    }
    asc *= std::abs(half);
    double err = std::abs(half * (kronrod - gauss));
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    return {a, b, half * kronrod, err, depth};
}

}  // namespace

void QuadratureConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw DomainError("quadrature tolerances must be positive");
    }
}

double integrate(const std::function<double(double)>& g, double a, double b,
                 const QuadratureConfig& cfg) {
    return integrate(g, a, b, {}, cfg);
}

double integrate(const std::function<double(double)>& g, double a, double b,
                 std::span<const double> breaks, const QuadratureConfig& cfg) {
    cfg.validate();
    if (!(a <= b)) throw DomainError("integration bounds must satisfy a <= b");
    if (a == b) return 0.0;

    std::vector<double> cuts{a};
    for (const double c : breaks) {
        if (c > a && c < b) cuts.push_back(c);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Globally adaptive: always bisect the piece with the largest error.
    std::priority_queue<Piece> pieces;
    double total = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Piece p = rule(g, cuts[i], cuts[i + 1], 0);
        total += p.value;
        error += p.error;
        pieces.push(p);
    }
    std::vector<Piece> frozen;  // at max depth, cannot be refined further
    std::size_t count = pieces.size();

    while (error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total)) && !pieces.empty()) {
        const Piece worst = pieces.top();
        pieces.pop();
        if (worst.depth >= cfg.max_depth || count >= kMaxIntervals) {
            frozen.push_back(worst);
            continue;
        }
        const double mid = 0.5 * (worst.a + worst.b);
        const Piece left = rule(g, worst.a, mid, worst.depth + 1);
        const Piece right = rule(g, mid, worst.b, worst.depth + 1);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        pieces.push(left);
        pieces.push(right);
        ++count;
    }

    // Re-sum to shed accumulated update round-off.
    total = 0.0;
    error = 0.0;
    for (const auto& p : frozen) {
        total += p.value;
        error += p.error;
    }
    while (!pieces.empty()) {
        total += pieces.top().value;
        error += pieces.top().error;
        pieces.pop();
    }
    if (!std::isfinite(total)) throw DomainError("integrand is not finite on [a, b]");
    if (error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total))) {
        throw ConvergenceError("quadrature did not converge within depth " +
                               std::to_string(cfg.max_depth) + " (error estimate " +
                               std::to_string(error) + ")");
    }
    return total;
}

}  // namespace posauction
