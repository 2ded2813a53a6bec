#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace posauction {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    unsigned max_depth = 40;

    void validate() const;
};

// Adaptive Gauss-Kronrod (7/15) integral of g over [a, b]. Throws
// ConvergenceError when the error estimate still exceeds
// max(abs_tol, rel_tol * |result|) at the depth limit.
double integrate(const std::function<double(double)>& g, double a, double b,
                 const QuadratureConfig& cfg = {});

// Same, with known discontinuities of g (or its derivative). Points outside
// (a, b) are ignored; the initial subdivision starts at the rest.
double integrate(const std::function<double(double)>& g, double a, double b,
                 std::span<const double> breaks, const QuadratureConfig& cfg = {});

}  // namespace posauction
