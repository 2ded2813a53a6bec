#pragma once

// Tabulated equilibrium bids b*_j(v) on a uniform grid of [0, vbar], with
// monotone cubic interpolation in between.
//
// Text format:
//   # posauction bid table
//   n <agents>
//   k <positions>
//   beta <beta_1> ... <beta_k>
//   distribution <descriptor>
//   grid <points>
//   v b1 ... bk
//   <v> <b*_1(v)> ... <b*_k(v)>      (one row per grid point)
// Numbers use the shortest round-trip decimal form, so load + save is the
// identity on files written by save.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <math.h>  // pchip.hpp calls unqualified isnan
#include <boost/math/interpolators/pchip.hpp>

#include "posauction/bayes.hpp"

namespace posauction {

class EquilibriumBidTable {
public:
    EquilibriumBidTable(std::size_t n, std::vector<double> betas, std::string distribution,
                        std::vector<double> grid, std::vector<std::vector<double>> rows);

    std::size_t n() const noexcept { return n_; }
    std::size_t k() const noexcept { return betas_.size(); }
    std::size_t size() const noexcept { return grid_.size(); }
    const std::vector<double>& betas() const noexcept { return betas_; }
    const std::string& distribution() const noexcept { return distribution_; }
    const std::vector<double>& grid() const noexcept { return grid_; }
    // rows()[g][j] = b*_j(grid[g]).
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

    // Interpolated bid vector at v, clamped to stay monotone in v, inside
    // [0, beta_j v] and non-increasing across positions.
    std::vector<double> evaluate(double v) const;
    double evaluate(std::size_t j, double v) const;

    // Table with every bid multiplied by `factor` (negative controls).
    EquilibriumBidTable scaled(double factor) const;

    void write(std::ostream& out) const;
    static EquilibriumBidTable read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static EquilibriumBidTable load(const std::filesystem::path& path);

private:
    double interpolate(std::size_t j, double v, std::size_t bracket) const;

    std::size_t n_;
    std::vector<double> betas_;
    std::string distribution_;
    std::vector<double> grid_;
    std::vector<std::vector<double>> rows_;
    std::vector<boost::math::interpolators::pchip<std::vector<double>>> splines_;
};

// Evaluates b* (integral path) on `grid_points` uniform points of [0, vbar].
// Grid points are computed in parallel; the result does not depend on the
// thread count.
EquilibriumBidTable tabulate_bstar(const BayesSetting& s, std::size_t grid_points = 512);

}  // namespace posauction
