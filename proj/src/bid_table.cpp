#include "posauction/bid_table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "posauction/errors.hpp"
#include "posauction/format.hpp"
#include "posauction/parallel.hpp"

namespace posauction {

namespace {

constexpr std::string_view kMagic = "# posauction bid table";

std::vector<std::string> words(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::string expect_line(std::istream& in, std::string_view key) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("bid table truncated before '" + std::string(key) + "'");
    }
    if (line.rfind(std::string(key) + " ", 0) != 0) {
        throw ConfigError("bid table: expected '" + std::string(key) + "', got '" + line + "'");
    }
    return line.substr(key.size() + 1);
}

std::size_t parse_count(const std::string& text) {
    const double value = parse_double(text);
    if (value < 0 || value != std::floor(value)) throw ConfigError("bad count: " + text);
    return static_cast<std::size_t>(value);
}

}  // namespace

EquilibriumBidTable::EquilibriumBidTable(std::size_t n, std::vector<double> betas,
                                         std::string distribution, std::vector<double> grid,
                                         std::vector<std::vector<double>> rows)
    : n_(n),
      betas_(std::move(betas)),
      distribution_(std::move(distribution)),
      grid_(std::move(grid)),
      rows_(std::move(rows)) {
    if (betas_.empty()) throw DimensionError("bid table needs at least one position");
    if (grid_.size() < 2 || rows_.size() != grid_.size()) {
        throw DimensionError("bid table needs at least two rows, one per grid point");
    }
    for (std::size_t g = 0; g < grid_.size(); ++g) {
        if (rows_[g].size() != betas_.size()) throw DimensionError("bid row has wrong width");
        if (g > 0 && !(grid_[g] > grid_[g - 1])) {
            throw DomainError("bid table grid must increase strictly");
        }
    }
    if (grid_.size() >= 4) {
        for (std::size_t j = 0; j < k(); ++j) {
            std::vector<double> x = grid_;
            std::vector<double> y(grid_.size());
            for (std::size_t g = 0; g < grid_.size(); ++g) y[g] = rows_[g][j];
            splines_.emplace_back(std::move(x), std::move(y));
        }
    }
}

double EquilibriumBidTable::interpolate(std::size_t j, double v, std::size_t bracket) const {
    const double lo = rows_[bracket][j];
    const double hi = rows_[bracket + 1][j];
    double value;
    if (!splines_.empty()) {
        value = splines_[j](v);
    } else {
        const double t = (v - grid_[bracket]) / (grid_[bracket + 1] - grid_[bracket]);
        value = lo + t * (hi - lo);
    }
    return std::clamp(value, std::min(lo, hi), std::max(lo, hi));
}

std::vector<double> EquilibriumBidTable::evaluate(double v) const {
    if (!(v >= grid_.front()) || v > grid_.back()) {
        throw DomainError("value outside the tabulated range");
    }
    std::size_t bracket =
        static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), v) - grid_.begin());
    bracket = std::clamp<std::size_t>(bracket, 1, grid_.size() - 1) - 1;
    std::vector<double> out(k());
    for (std::size_t j = 0; j < k(); ++j) {
        double b = grid_[bracket] == v ? rows_[bracket][j] : interpolate(j, v, bracket);
        b = std::clamp(b, 0.0, betas_[j] * v);
        if (j > 0) b = std::min(b, out[j - 1]);
        out[j] = b;
    }
    return out;
}

double EquilibriumBidTable::evaluate(std::size_t j, double v) const {
    if (j >= k()) throw DomainError("position index out of range");
    return evaluate(v)[j];
}

EquilibriumBidTable EquilibriumBidTable::scaled(double factor) const {
    auto rows = rows_;
    for (auto& r : rows) {
        for (double& b : r) b *= factor;
    }
    return EquilibriumBidTable(n_, betas_, distribution_, grid_, std::move(rows));
}

void EquilibriumBidTable::write(std::ostream& out) const {
    out << kMagic << '\n';
    out << "n " << n_ << '\n';
    out << "k " << k() << '\n';
    out << "beta";
    for (double b : betas_) out << ' ' << format_double(b);
    out << '\n';
    out << "distribution " << distribution_ << '\n';
    out << "grid " << grid_.size() << '\n';
    out << 'v';
    for (std::size_t j = 0; j < k(); ++j) out << " b" << j + 1;
    out << '\n';
    for (std::size_t g = 0; g < grid_.size(); ++g) {
        out << format_double(grid_[g]);
        for (double b : rows_[g]) out << ' ' << format_double(b);
        out << '\n';
    }
}

EquilibriumBidTable EquilibriumBidTable::read(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw ConfigError("not a bid table (missing header line)");
    }
    const std::size_t n = parse_count(expect_line(in, "n"));
    const std::size_t k = parse_count(expect_line(in, "k"));
    std::vector<double> betas;
    for (const auto& w : words(expect_line(in, "beta"))) betas.push_back(parse_double(w));
    if (betas.size() != k) throw ConfigError("bid table: beta count differs from k");
    std::string distribution = expect_line(in, "distribution");
    const std::size_t points = parse_count(expect_line(in, "grid"));
    if (!std::getline(in, line) || words(line).size() != k + 1 || words(line)[0] != "v") {
        throw ConfigError("bid table: bad column header");
    }
    std::vector<double> grid;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        const auto fields = words(line);
        if (fields.empty()) continue;
        if (fields.size() != k + 1) throw ConfigError("bid table: row has wrong width");
        grid.push_back(parse_double(fields[0]));
        std::vector<double> row;
        for (std::size_t j = 1; j <= k; ++j) row.push_back(parse_double(fields[j]));
        rows.push_back(std::move(row));
    }
    if (grid.size() != points) throw ConfigError("bid table: row count differs from grid");
    return EquilibriumBidTable(n, std::move(betas), std::move(distribution), std::move(grid),
                               std::move(rows));
}

void EquilibriumBidTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    write(out);
}

EquilibriumBidTable EquilibriumBidTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    return read(in);
}

EquilibriumBidTable tabulate_bstar(const BayesSetting& s, std::size_t grid_points) {
    if (grid_points < 2) throw DomainError("bid table needs at least two grid points");
    const std::size_t k = s.k();
    std::vector<double> grid(grid_points);
    for (std::size_t g = 0; g < grid_points; ++g) {
        grid[g] = g + 1 == grid_points
                      ? s.upper()
                      : s.upper() * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    }
    std::vector<std::vector<double>> rows(grid_points);
    parallel_for(grid_points, [&](std::size_t g) { rows[g] = bstar(grid[g], s); });

    // Quadrature noise must not break the monotone cone.
    for (std::size_t g = 0; g < grid_points; ++g) {
        for (std::size_t j = 0; j < k; ++j) {
            double b = rows[g][j];
            if (g > 0) b = std::max(b, rows[g - 1][j]);
            b = std::min(b, s.curve()[j] * grid[g]);
            if (j > 0) b = std::min(b, rows[g][j - 1]);
            rows[g][j] = b;
        }
    }
    std::vector<double> betas(s.curve().entries().begin(), s.curve().entries().end());
    return EquilibriumBidTable(s.n(), std::move(betas), s.dist().descriptor(), std::move(grid),
                               std::move(rows));
}

}  // namespace posauction
