#pragma once

// Bounded-support value distributions and the normalized incomplete moments
// Z_m(v) = F(v)^-m * int_0^v F(u)^m du used by the equilibrium bid formulas.

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posauction/quadrature.hpp"
#include "posauction/random.hpp"

namespace posauction {

// Continuous distribution on [0, upper()] with F(0) = 0 and F(upper()) = 1.
// Instances are immutable; share them freely across threads.
class ValueDistribution {
public:
    virtual ~ValueDistribution() = default;

    // Both clamp their argument to the support.
    virtual double cdf(double v) const = 0;
    virtual double pdf(double v) const = 0;
    virtual double quantile(double p) const = 0;
    virtual double upper() const = 0;
    // Round-trips through make_distribution().
    virtual std::string descriptor() const = 0;
    // Interior points where the density jumps; quadrature splits there.
    virtual std::vector<double> breakpoints() const { return {}; }

    double sample(RandomStream& rng) const { return quantile(rng.uniform()); }
};

using DistributionPtr = std::shared_ptr<const ValueDistribution>;

class UniformDistribution final : public ValueDistribution {
public:
    explicit UniformDistribution(double upper = 1.0);
    double cdf(double v) const override;
    double pdf(double v) const override;
    double quantile(double p) const override;
    double upper() const override { return upper_; }
    std::string descriptor() const override;

private:
    double upper_;
};

// F(v) = (v / upper)^exponent.
class PowerDistribution final : public ValueDistribution {
public:
    PowerDistribution(double exponent, double upper = 1.0);
    double cdf(double v) const override;
    double pdf(double v) const override;
    double quantile(double p) const override;
    double upper() const override { return upper_; }
    std::string descriptor() const override;

private:
    double exponent_;
    double upper_;
};

// Exponential(rate) conditioned on [0, upper].
class TruncatedExponentialDistribution final : public ValueDistribution {
public:
    TruncatedExponentialDistribution(double rate, double upper = 1.0);
    double cdf(double v) const override;
    double pdf(double v) const override;
    double quantile(double p) const override;
    double upper() const override { return upper_; }
    std::string descriptor() const override;

private:
    double rate_;
    double upper_;
    double mass_;  // 1 - exp(-rate * upper)
};

// Piecewise-linear CDF through (value, cdf) knots; density is the slope.
// Knots start at (0, 0), end at (upper, 1) and increase strictly in both
// coordinates.
class EmpiricalDistribution final : public ValueDistribution {
public:
    explicit EmpiricalDistribution(std::vector<std::pair<double, double>> knots,
                                   std::string source = "inline");
    double cdf(double v) const override;
    double pdf(double v) const override;
    double quantile(double p) const override;
    double upper() const override { return knots_.back().first; }
    std::string descriptor() const override;
    std::vector<double> breakpoints() const override;

    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

private:
    std::vector<std::pair<double, double>> knots_;
    std::string source_;
};

// Two-column text file `value cdf`, one knot per line; '#' starts a comment.
EmpiricalDistribution load_empirical_cdf(const std::filesystem::path& path);

// Descriptors: "uniform[:upper]", "power:exponent[:upper]",
// "truncexp:rate[:upper]", "empirical:path".
DistributionPtr make_distribution(std::string_view descriptor);

// Z_m(v); 0 at v = 0. Throws DomainError if F(v) = 0 for some v > 0.
double z_function(unsigned m, double v, const ValueDistribution& dist,
                  const QuadratureConfig& cfg = {});

// |D_h(v - Z_m)(v) - m f(v)/F(v) Z_m(v)| with D_h the central difference.
double z_derivative_identity_check(unsigned m, double v, const ValueDistribution& dist,
                                   double h, const QuadratureConfig& cfg = {});

}  // namespace posauction
