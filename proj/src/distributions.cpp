#include "posauction/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "posauction/errors.hpp"
#include "posauction/format.hpp"

namespace posauction {

namespace {

void check_upper(double upper) {
    if (!std::isfinite(upper) || upper <= 0.0) {
        throw DomainError("support upper bound must be finite and positive");
    }
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

}  // namespace

UniformDistribution::UniformDistribution(double upper) : upper_(upper) {
    check_upper(upper);
}

double UniformDistribution::cdf(double v) const { return std::clamp(v / upper_, 0.0, 1.0); }

double UniformDistribution::pdf(double v) const {
    return v < 0.0 || v > upper_ ? 0.0 : 1.0 / upper_;
}

double UniformDistribution::quantile(double p) const { return clamp01(p) * upper_; }

std::string UniformDistribution::descriptor() const {
    return "uniform:" + format_double(upper_);
}

PowerDistribution::PowerDistribution(double exponent, double upper)
    : exponent_(exponent), upper_(upper) {
    check_upper(upper);
    if (!std::isfinite(exponent) || exponent <= 0.0) {
        throw DomainError("power-law exponent must be positive");
    }
}

double PowerDistribution::cdf(double v) const {
    return std::pow(std::clamp(v / upper_, 0.0, 1.0), exponent_);
}

double PowerDistribution::pdf(double v) const {
    if (v <= 0.0 || v > upper_) return 0.0;
    return exponent_ / upper_ * std::pow(v / upper_, exponent_ - 1.0);
}

double PowerDistribution::quantile(double p) const {
    return upper_ * std::pow(clamp01(p), 1.0 / exponent_);
}

std::string PowerDistribution::descriptor() const {
    return "power:" + format_double(exponent_) + ":" + format_double(upper_);
}

TruncatedExponentialDistribution::TruncatedExponentialDistribution(double rate,
                                                                   double upper)
    : rate_(rate), upper_(upper), mass_(-std::expm1(-rate * upper)) {
    check_upper(upper);
    if (!std::isfinite(rate) || rate <= 0.0) {
        throw DomainError("exponential rate must be positive");
    }
}

double TruncatedExponentialDistribution::cdf(double v) const {
    const double x = std::clamp(v, 0.0, upper_);
    return -std::expm1(-rate_ * x) / mass_;
}

double TruncatedExponentialDistribution::pdf(double v) const {
    if (v < 0.0 || v > upper_) return 0.0;
    return rate_ * std::exp(-rate_ * v) / mass_;
}

double TruncatedExponentialDistribution::quantile(double p) const {
    return std::min(upper_, -std::log1p(-clamp01(p) * mass_) / rate_);
}

std::string TruncatedExponentialDistribution::descriptor() const {
    return "truncexp:" + format_double(rate_) + ":" + format_double(upper_);
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<std::pair<double, double>> knots,
                                             std::string source)
    : knots_(std::move(knots)), source_(std::move(source)) {
    if (knots_.size() < 2) throw DomainError("empirical CDF needs at least two knots");
    if (knots_.front() != std::pair{0.0, 0.0}) {
        throw DomainError("empirical CDF must start at (0, 0)");
    }
    if (knots_.back().second != 1.0) throw DomainError("empirical CDF must end at cdf 1");
    check_upper(knots_.back().first);
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i].first > knots_[i - 1].first) ||
            !(knots_[i].second > knots_[i - 1].second)) {
            throw DomainError("empirical CDF knots must increase strictly in both columns");
        }
    }
}

double EmpiricalDistribution::cdf(double v) const {
    if (v <= 0.0) return 0.0;
    if (v >= upper()) return 1.0;
    const auto hi = std::upper_bound(knots_.begin(), knots_.end(), v,
                                     [](double x, const auto& k) { return x < k.first; });
    const auto lo = hi - 1;
    const double t = (v - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

double EmpiricalDistribution::pdf(double v) const {
    if (v < 0.0 || v > upper()) return 0.0;
    auto hi = std::upper_bound(knots_.begin(), knots_.end(), v,
                               [](double x, const auto& k) { return x < k.first; });
    if (hi == knots_.end()) --hi;
    const auto lo = hi - 1;
    return (hi->second - lo->second) / (hi->first - lo->first);
}

double EmpiricalDistribution::quantile(double p) const {
    const double q = clamp01(p);
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return upper();
    const auto hi = std::upper_bound(knots_.begin(), knots_.end(), q,
                                     [](double x, const auto& k) { return x < k.second; });
    const auto lo = hi - 1;
    const double t = (q - lo->second) / (hi->second - lo->second);
    return lo->first + t * (hi->first - lo->first);
}

std::vector<double> EmpiricalDistribution::breakpoints() const {
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < knots_.size(); ++i) out.push_back(knots_[i].first);
    return out;
}

std::string EmpiricalDistribution::descriptor() const { return "empirical:" + source_; }

EmpiricalDistribution load_empirical_cdf(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open empirical CDF file " + path.string());
    std::vector<std::pair<double, double>> knots;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string value, prob, extra;
        if (!(fields >> value)) continue;
        if (!(fields >> prob) || (fields >> extra)) {
            throw ConfigError("empirical CDF lines must have exactly two columns");
        }
        knots.emplace_back(parse_double(value), parse_double(prob));
    }
    return EmpiricalDistribution(std::move(knots), path.string());
}

DistributionPtr make_distribution(std::string_view descriptor) {
    const auto parts = split(descriptor, ':');
    const std::string& kind = parts.front();
    auto arg = [&](std::size_t i, double fallback) {
        return i < parts.size() ? parse_double(parts[i]) : fallback;
    };
    if (kind == "uniform" && parts.size() <= 2) {
        return std::make_shared<UniformDistribution>(arg(1, 1.0));
    }
    if (kind == "power" && parts.size() >= 2 && parts.size() <= 3) {
        return std::make_shared<PowerDistribution>(arg(1, 1.0), arg(2, 1.0));
    }
    if (kind == "truncexp" && parts.size() >= 2 && parts.size() <= 3) {
        return std::make_shared<TruncatedExponentialDistribution>(arg(1, 1.0), arg(2, 1.0));
    }
    if (kind == "empirical" && parts.size() >= 2) {
        const auto path = descriptor.substr(descriptor.find(':') + 1);
        return std::make_shared<EmpiricalDistribution>(
            load_empirical_cdf(std::filesystem::path(std::string(path))));
    }
    throw ConfigError("unknown distribution descriptor: " + std::string(descriptor));
}

double z_function(unsigned m, double v, const ValueDistribution& dist,
                  const QuadratureConfig& cfg) {
    if (m < 1) throw DomainError("Z_m requires m >= 1");
    if (!(v >= 0.0) || v > dist.upper()) throw DomainError("v outside the support");
    if (v == 0.0) return 0.0;
    const double fv = dist.cdf(v);
    if (!(fv > 0.0)) throw DomainError("F(v) = 0 for v > 0: not in the support");
    const double md = static_cast<double>(m);
    const auto breaks = dist.breakpoints();
    const double z = integrate([&](double u) { return std::pow(dist.cdf(u) / fv, md); }, 0.0, v,
                               breaks, cfg);
    return std::clamp(z, 0.0, v);
}

double z_derivative_identity_check(unsigned m, double v, const ValueDistribution& dist,
                                   double h, const QuadratureConfig& cfg) {
    if (!(h > 0.0)) throw DomainError("step must be positive");
    if (!(v - h > 0.0) || v + h > dist.upper()) {
        throw DomainError("v must be at least h away from the support boundary");
    }
    auto distance = [&](double x) { return x - z_function(m, x, dist, cfg); };
    const double fd = (distance(v + h) - distance(v - h)) / (2.0 * h);
    const double closed = m * dist.pdf(v) / dist.cdf(v) * z_function(m, v, dist, cfg);
    return std::abs(fd - closed);
}

}  // namespace posauction
