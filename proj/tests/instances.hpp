#pragma once

// Random auction instances for property tests (std::mt19937_64, fixed seeds).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace instances {

struct Instance {
    std::vector<double> values;
    std::vector<double> beta;
};

// n in [2, max_n], k in [1, min(n - 1, max_k)], distinct values in (0, 10),
// beta strictly positive and non-increasing with beta_0 in (0, 5].
inline Instance random_instance(std::mt19937_64& rng, std::size_t max_n = 8,
                                std::size_t max_k = 5) {
    std::uniform_int_distribution<std::size_t> pick_n(2, max_n);
    const std::size_t n = pick_n(rng);
    std::uniform_int_distribution<std::size_t> pick_k(1, std::min(n - 1, max_k));
    const std::size_t k = pick_k(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Instance inst;
    while (inst.values.size() < n) {
        const double v = 10.0 * unit(rng);
        if (v > 0.0 && std::find(inst.values.begin(), inst.values.end(), v) == inst.values.end()) {
            inst.values.push_back(v);
        }
    }
    double b = 0.1 + 4.9 * unit(rng);
    for (std::size_t j = 0; j < k; ++j) {
        inst.beta.push_back(b);
        b *= 0.2 + 0.8 * unit(rng);
    }
    return inst;
}

inline std::vector<std::vector<double>> proportional_bids(const std::vector<double>& scalars,
                                                          const std::vector<double>& beta) {
    std::vector<std::vector<double>> rows;
    for (double c : scalars) {
        std::vector<double> row;
        for (double b : beta) row.push_back(b * c);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace instances
