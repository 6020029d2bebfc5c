#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace zrp {

// Occupation numbers (eta_x) on a finite site set, indexed 0..L-1.
using Configuration = std::vector<std::int32_t>;

inline std::int64_t total_particles(const Configuration& eta) {
    return std::accumulate(eta.begin(), eta.end(), std::int64_t{0});
}

// Thrown when an operation would exceed a configured memory / size budget.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a sampler or experiment is used outside its justified regime.
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a numerical routine cannot meet its accuracy contract.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace zrp
