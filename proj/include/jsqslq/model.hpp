#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace jsqslq {

using Vec3 = Eigen::Vector3d;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat7x12 = Eigen::Matrix<double, 7, 12>;
using Mat12x7 = Eigen::Matrix<double, 12, 7>;
using Row12 = Eigen::Matrix<double, 1, 12>;
using Row7 = Eigen::Matrix<double, 1, 7>;
using Col12 = Eigen::Matrix<double, 12, 1>;

inline constexpr int kNumPhases = 12;
inline constexpr int kNumBoundaryPhases = 7;

enum class errc {
    non_positive_rate,
    bad_routing_weights,
    unknown_phase,
    empty_attended_queue,
    singular_system,
    no_bracket,
    unstable,
    no_convergence,
    singular_a1,
    singular_boundary_system,
    negative_probability,
    phase_not_at_level_zero,
    root_count_mismatch,
    degenerate_null_space,
    negative_boundary_prob,
    near_singular_az,
    zero_effective_rate,
    all_zero_means,
    invalid_config,
    state_outside_domain,
    fixture_error,
};

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

/// Arrival rate, service rates, arrival tie weights p and server tie weights q.
struct ModelParams {
    double lambda = 0.0;
    Vec3 mu = Vec3::Zero();
    Vec3 p = Vec3::Zero();
    Vec3 q = Vec3::Zero();
};

/// Checks positivity, p summing to one and the one-zero rule for p.
inline ModelParams validate_params(double lambda, const Vec3& mu, const Vec3& p, const Vec3& q) {
    if (!(lambda > 0.0)) fail(errc::non_positive_rate, "lambda must be positive");
    for (int i = 0; i < 3; ++i) {
        if (!(mu[i] > 0.0)) fail(errc::non_positive_rate, "mu[" + std::to_string(i) + "] must be positive");
        if (!(q[i] > 0.0)) fail(errc::non_positive_rate, "q[" + std::to_string(i) + "] must be positive");
    }
    int zeros = 0;
    for (int i = 0; i < 3; ++i) {
        if (p[i] < 0.0) fail(errc::bad_routing_weights, "p[" + std::to_string(i) + "] is negative");
        if (p[i] == 0.0) ++zeros;
    }
    if (zeros > 1) fail(errc::bad_routing_weights, "at most one entry of p may be zero");
    if (std::abs(p.sum() - 1.0) > 1e-12) fail(errc::bad_routing_weights, "p must sum to 1");
    return ModelParams{lambda, mu, p, q};
}

/// Server position plus the bounded differences d2 = L1-L2, d3 = L1-L3.
struct Phase {
    int server = 1;  // 1..3
    int d2 = 0;      // -1..1
    int d3 = 0;      // -1..1

    friend bool operator==(const Phase&, const Phase&) = default;
};

// The 12 reachable (server; d2, d3) triples, in their canonical listing order.
inline constexpr std::array<Phase, kNumPhases> kPhases = {{
    {1, 1, 1}, {1, 0, 1}, {1, 1, 0}, {1, 0, 0},
    {2, 0, 1}, {2, 0, 0}, {2, -1, 0}, {2, -1, -1},
    {3, 1, 0}, {3, 0, 0}, {3, 0, -1}, {3, -1, -1},
}};

// The 7 phases that exist at level 0, indexed in their own order.
inline constexpr std::array<Phase, kNumBoundaryPhases> kBoundaryPhases = {{
    {1, 0, 0}, {2, 0, 0}, {2, -1, 0}, {2, -1, -1}, {3, 0, 0}, {3, 0, -1}, {3, -1, -1},
}};

// Interior index of each boundary phase.
inline constexpr std::array<int, kNumBoundaryPhases> kBoundaryToInterior = {3, 5, 6, 7, 9, 10, 11};

inline int phase_index(const Phase& d) {
    for (int i = 0; i < kNumPhases; ++i)
        if (kPhases[i] == d) return i;
    fail(errc::unknown_phase, "triple (" + std::to_string(d.server) + ";" + std::to_string(d.d2) +
                                  "," + std::to_string(d.d3) + ") is not a reachable phase");
}

inline Phase index_phase(int i) {
    if (i < 0 || i >= kNumPhases) fail(errc::unknown_phase, "phase index out of range");
    return kPhases[static_cast<size_t>(i)];
}

inline int boundary_phase_index(const Phase& d) {
    for (int i = 0; i < kNumBoundaryPhases; ++i)
        if (kBoundaryPhases[i] == d) return i;
    fail(errc::phase_not_at_level_zero, "phase does not exist at level 0");
}

inline Phase index_boundary_phase(int i) {
    if (i < 0 || i >= kNumBoundaryPhases) fail(errc::unknown_phase, "boundary phase index out of range");
    return kBoundaryPhases[static_cast<size_t>(i)];
}

inline bool is_boundary_phase(const Phase& d) {
    for (const auto& b : kBoundaryPhases)
        if (b == d) return true;
    return false;
}

}  // namespace jsqslq
