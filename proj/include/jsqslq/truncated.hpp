#pragma once

#include "jsqslq/mg.hpp"

#include <vector>

namespace jsqslq {

/// Stationary vector of the chain truncated at L1 <= N with reflecting
/// truncation (the up-block is dropped at the top level).
struct TruncatedSolution {
    Row7 x0;
    std::vector<Row12> levels;  // levels[n-1] holds level n

    int top_level() const { return static_cast<int>(levels.size()); }
    double top_mass() const { return levels.empty() ? 0.0 : levels.back().sum(); }
};

struct TruncationOptions {
    int levels = 400;
    bool adaptive = true;          // double N until the top level carries < top_mass_tol
    double top_mass_tol = 1e-12;
    int max_levels = 16384;
};

/// Direct solve by block elimination from the top level downwards:
/// C_N = A1 + diag(A0 e), C_j = A1 - A0 C_{j+1}^{-1} A2, and x_{j+1} = -x_j A0 C_{j+1}^{-1},
/// with the censored level-0/1 system closing the recursion.
inline TruncatedSolution truncated_stationary(const QbdBlocks& blocks,
                                              const TruncationOptions& opts = {}) {
    int n = std::max(2, opts.levels);
    for (;;) {
        std::vector<Mat12> c_inv(static_cast<size_t>(n) + 1);
        Mat12 top = blocks.a1;
        top.diagonal() += blocks.a0.rowwise().sum();
        c_inv[static_cast<size_t>(n)] = top.partialPivLu().inverse();
        for (int j = n - 1; j >= 2; --j)
            c_inv[static_cast<size_t>(j)] =
                (blocks.a1 - blocks.a0 * c_inv[static_cast<size_t>(j) + 1] * blocks.a2)
                    .partialPivLu()
                    .inverse();

        Eigen::Matrix<double, 19, 19> m;
        m.block<7, 7>(0, 0) = blocks.b1;
        m.block<7, 12>(0, 7) = blocks.b0;
        m.block<12, 7>(7, 0) = blocks.b2;
        m.block<12, 12>(7, 7) = blocks.a1 - blocks.a0 * c_inv[2] * blocks.a2;
        Eigen::Matrix<double, 1, 19> c = Eigen::Matrix<double, 1, 19>::Ones();
        Eigen::Matrix<double, 1, 19> x = detail::solve_level01(m.transpose(), c);

        TruncatedSolution sol;
        sol.x0 = x.head<7>();
        sol.levels.resize(static_cast<size_t>(n));
        sol.levels[0] = x.tail<12>();
        double total = sol.x0.sum() + sol.levels[0].sum();
        for (int j = 2; j <= n; ++j) {
            sol.levels[static_cast<size_t>(j) - 1] =
                -sol.levels[static_cast<size_t>(j) - 2] * blocks.a0 * c_inv[static_cast<size_t>(j)];
            total += sol.levels[static_cast<size_t>(j) - 1].sum();
        }
        sol.x0 /= total;
        for (auto& lv : sol.levels) lv /= total;

        if (!opts.adaptive || sol.top_mass() < opts.top_mass_tol || n >= opts.max_levels)
            return sol;
        n = std::min(2 * n, opts.max_levels);
    }
}

/// Total variation distance between the geometric solution and the truncated
/// one, including the geometric tail mass beyond the truncation level.
inline double tv_distance(const MgSolution& mg, const TruncatedSolution& trunc) {
    double sum = (mg.p0 - trunc.x0).cwiseAbs().sum();
    Row12 pn = mg.p1;
    for (const auto& lv : trunc.levels) {
        sum += (pn - lv).cwiseAbs().sum();
        pn = pn * mg.r;
    }
    Mat12 inv = (Mat12::Identity() - mg.r).partialPivLu().inverse();
    sum += (pn * inv).sum();
    return 0.5 * sum;
}

/// Raw-state moments taken directly from the truncated distribution; the
/// independent yardstick for every derived measure.
struct TruncatedMoments {
    Vec3 mean_l = Vec3::Zero();
    Vec3 mean_l2 = Vec3::Zero();
    Eigen::Matrix3d mean_ll = Eigen::Matrix3d::Zero();
    Vec3 lambda_eff = Vec3::Zero();
    Vec3 gamma = Vec3::Zero();
    double p_idle = 0.0;
    double d2_sq = 0.0;  // E[(L1-L2)^2]
    double d3_sq = 0.0;  // E[(L1-L3)^2]
    Row12 level_weighted_phase = Row12::Zero();  // sum_n n P_{n,d}

    Vec3 variance() const { return mean_l2 - mean_l.cwiseProduct(mean_l); }
};

inline TruncatedMoments truncated_moments(const TruncatedSolution& sol, const ModelParams& prm) {
    TruncatedMoments m;
    auto absorb = [&](const FullState& s, double w, int interior_index, int n) {
        for (int i = 0; i < 3; ++i) {
            m.mean_l[i] += w * s.len[i];
            m.mean_l2[i] += w * s.len[i] * s.len[i];
            for (int j = 0; j < 3; ++j) m.mean_ll(i, j) += w * s.len[i] * s.len[j];
        }
        m.gamma[s.server - 1] += w;
        if (s.len[0] + s.len[1] + s.len[2] == 0) m.p_idle += w;
        int d2 = s.len[0] - s.len[1], d3 = s.len[0] - s.len[2];
        m.d2_sq += w * d2 * d2;
        m.d3_sq += w * d3 * d3;
        if (interior_index >= 0) m.level_weighted_phase(interior_index) += w * n;
        for (const auto& [next, pr] : route_arrival(s, prm)) {
            for (int i = 0; i < 3; ++i)
                if (next.len[i] != s.len[i]) m.lambda_eff[i] += prm.lambda * pr * w;
        }
    };
    for (int b = 0; b < kNumBoundaryPhases; ++b)
        absorb(state_at(0, kBoundaryPhases[static_cast<size_t>(b)]), sol.x0(b), -1, 0);
    for (int n = 1; n <= sol.top_level(); ++n)
        for (int k = 0; k < kNumPhases; ++k)
            absorb(state_at(n, kPhases[static_cast<size_t>(k)]),
                   sol.levels[static_cast<size_t>(n) - 1](k), k, n);
    return m;
}

}  // namespace jsqslq
