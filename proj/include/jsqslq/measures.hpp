#pragma once

#include "jsqslq/mg.hpp"

namespace jsqslq {

/// G_d(1), G'_d(1), G''_d(1) for all 12 phases, realized through the geometric
/// moment sums.
struct PgfAtOne {
    Row12 g1;
    Row12 gp1;
    Row12 gpp1;
};

inline PgfAtOne pgf_values_at_one(const MgSolution& sol) {
    PgfAtOne v{sol.sum1, sol.sumN, sol.sumN2m};
    for (int b = 0; b < kNumBoundaryPhases; ++b)
        v.g1(kBoundaryToInterior[static_cast<size_t>(b)]) += sol.p0(b);
    return v;
}

// Phase index sets by difference sign: D2 = +1 on {0,2,8}, -1 on {6,7,11};
// D3 = +1 on {0,1,4}, -1 on {7,10,11}.
inline constexpr std::array<int, 3> kD2Plus = {0, 2, 8};
inline constexpr std::array<int, 3> kD2Minus = {6, 7, 11};
inline constexpr std::array<int, 3> kD3Plus = {0, 1, 4};
inline constexpr std::array<int, 3> kD3Minus = {7, 10, 11};

/// E[D_j] = P(D_j = 1) - P(D_j = -1), j = 2 or 3.
inline double expected_diff(const Row12& g, int j) {
    const auto& plus = (j == 2) ? kD2Plus : kD3Plus;
    const auto& minus = (j == 2) ? kD2Minus : kD3Minus;
    double v = 0.0;
    for (int k : plus) v += g(k);
    for (int k : minus) v -= g(k);
    return v;
}

/// E[D_j^2] = P(|D_j| = 1): the all-positive mass of the six phases with
/// D_j = +-1. (The printed signed form would allow negative squares; see the
/// errata note.)
inline double expected_diff_sq(const Row12& g, int j) {
    const auto& plus = (j == 2) ? kD2Plus : kD3Plus;
    const auto& minus = (j == 2) ? kD2Minus : kD3Minus;
    double v = 0.0;
    for (int k : plus) v += g(k);
    for (int k : minus) v += g(k);
    return v;
}

/// Gini index of the three mean queue lengths.
inline double gini(const Vec3& means) {
    double total = means.sum();
    if (!(total > 0.0)) fail(errc::all_zero_means, "gini of all-zero means");
    double num = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) num += std::abs(means[i] - means[j]);
    return num / (2.0 * 3.0 * total);
}

/// Every steady-state performance measure for one parameterization.
struct PerformanceReport {
    Vec3 mean_l = Vec3::Zero();
    Vec3 var_l = Vec3::Zero();
    Vec3 cov = Vec3::Zero();  // (L1,L2), (L1,L3), (L2,L3)
    Vec3 cor = Vec3::Zero();
    Vec3 lambda_eff = Vec3::Zero();
    Vec3 rho_eff = Vec3::Zero();
    Vec3 mean_w = Vec3::Zero();
    Vec3 gamma = Vec3::Zero();
    double p_idle = 0.0;
    double gini = 0.0;
    Row12 g1 = Row12::Zero();
    Row12 gp1 = Row12::Zero();
    Row12 gpp1 = Row12::Zero();
};

inline PerformanceReport compute_report(const MgSolution& sol, const ModelParams& prm) {
    PerformanceReport rep;
    PgfAtOne v = pgf_values_at_one(sol);
    rep.g1 = v.g1;
    rep.gp1 = v.gp1;
    rep.gpp1 = v.gpp1;
    const Row12& g1 = v.g1;

    double el1 = v.gp1.sum();
    double ed2 = expected_diff(g1, 2), ed3 = expected_diff(g1, 3);
    rep.mean_l << el1, el1 - ed2, el1 - ed3;

    double el1_sq = v.gpp1.sum() + el1;
    double el1d2 = expected_diff(v.gp1, 2), el1d3 = expected_diff(v.gp1, 3);
    double ed2d3 = g1(0) + g1(7) + g1(11);
    double ed2_sq = expected_diff_sq(g1, 2), ed3_sq = expected_diff_sq(g1, 3);

    rep.cov[0] = el1_sq - el1d2 - el1 * rep.mean_l[1];
    rep.cov[1] = el1_sq - el1d3 - el1 * rep.mean_l[2];
    rep.cov[2] = el1_sq - el1d2 - el1d3 + ed2d3 - rep.mean_l[1] * rep.mean_l[2];
    rep.var_l[0] = el1_sq - el1 * el1;
    rep.var_l[1] = el1_sq - 2.0 * el1d2 + ed2_sq - rep.mean_l[1] * rep.mean_l[1];
    rep.var_l[2] = el1_sq - 2.0 * el1d3 + ed3_sq - rep.mean_l[2] * rep.mean_l[2];
    rep.cor[0] = rep.cov[0] / std::sqrt(rep.var_l[0] * rep.var_l[1]);
    rep.cor[1] = rep.cov[1] / std::sqrt(rep.var_l[0] * rep.var_l[2]);
    rep.cor[2] = rep.cov[2] / std::sqrt(rep.var_l[1] * rep.var_l[2]);

    const Vec3& p = prm.p;
    double all_equal = g1(3) + g1(5) + g1(9);
    rep.lambda_eff[0] = prm.lambda * (p[0] * all_equal + g1(7) + g1(11) +
                                      p[0] / (p[0] + p[1]) * g1(10) + p[0] / (p[0] + p[2]) * g1(6));
    rep.lambda_eff[1] = prm.lambda * (p[1] * all_equal + g1(2) + g1(8) +
                                      p[1] / (p[0] + p[1]) * g1(10) + p[1] / (p[1] + p[2]) * g1(0));
    rep.lambda_eff[2] = prm.lambda * (p[2] * all_equal + g1(1) + g1(4) +
                                      p[2] / (p[0] + p[2]) * g1(6) + p[2] / (p[1] + p[2]) * g1(0));
    rep.rho_eff = rep.lambda_eff.cwiseQuotient(prm.mu);
    rep.p_idle = sol.p0(0) + sol.p0(1) + sol.p0(4);
    for (int i = 0; i < 3; ++i) {
        if (!(rep.lambda_eff[i] > 0.0))
            fail(errc::zero_effective_rate, "effective arrival rate is zero; mean wait undefined");
        rep.mean_w[i] = rep.mean_l[i] / rep.lambda_eff[i];
    }
    rep.gamma << g1.segment<4>(0).sum(), g1.segment<4>(4).sum(), g1.segment<4>(8).sum();
    rep.gini = gini(rep.mean_l);
    return rep;
}

}  // namespace jsqslq
