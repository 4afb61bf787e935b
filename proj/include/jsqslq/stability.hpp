#pragma once

#include "jsqslq/generator.hpp"

namespace jsqslq {

/// Stationary vector of the 12-phase generator A: pi A = 0, pi e = 1.
/// One balance equation is replaced by the normalization.
inline Row12 phase_stationary(const QbdBlocks& blocks) {
    Mat12 a = blocks.a();
    Mat12 m = a.transpose();
    m.row(kNumPhases - 1).setOnes();
    Col12 rhs = Col12::Zero();
    rhs(kNumPhases - 1) = 1.0;
    Eigen::PartialPivLU<Mat12> lu(m);
    Col12 x = lu.solve(rhs);
    double resid = (m * x - rhs).cwiseAbs().maxCoeff();
    if (!x.allFinite() || resid > 1e-8)
        fail(errc::singular_system, "phase generator is numerically singular");
    Row12 pi = x.transpose();
    double check = (pi * a).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
    if (check > 1e-12) fail(errc::singular_system, "stationary residual too large");
    return pi;
}

/// Mean drift f(lambda) = pi A0 e - pi A2 e. Negative iff the system is stable.
/// Also evaluated in the printed scalar form; the two must agree.
inline double drift(const ModelParams& prm) {
    QbdBlocks blocks = build_blocks(prm);
    Row12 pi = phase_stationary(blocks);
    Col12 e = Col12::Ones();
    double matrix_form = (pi * blocks.a0 * e).value() - (pi * blocks.a2 * e).value();

    const Vec3& p = prm.p;
    double scalar_form =
        prm.lambda * (pi(7) + pi(11) + p[0] * (pi(3) + pi(5) + pi(9)) +
                      p[0] / (p[0] + p[1]) * pi(10) + p[0] / (p[0] + p[2]) * pi(6)) -
        prm.mu[0] * (pi(0) + pi(1) + pi(2) + pi(3));
    if (std::abs(matrix_form - scalar_form) > 1e-12 * (1.0 + std::abs(matrix_form)))
        fail(errc::singular_system, "drift forms disagree");
    return matrix_form;
}

inline bool is_stable(const ModelParams& prm) { return drift(prm) < 0.0; }

/// Locates the critical arrival rate by bisection on f(lambda) over [lo, hi].
/// Note f depends on lambda both directly and through pi.
inline double threshold_lambda(const Vec3& mu, const Vec3& p, const Vec3& q, double lo = 1e-6,
                               double hi = 0.0, double tol = 1e-6) {
    if (hi <= 0.0) hi = mu.sum();
    auto f = [&](double lambda) { return drift(validate_params(lambda, mu, p, q)); };
    double flo = f(lo), fhi = f(hi);
    if (!(flo < 0.0 && fhi > 0.0))
        fail(errc::no_bracket, "drift does not change sign over the bracket");
    for (int it = 0; it < 100 && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Number of sign changes of f(lambda) on an even grid over (lo, hi); diagnostic
/// for the bisection's single-crossing assumption.
inline int drift_sign_changes(const Vec3& mu, const Vec3& p, const Vec3& q, double lo = 1e-6,
                              double hi = 0.0, int points = 200) {
    if (hi <= 0.0) hi = mu.sum();
    int changes = 0;
    double prev = 0.0;
    for (int i = 0; i < points; ++i) {
        double lambda = lo + (hi - lo) * i / (points - 1);
        double f = drift(validate_params(lambda, mu, p, q));
        if (i > 0 && prev * f < 0.0) ++changes;
        prev = f;
    }
    return changes;
}

}  // namespace jsqslq
