#pragma once

#include "jsqslq/stability.hpp"

namespace jsqslq {

struct RSolverOptions {
    double step_tol = 1e-12;      // successive max-norm difference
    double residual_tol = 1e-12;  // max-norm of A0 + R A1 + R^2 A2
    long max_iter = 1'000'000;
};

struct RSolveInfo {
    long iterations = 0;
    double residual = 0.0;
};

namespace detail {

/// Solves the rank-18 homogeneous system x E^T = 0 (E rows are the 19 equations)
/// jointly with the normalization c . x = 1, by replacing the most linearly
/// dependent equation, identified by rank-revealing QR, with the normalization.
inline Eigen::Matrix<double, 1, 19> solve_level01(Eigen::Matrix<double, 19, 19> equations,
                                                  const Eigen::Matrix<double, 1, 19>& c) {
    using Mat19 = Eigen::Matrix<double, 19, 19>;
    using Col19 = Eigen::Matrix<double, 19, 1>;
    Eigen::ColPivHouseholderQR<Mat19> qr(equations.transpose());
    int drop = qr.colsPermutation().indices()(18);
    equations.row(drop) = c;
    Col19 rhs = Col19::Zero();
    rhs(drop) = 1.0;
    Eigen::PartialPivLU<Mat19> lu(equations);
    Col19 x = lu.solve(rhs);
    if (!x.allFinite() || (equations * x - rhs).cwiseAbs().maxCoeff() > 1e-8)
        fail(errc::singular_boundary_system, "level-0/1 boundary system is singular");
    return x.transpose();
}

}  // namespace detail

/// Minimal non-negative solution of A0 + R A1 + R^2 A2 = 0 by the fixed-point
/// iteration R <- -(A0 + R^2 A2) A1^{-1} from R = 0. After successive steps fall
/// below step_tol the iteration continues until the defining-equation residual
/// meets residual_tol, which the solution invariants require.
inline Mat12 solve_r(const QbdBlocks& blocks, const RSolverOptions& opts = {},
                     RSolveInfo* info = nullptr) {
    // right division by A1: X = B A1^{-1} solved as A1^T X^T = B^T
    Eigen::PartialPivLU<Mat12> a1tlu(blocks.a1.transpose());
    if ((a1tlu.matrixLU().diagonal().cwiseAbs().minCoeff()) < 1e-14)
        fail(errc::singular_a1, "A1 is numerically singular");

    Mat12 r = Mat12::Zero();
    double residual = 0.0;
    for (long it = 1; it <= opts.max_iter; ++it) {
        Mat12 next = a1tlu.solve((-(blocks.a0 + r * r * blocks.a2)).transpose().eval())
                         .transpose();
        double diff = (next - r).cwiseAbs().maxCoeff();
        r = next;
        if (diff <= opts.step_tol) {
            residual = (blocks.a0 + r * blocks.a1 + r * r * blocks.a2).cwiseAbs().maxCoeff();
            if (residual <= opts.residual_tol) {
                if (info) *info = {it, residual};
                return r;
            }
        }
    }
    fail(errc::no_convergence, "R iteration did not converge");
}

/// Level-0 and level-1 probability vectors from the boundary equations
/// P0 B1 + P1 B2 = 0 and P0 B0 + P1 (A1 + R A2) = 0 plus normalization.
inline std::pair<Row7, Row12> solve_boundary(const QbdBlocks& blocks, const Mat12& r) {
    Eigen::Matrix<double, 19, 19> m;
    m.block<7, 7>(0, 0) = blocks.b1;
    m.block<7, 12>(0, 7) = blocks.b0;
    m.block<12, 7>(7, 0) = blocks.b2;
    m.block<12, 12>(7, 7) = blocks.a1 + r * blocks.a2;

    Mat12 sum_geo = (Mat12::Identity() - r).partialPivLu().inverse();
    Eigen::Matrix<double, 1, 19> c;
    c.head<7>().setOnes();
    c.tail<12>() = (sum_geo * Col12::Ones()).transpose();

    Eigen::Matrix<double, 1, 19> x = detail::solve_level01(m.transpose(), c);
    Row7 p0 = x.head<7>();
    Row12 p1 = x.tail<12>();

    double scale = blocks.a1.cwiseAbs().maxCoeff();
    double res0 = (p0 * blocks.b1 + p1 * blocks.b2).cwiseAbs().maxCoeff();
    double res1 = (p0 * blocks.b0 + p1 * (blocks.a1 + r * blocks.a2)).cwiseAbs().maxCoeff();
    if (res0 > 1e-10 * scale || res1 > 1e-10 * scale)
        fail(errc::singular_boundary_system, "boundary residuals too large");
    if (p0.minCoeff() < -1e-10 || p1.minCoeff() < -1e-10)
        fail(errc::negative_probability, "negative boundary probability");
    p0 = p0.cwiseMax(0.0);
    p1 = p1.cwiseMax(0.0);
    return {p0, p1};
}

/// Rate matrix, boundary vectors and the geometric moment sums
/// sum1 = P1 (I-R)^-1, sumN = P1 (I-R)^-2, sumN2m = 2 P1 R (I-R)^-3.
struct MgSolution {
    Mat12 r;
    Row7 p0;
    Row12 p1;
    Row12 sum1;
    Row12 sumN;
    Row12 sumN2m;
    long r_iterations = 0;
    double r_residual = 0.0;

    double normalization_error() const { return std::abs(p0.sum() + sum1.sum() - 1.0); }
    double spectral_radius() const {
        return r.eigenvalues().cwiseAbs().maxCoeff();
    }
};

inline MgSolution solve_mg(const ModelParams& prm, const RSolverOptions& opts = {}) {
    if (drift(prm) >= 0.0) fail(errc::unstable, "system is unstable; refusing to solve");
    QbdBlocks blocks = build_blocks(prm);
    MgSolution sol;
    RSolveInfo info;
    sol.r = solve_r(blocks, opts, &info);
    sol.r_iterations = info.iterations;
    sol.r_residual = info.residual;
    std::tie(sol.p0, sol.p1) = solve_boundary(blocks, sol.r);
    Mat12 inv = (Mat12::Identity() - sol.r).partialPivLu().inverse();
    sol.sum1 = sol.p1 * inv;
    sol.sumN = sol.sum1 * inv;
    sol.sumN2m = 2.0 * (sol.p1 * sol.r * inv * inv * inv);
    return sol;
}

/// P_n as a 12-vector; P_n = P1 R^{n-1} for n >= 1. For n = 0 the five phases
/// absent from the boundary set carry probability zero.
inline Row12 level_vector(const MgSolution& sol, long n) {
    if (n <= 0) {
        Row12 x = Row12::Zero();
        for (int b = 0; b < kNumBoundaryPhases; ++b) x(kBoundaryToInterior[static_cast<size_t>(b)]) = sol.p0(b);
        return x;
    }
    Row12 x = sol.p1;
    for (long i = 1; i < n; ++i) x = x * sol.r;
    return x;
}

inline double level_probability(const MgSolution& sol, long n, const Phase& d) {
    if (n < 0) fail(errc::invalid_config, "negative level");
    if (n == 0) return sol.p0(boundary_phase_index(d));
    return level_vector(sol, n)(phase_index(d));
}

/// Closed-form partial generating function value,
/// G_d(z) = P_{0,d} 1{d at level 0} + z [P1 (I - zR)^{-1}]_d.
inline double pgf_from_mg(const MgSolution& sol, const Phase& d, double z) {
    Row12 tail = sol.p1 * (Mat12::Identity() - z * sol.r).partialPivLu().inverse();
    double g = z * tail(phase_index(d));
    if (is_boundary_phase(d)) g += sol.p0(boundary_phase_index(d));
    return g;
}

}  // namespace jsqslq
