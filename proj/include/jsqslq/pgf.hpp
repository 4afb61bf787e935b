#pragma once

#include "jsqslq/model.hpp"

#include <algorithm>
#include <complex>
#include <vector>

namespace jsqslq {

/// The z-transformed balance system A(z) G(z) = P(z), where P is linear and
/// homogeneous in the three level-0 unknowns u = (P_{0,(1;0,0)}, P_{0,(2;0,0)},
/// P_{0,(3;0,0)}). Scalar-templated so tests can evaluate on a complex circle.
class PgfSystem {
public:
    explicit PgfSystem(const ModelParams& prm) : prm_(prm) {}

    const ModelParams& params() const { return prm_; }

    template <typename S>
    Eigen::Matrix<S, 12, 12> a_of_z(S z) const {
        const double lam = prm_.lambda;
        const double m1 = prm_.mu[0], m2 = prm_.mu[1], m3 = prm_.mu[2];
        const double p1 = prm_.p[0], p2 = prm_.p[1], p3 = prm_.p[2];
        const double q1 = prm_.q[0], q2 = prm_.q[1], q3 = prm_.q[2];
        Eigen::Matrix<S, 12, 12> a = Eigen::Matrix<S, 12, 12>::Zero();
        a(0, 0) = lam + m1;
        a(0, 3) = -lam * p1 * z;
        a(0, 4) = -m2;
        a(0, 5) = -lam * p1 * z;
        a(0, 8) = -m3;
        a(0, 9) = -lam * p1 * z;
        a(1, 0) = -lam * p2 / (p2 + p3);
        a(1, 1) = lam + m1;
        a(1, 9) = -m3 * q1 / (q1 + q2);
        a(2, 0) = -lam * p3 / (p2 + p3);
        a(2, 2) = lam + m1;
        a(2, 5) = -m2 * q1 / (q1 + q3);
        a(3, 0) = -m1;
        a(3, 1) = -lam * z;
        a(3, 2) = -lam * z;
        a(3, 3) = (lam + m1) * z;
        a(4, 4) = lam + m2;
        a(4, 6) = -lam * p1 / (p1 + p3) * z;
        a(4, 9) = -m3 * q2 / (q1 + q2);
        a(5, 4) = -lam;
        a(5, 5) = lam + m2;
        a(5, 6) = -m2;
        a(5, 7) = -lam * z;
        a(6, 1) = -m1;
        a(6, 3) = -lam * p2 * z;
        a(6, 5) = -lam * p2 * z;
        a(6, 6) = (lam + m2) * z;
        a(6, 9) = -lam * p2 * z;
        a(6, 11) = -m3 * z;
        a(7, 3) = -m1 * q2 / (q2 + q3);
        a(7, 6) = -lam * p3 / (p1 + p3) * z;
        a(7, 7) = (lam + m2) * z;
        a(8, 5) = -m2 * q3 / (q1 + q3);
        a(8, 8) = lam + m3;
        a(8, 10) = -lam * p1 / (p1 + p2) * z;
        a(9, 8) = -lam;
        a(9, 9) = lam + m3;
        a(9, 10) = -m3;
        a(9, 11) = -lam * z;
        a(10, 2) = -m1;
        a(10, 3) = -lam * p3 * z;
        a(10, 5) = -lam * p3 * z;
        a(10, 7) = -m2 * z;
        a(10, 9) = -lam * p3 * z;
        a(10, 10) = (lam + m3) * z;
        a(11, 3) = -m1 * q3 / (q2 + q3);
        a(11, 10) = -lam * p2 / (p1 + p2) * z;
        a(11, 11) = (lam + m3) * z;
        return a;
    }

    template <typename S>
    Eigen::Matrix<S, 12, 1> p_of_z(S z, const Vec3& u) const {
        const double m1 = prm_.mu[0], m2 = prm_.mu[1], m3 = prm_.mu[2];
        const double q1 = prm_.q[0], q2 = prm_.q[1], q3 = prm_.q[2];
        Eigen::Matrix<S, 12, 1> p = Eigen::Matrix<S, 12, 1>::Zero();
        p(1) = -m3 * q1 / (q1 + q2) * u[2];
        p(2) = -m2 * q1 / (q1 + q3) * u[1];
        p(3) = m1 * u[0] * z;
        p(4) = -m3 * q2 / (q1 + q2) * u[2];
        p(5) = m2 * u[1];
        p(7) = -m1 * q2 / (q2 + q3) * u[0];
        p(8) = -m2 * q3 / (q1 + q3) * u[1];
        p(9) = m3 * u[2];
        p(11) = -m1 * q3 / (q2 + q3) * u[0];
        return p;
    }

    double det_a(double z) const { return a_of_z<double>(z).partialPivLu().determinant(); }

    /// Determinant of A(z) with `column` replaced by P(z; u).
    double det_a_substituted(double z, int column, const Vec3& u) const {
        Mat12 a = a_of_z<double>(z);
        a.col(column) = p_of_z<double>(z, u);
        return a.partialPivLu().determinant();
    }

private:
    ModelParams prm_;
};

/// The two roots of |A(z)| inside (-1,1) that pin the boundary probabilities.
/// At a fully symmetric parameterization they coalesce into one tangential
/// root of multiplicity two, which a pure sign-change scan cannot see.
struct InteriorRoots {
    std::vector<double> z;              // distinct root locations
    std::vector<int> multiplicity;      // per location; multiplicities sum to 2
    int sign_changes = 0;               // as seen by the coarse scan

    int total_multiplicity() const {
        int t = 0;
        for (int m : multiplicity) t += m;
        return t;
    }
};

namespace detail {

inline double refine_bisection(const PgfSystem& sys, double lo, double hi) {
    double flo = sys.det_a(lo);
    while (hi - lo > 1e-13) {
        double mid = 0.5 * (lo + hi);
        double fm = sys.det_a(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double refine_abs_minimum(const PgfSystem& sys, double lo, double hi) {
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (std::abs(sys.det_a(m1)) < std::abs(sys.det_a(m2)))
            hi = m2;
        else
            lo = m1;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Sign-change scan over (-1+1e-9, 1-1e-6) with bisection refinement. z = 0 is a
/// structural root of even multiplicity (two columns of A carry a factor z) and
/// never produces a sign change. When fewer than two crossings appear the deep
/// dips of |det| are rescanned densely and classified: either two crossings the
/// coarse grid straddled, or a genuine tangential double root.
inline InteriorRoots find_interior_roots(const PgfSystem& sys, int grid_points = 10000) {
    const double lo = -1.0 + 1e-9, hi = 1.0 - 1e-6;
    std::vector<double> z(static_cast<size_t>(grid_points));
    std::vector<double> det(static_cast<size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        z[static_cast<size_t>(i)] = lo + (hi - lo) * i / (grid_points - 1);
        det[static_cast<size_t>(i)] = sys.det_a(z[static_cast<size_t>(i)]);
    }
    std::vector<double> mags(det.size());
    std::transform(det.begin(), det.end(), mags.begin(), [](double v) { return std::abs(v); });
    std::nth_element(mags.begin(), mags.begin() + static_cast<long>(mags.size() / 2), mags.end());
    double scale = std::max(mags[mags.size() / 2], 1e-300);

    InteriorRoots roots;
    for (int i = 0; i + 1 < grid_points; ++i) {
        if (det[static_cast<size_t>(i)] * det[static_cast<size_t>(i) + 1] < 0.0) {
            ++roots.sign_changes;
            roots.z.push_back(detail::refine_bisection(sys, z[static_cast<size_t>(i)], z[static_cast<size_t>(i) + 1]));
            roots.multiplicity.push_back(1);
        }
    }
    if (roots.total_multiplicity() < 2) {
        for (int i = 1; i + 1 < grid_points; ++i) {
            double a = std::abs(det[static_cast<size_t>(i)]);
            if (a >= std::abs(det[static_cast<size_t>(i) - 1]) || a >= std::abs(det[static_cast<size_t>(i) + 1]))
                continue;
            if (a > 1e-3 * scale || std::abs(z[static_cast<size_t>(i)]) < 1e-3) continue;
            double wlo = z[static_cast<size_t>(i) - 1], whi = z[static_cast<size_t>(i) + 1];
            bool already = false;
            for (double r : roots.z) already |= (r >= wlo && r <= whi);
            if (already) continue;
            // dense re-scan of the dip window for crossings the grid straddled
            const int sub = 2000;
            double prev = sys.det_a(wlo);
            bool found = false;
            for (int j = 1; j <= sub; ++j) {
                double zz = wlo + (whi - wlo) * j / sub;
                double v = sys.det_a(zz);
                if (prev * v < 0.0) {
                    roots.z.push_back(detail::refine_bisection(sys, zz - (whi - wlo) / sub, zz));
                    roots.multiplicity.push_back(1);
                    found = true;
                }
                prev = v;
            }
            if (!found) {
                double zstar = detail::refine_abs_minimum(sys, wlo, whi);
                if (std::abs(sys.det_a(zstar)) <= 1e-9 * scale) {
                    roots.z.push_back(zstar);
                    roots.multiplicity.push_back(2);
                }
            }
        }
    }
    if (roots.total_multiplicity() != 2) {
        fail(errc::root_count_mismatch,
             "expected total root multiplicity 2 in (-1,1), found " +
                 std::to_string(roots.total_multiplicity()) + " (" +
                 std::to_string(roots.sign_changes) + " grid sign changes)");
    }
    return roots;
}

struct BoundaryProbs {
    Vec3 u = Vec3::Zero();

    double idle_probability() const { return u.sum(); }
};

namespace detail {

/// Root conditions as a 2x3 homogeneous system in u. At a root z_k the adjugate
/// of A(z_k) factors through the left null vector w, so the substitution
/// determinant |A_d(z_k; u)| vanishes exactly when w . P(z_k; u) = 0; the latter
/// is imposed directly (a double root has a two-dimensional left null space and
/// contributes both conditions).
inline Eigen::Matrix<double, 2, 3> root_condition_rows(const PgfSystem& sys,
                                                       const InteriorRoots& roots) {
    Eigen::Matrix<double, 2, 3> rows;
    int next = 0;
    for (size_t k = 0; k < roots.z.size(); ++k) {
        Mat12 a = sys.a_of_z<double>(roots.z[k]);
        Eigen::JacobiSVD<Mat12> svd(a, Eigen::ComputeFullU);
        for (int m = 0; m < roots.multiplicity[k]; ++m) {
            Col12 w = svd.matrixU().col(kNumPhases - 1 - m);
            for (int i = 0; i < 3; ++i) {
                Vec3 e = Vec3::Zero();
                e[i] = 1.0;
                rows(next, i) = w.dot(sys.p_of_z<double>(roots.z[k], e));
            }
            ++next;
        }
    }
    return rows;
}

inline Vec3 null_direction(const Eigen::Matrix<double, 2, 3>& rows) {
    Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(rows, Eigen::ComputeFullV);
    if (svd.singularValues()(1) <= 1e-8 * svd.singularValues()(0))
        fail(errc::degenerate_null_space, "root conditions do not have rank 2");
    Vec3 u = svd.matrixV().col(2);
    if (u.sum() < 0.0) u = -u;
    if (u.minCoeff() < -1e-9 * u.maxCoeff())
        fail(errc::negative_boundary_prob, "null direction is not sign-definite");
    return u.cwiseMax(0.0);
}

}  // namespace detail

/// Boundary probabilities scaled so they sum to the given idle mass (the
/// caller normally supplies the level-0 total from the matrix-geometric side).
inline BoundaryProbs solve_boundary_probs(const PgfSystem& sys, const InteriorRoots& roots,
                                          double idle_mass) {
    Vec3 u = detail::null_direction(detail::root_condition_rows(sys, roots));
    return BoundaryProbs{u / u.sum() * idle_mass};
}

/// Verification mode: the scale comes from the normalization of the generating
/// functions themselves, sum_d lim_{z->1} |A_d(z)|/|A(z)| = 1, with both
/// derivatives at z = 1 taken by Richardson-extrapolated central differences.
inline BoundaryProbs solve_boundary_probs_normalized(const PgfSystem& sys,
                                                     const InteriorRoots& roots) {
    Vec3 dir = detail::null_direction(detail::root_condition_rows(sys, roots));
    auto ddz = [](auto&& f) {
        const double h = 1e-5;
        auto central = [&](double hh) { return (f(1.0 + hh) - f(1.0 - hh)) / (2.0 * hh); };
        return (4.0 * central(h / 2.0) - central(h)) / 3.0;
    };
    double da = ddz([&](double zz) { return sys.det_a(zz); });
    double total = 0.0;
    for (int d = 0; d < kNumPhases; ++d)
        total += ddz([&](double zz) { return sys.det_a_substituted(zz, d, dir); }) / da;
    return BoundaryProbs{dir / total};
}

/// G(z) for all phases by solving A(z) G = P(z; u). At z = 0 two columns of A
/// vanish, so the value is taken as the symmetric limit from z = +-1e-5.
inline Col12 evaluate_pgf_all(const PgfSystem& sys, const BoundaryProbs& probs, double z) {
    if (std::abs(z) >= 1.0) fail(errc::invalid_config, "pgf evaluation requires |z| < 1");
    if (std::abs(z) < 1e-9) {
        const double d = 1e-5;
        return 0.5 * (evaluate_pgf_all(sys, probs, d) + evaluate_pgf_all(sys, probs, -d));
    }
    Mat12 a = sys.a_of_z<double>(z);
    Eigen::PartialPivLU<Mat12> lu(a);
    Eigen::Matrix<double, 12, 1> diag = lu.matrixLU().diagonal().cwiseAbs();
    if (diag.minCoeff() < 1e-12 * diag.maxCoeff())
        fail(errc::near_singular_az, "A(z) is near singular at z = " + std::to_string(z));
    return lu.solve(sys.p_of_z<double>(z, probs.u));
}

inline double evaluate_pgf(const PgfSystem& sys, const BoundaryProbs& probs, const Phase& d,
                           double z) {
    return evaluate_pgf_all(sys, probs, z)(phase_index(d));
}

}  // namespace jsqslq
