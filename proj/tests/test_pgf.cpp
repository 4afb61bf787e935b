#include "jsqslq/pgf.hpp"
#include "jsqslq/measures.hpp"
#include "jsqslq/truncated.hpp"
#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <complex>

using namespace jsqslq;
using Catch::Matchers::WithinAbs;

namespace {

const std::vector<ModelParams> kEvenGrid = [] {
    std::vector<ModelParams> out;
    for (double mu2 : {3.0, 4.0, 5.0})
        for (double mu1 : {4.5, 5.0, 10.0, 30.0}) out.push_back(testing::even_p(4, mu1, mu2, 5));
    return out;
}();

Vec3 mg_boundary_triple(const MgSolution& sol) { return Vec3(sol.p0(0), sol.p0(1), sol.p0(4)); }

}  // namespace

TEST_CASE("z = 1 is a root of the determinant") {
    for (const auto& prm : {testing::even_p(4, 5, 5, 5), testing::even_p(4, 10, 3, 5)}) {
        PgfSystem sys(prm);
        double scale = std::abs(sys.det_a(0.9));
        CHECK(std::abs(sys.det_a(1.0)) <= 1e-9 * scale);
    }
}

TEST_CASE("the coarse scan sees exactly two sign changes away from full symmetry") {
    for (const auto& prm : kEvenGrid) {
        if (prm.mu[0] == 5.0 && prm.mu[1] == 5.0) continue;  // tangential double root
        InteriorRoots roots = find_interior_roots(PgfSystem(prm));
        INFO("mu=" << prm.mu.transpose());
        CHECK(roots.sign_changes == 2);
        CHECK(roots.total_multiplicity() == 2);
        for (double z : roots.z) {
            CHECK(z > -1.0);
            CHECK(z < 1.0);
        }
    }
}

TEST_CASE("the fully symmetric case has one root of multiplicity two") {
    PgfSystem sys(testing::even_p(4, 5, 5, 5));
    InteriorRoots roots = find_interior_roots(sys);
    CHECK(roots.sign_changes == 0);
    REQUIRE(roots.z.size() == 1);
    CHECK(roots.multiplicity[0] == 2);
    CHECK_THAT(roots.z[0], WithinAbs(-0.066325, 1e-4));
}

TEST_CASE("refined roots drive the determinant far below neighboring values") {
    PgfSystem sys(testing::even_p(4, 5, 3, 5));
    InteriorRoots roots = find_interior_roots(sys);
    for (double z : roots.z) {
        double neighborhood = std::max(std::abs(sys.det_a(z - 0.01)), std::abs(sys.det_a(z + 0.01)));
        CHECK(std::abs(sys.det_a(z)) <= 1e-8 * neighborhood);
    }
}

TEST_CASE("roots are stable under doubling the scan density") {
    PgfSystem sys(testing::even_p(4, 4.5, 3, 5));
    InteriorRoots a = find_interior_roots(sys, 10000);
    InteriorRoots b = find_interior_roots(sys, 20000);
    REQUIRE(a.z.size() == b.z.size());
    for (size_t k = 0; k < a.z.size(); ++k) CHECK_THAT(a.z[k], WithinAbs(b.z[k], 1e-10));
}

TEST_CASE("boundary probabilities agree with the matrix-geometric values") {
    std::vector<ModelParams> grid = kEvenGrid;
    grid.push_back(testing::extreme_p(4, 5, 3, 5));
    grid.push_back(testing::extreme_p(4, 10, 4, 5));
    grid.push_back(testing::even_p(4, 4.5, 3, 5, 8.0));
    for (const auto& prm : grid) {
        MgSolution sol = solve_mg(prm);
        PgfSystem sys(prm);
        InteriorRoots roots = find_interior_roots(sys);
        BoundaryProbs u = solve_boundary_probs(sys, roots, sol.p0(0) + sol.p0(1) + sol.p0(4));
        INFO("mu=" << prm.mu.transpose() << " p1=" << prm.p[0] << " q1=" << prm.q[0]);
        CHECK((u.u - mg_boundary_triple(sol)).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("symmetric boundary probabilities are equal") {
    ModelParams prm = testing::even_p(4, 5, 5, 5);
    MgSolution sol = solve_mg(prm);
    PgfSystem sys(prm);
    BoundaryProbs u = solve_boundary_probs(sys, find_interior_roots(sys), compute_report(sol, prm).p_idle);
    CHECK_THAT(u.u[0], WithinAbs(u.u[1], 1e-12));
    CHECK_THAT(u.u[1], WithinAbs(u.u[2], 1e-12));
}

TEST_CASE("self-normalized boundary probabilities reproduce the level-0 mass") {
    for (const auto& prm : {testing::even_p(4, 5, 3, 5), testing::even_p(4, 10, 5, 5)}) {
        MgSolution sol = solve_mg(prm);
        PgfSystem sys(prm);
        BoundaryProbs u = solve_boundary_probs_normalized(sys, find_interior_roots(sys));
        CHECK((u.u - mg_boundary_triple(sol)).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("the substitution determinants vanish at the roots for any column") {
    // |A_d(z_k; u)| is the left-null condition times a cofactor; with u solved the
    // value must sit at the bottom of its own coefficient scale. The determinants
    // involved are ~1e-10 of the main determinant, so only a coarse relative check
    // is meaningful in double precision.
    ModelParams prm = testing::even_p(4, 5, 3, 5);
    MgSolution sol = solve_mg(prm);
    PgfSystem sys(prm);
    InteriorRoots roots = find_interior_roots(sys);
    BoundaryProbs u = solve_boundary_probs(sys, roots, sol.p0(0) + sol.p0(1) + sol.p0(4));
    for (double z : roots.z) {
        for (int column : {0, 5, 9, 10}) {
            double coeff_scale = 0.0;
            for (int i = 0; i < 3; ++i) {
                Vec3 e = Vec3::Zero();
                e[i] = 1.0;
                coeff_scale = std::max(coeff_scale, std::abs(sys.det_a_substituted(z, column, e)) *
                                                        std::abs(u.u[i]));
            }
            CHECK(std::abs(sys.det_a_substituted(z, column, u.u)) <= 1e-3 * coeff_scale);
        }
    }
}

TEST_CASE("generating functions from the linear solve match the closed form") {
    for (const auto& prm : {testing::even_p(4, 5, 3, 5), testing::even_p(4, 30, 4, 5),
                            testing::extreme_p(4, 5, 5, 5)}) {
        MgSolution sol = solve_mg(prm);
        PgfSystem sys(prm);
        BoundaryProbs u =
            solve_boundary_probs(sys, find_interior_roots(sys), sol.p0(0) + sol.p0(1) + sol.p0(4));
        for (double z : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
            Col12 g = evaluate_pgf_all(sys, u, z);
            for (int d = 0; d < kNumPhases; ++d)
                CHECK_THAT(g(d), WithinAbs(pgf_from_mg(sol, index_phase(d), z), 1e-8));
        }
    }
}

TEST_CASE("pgf values at zero expose exactly the boundary unknowns") {
    ModelParams prm = testing::even_p(4, 5, 3, 5);
    MgSolution sol = solve_mg(prm);
    PgfSystem sys(prm);
    BoundaryProbs u =
        solve_boundary_probs(sys, find_interior_roots(sys), sol.p0(0) + sol.p0(1) + sol.p0(4));
    Col12 g = evaluate_pgf_all(sys, u, 0.0);
    CHECK_THAT(g(3), WithinAbs(u.u[0], 1e-9));
    CHECK_THAT(g(5), WithinAbs(u.u[1], 1e-9));
    CHECK_THAT(g(9), WithinAbs(u.u[2], 1e-9));
    for (int d : {0, 1, 2, 4, 8}) CHECK_THAT(g(d), WithinAbs(0.0, 1e-9));
}

TEST_CASE("generating functions are non-negative on [0, 1)") {
    ModelParams prm = testing::even_p(4, 10, 3, 5);
    MgSolution sol = solve_mg(prm);
    PgfSystem sys(prm);
    BoundaryProbs u =
        solve_boundary_probs(sys, find_interior_roots(sys), sol.p0(0) + sol.p0(1) + sol.p0(4));
    for (double z = 0.0; z < 1.0; z += 0.05) {
        Col12 g = evaluate_pgf_all(sys, u, z);
        CHECK(g.minCoeff() >= -1e-12);
    }
}

TEST_CASE("the linear system is satisfied by the evaluated functions") {
    ModelParams prm = testing::even_p(4, 5, 4, 5);
    MgSolution sol = solve_mg(prm);
    PgfSystem sys(prm);
    BoundaryProbs u =
        solve_boundary_probs(sys, find_interior_roots(sys), sol.p0(0) + sol.p0(1) + sol.p0(4));
    for (double z : {-0.7, 0.3, 0.8}) {
        Col12 g = evaluate_pgf_all(sys, u, z);
        Mat12 a = sys.a_of_z<double>(z);
        Col12 rhs = sys.p_of_z<double>(z, u.u);
        double scale = a.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff();
        CHECK((a * g - rhs).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    }
}

TEST_CASE("series coefficients of the pgf route satisfy the balance equations") {
    // coefficients extracted by trigonometric interpolation on |z| = 1/2
    using C = std::complex<double>;
    ModelParams prm = testing::even_p(4, 5, 3, 5);
    MgSolution sol = solve_mg(prm);
    PgfSystem sys(prm);
    BoundaryProbs u =
        solve_boundary_probs(sys, find_interior_roots(sys), sol.p0(0) + sol.p0(1) + sol.p0(4));

    const int m = 64;
    const double radius = 0.5;
    std::vector<Eigen::Matrix<C, 12, 1>> ring(m);
    for (int k = 0; k < m; ++k) {
        C z = std::polar(radius, 2.0 * M_PI * k / m);
        ring[static_cast<size_t>(k)] =
            sys.a_of_z<C>(z).partialPivLu().solve(sys.p_of_z<C>(z, u.u));
    }
    auto coefficient = [&](int n) {
        Eigen::Matrix<C, 12, 1> acc = Eigen::Matrix<C, 12, 1>::Zero();
        for (int k = 0; k < m; ++k)
            acc += ring[static_cast<size_t>(k)] * std::polar(1.0, -2.0 * M_PI * k * n / m);
        Row12 out;
        for (int d = 0; d < kNumPhases; ++d)
            out(d) = acc(d).real() / m / std::pow(radius, n);
        return out;
    };

    std::vector<Row12> pn;
    for (int n = 0; n <= 8; ++n) pn.push_back(coefficient(n));

    // coefficients match the geometric representation
    for (int n = 0; n <= 6; ++n)
        CHECK((pn[static_cast<size_t>(n)] - level_vector(sol, n)).cwiseAbs().maxCoeff() <= 1e-8);

    // and satisfy the balance equations level by level
    QbdBlocks b = build_blocks(prm);
    Row7 x0;
    for (int i = 0; i < kNumBoundaryPhases; ++i) x0(i) = pn[0](kBoundaryToInterior[static_cast<size_t>(i)]);
    CHECK((x0 * b.b1 + pn[1] * b.b2).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((x0 * b.b0 + pn[1] * b.a1 + pn[2] * b.a2).cwiseAbs().maxCoeff() <= 1e-8);
    for (int n = 2; n <= 6; ++n)
        CHECK((pn[static_cast<size_t>(n) - 1] * b.a0 + pn[static_cast<size_t>(n)] * b.a1 +
               pn[static_cast<size_t>(n) + 1] * b.a2)
                  .cwiseAbs()
                  .maxCoeff() <= 1e-8);
}

TEST_CASE("evaluation rejects arguments outside the unit interval") {
    PgfSystem sys(testing::even_p(4, 5, 3, 5));
    BoundaryProbs u{Vec3(0.01, 0.01, 0.01)};
    CHECK_THROWS_AS(evaluate_pgf_all(sys, u, 1.0), Error);
    CHECK_THROWS_AS(evaluate_pgf_all(sys, u, -1.2), Error);
}
