#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lonrec/net.hpp"

#include <cmath>

using namespace lonrec;

namespace {

Mat fourier_matrix(int m) {
    Mat f(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            f(j, k) = std::polar(1.0 / std::sqrt(double(m)), 2.0 * M_PI * j * k / m);
    return f;
}

Mat random_unit_diagonal(int m, Rng& rng) {
    Mat d = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) d(i, i) = std::polar(1.0, rng.uniform(-M_PI, M_PI));
    return d;
}

} // namespace

TEST_CASE("haar_unitary is unitary and deterministic") {
    Rng rng(123);
    const Unitary u = haar_unitary(2, rng);
    CHECK(unitarity_defect(u.mat()) < 1e-12);

    Rng a(77), b(77);
    const Unitary ua = haar_unitary(5, a);
    const Unitary ub = haar_unitary(5, b);
    CHECK(ua.mat() == ub.mat()); // bitwise

    CHECK_THROWS_AS(haar_unitary(1, rng), InvalidDimensionError);
    CHECK_THROWS_AS(haar_unitary(kMaxModes + 1, rng), InvalidDimensionError);
}

TEST_CASE("haar_unitary matches the uniform second moment") {
    // E|U_jk|^2 = 1/m under the Haar measure; Monte Carlo estimate at m=4
    Rng rng(2024);
    const int samples = 10000;
    double sum = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Unitary u = haar_unitary(4, rng);
        sum += u.mat().cwiseAbs2().mean();
    }
    CHECK(sum / samples == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("compose_reck basics") {
    SUBCASE("all angles zero gives the identity") {
        ReckParameters p;
        p.m = 3;
        for (int a : canonical_cell_rows(3)) p.cells.push_back({a, 0.0, 0.0});
        CHECK(max_abs(compose_reck(p).mat() - Mat::Identity(3, 3)) < 1e-15);
    }
    SUBCASE("balanced splitter at lambda = pi/4") {
        ReckParameters p;
        p.m = 2;
        p.cells.push_back({0, M_PI / 4, 0.0});
        const Mat u = compose_reck(p).mat();
        const double c = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(u(0, 0) - Complex(c, 0)) < 1e-15);
        CHECK(std::abs(u(0, 1) - Complex(-c, 0)) < 1e-15);
        CHECK(std::abs(u(1, 0) - Complex(c, 0)) < 1e-15);
        CHECK(std::abs(u(1, 1) - Complex(c, 0)) < 1e-15);
    }
    SUBCASE("random parameters compose to a unitary") {
        Rng rng(5);
        const ReckParameters p = random_reck_parameters(5, rng);
        CHECK(unitarity_defect(compose_reck(p).mat()) < 1e-12);
    }
}

TEST_CASE("decompose_reck") {
    SUBCASE("identity decomposes to zero angles") {
        const ReckParameters p = decompose_reck(Unitary(Mat::Identity(4, 4)));
        CHECK(p.cells.size() == 6);
        for (const auto& c : p.cells) {
            CHECK(c.lambda == 0.0);
            CHECK(c.phi == 0.0);
        }
    }
    SUBCASE("roundtrip recovers parameters coordinate-wise") {
        // 200 random sets per m with lambda away from the boundary, every
        // coordinate back within 1e-8
        for (int m = 2; m <= 8; ++m) {
            Rng rng(900 + m);
            for (int t = 0; t < 200; ++t) {
                const ReckParameters p = random_reck_parameters(m, rng, 0.05, M_PI / 2 - 0.05);
                const ReckParameters q = decompose_reck(compose_reck(p));
                REQUIRE(q.cells.size() == p.cells.size());
                for (std::size_t s = 0; s < p.cells.size(); ++s) {
                    REQUIRE(q.cells[s].a == p.cells[s].a);
                    REQUIRE(std::abs(q.cells[s].lambda - p.cells[s].lambda) < kRoundtripTol);
                    REQUIRE(std::abs(wrap_phase(q.cells[s].phi - p.cells[s].phi)) < kRoundtripTol);
                }
            }
        }
    }
    SUBCASE("compose-back is gauge equivalent to the input") {
        const Unitary f{fourier_matrix(3)};
        const Unitary back = compose_reck(decompose_reck(f));
        const Mat a = gauge_fix(f).canonical.mat();
        const Mat b = gauge_fix(back).canonical.mat();
        CHECK(max_abs(a - b) < 1e-8);
    }
    SUBCASE("gauge equivalence holds for Haar draws") {
        Rng rng(31);
        for (int m : {2, 5, 9}) {
            const Unitary h = haar_unitary(m, rng);
            const Unitary back = compose_reck(decompose_reck(h));
            CHECK(max_abs(gauge_fix(h).canonical.mat() - gauge_fix(back).canonical.mat()) < 1e-8);
        }
    }
}

TEST_CASE("closest_unitary") {
    SUBCASE("a unitary maps to itself") {
        Rng rng(8);
        const Unitary h = haar_unitary(4, rng);
        CHECK(max_abs(closest_unitary(h.mat()).mat() - h.mat()) < 1e-12);
    }
    SUBCASE("positive diagonal maps to the identity") {
        Mat d = Mat::Zero(2, 2);
        d(0, 0) = 2.0;
        d(1, 1) = 0.5;
        CHECK(max_abs(closest_unitary(d).mat() - Mat::Identity(2, 2)) < 1e-14);
    }
    SUBCASE("rank deficiency is rejected") {
        Mat d = Mat::Zero(2, 2);
        d(0, 0) = 1.0;
        d(1, 1) = 1e-13;
        CHECK_THROWS_AS(closest_unitary(d), DegeneratePolarError);
    }
    SUBCASE("polar factor is the closest unitary") {
        Rng rng(17);
        const Unitary h = haar_unitary(4, rng);
        Mat m = h.mat();
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) m(r, c) += 0.05 * rng.complex_normal();
        const Unitary w = closest_unitary(m);
        const double best = (m - w.mat()).norm();
        for (int t = 0; t < 100; ++t) {
            const Unitary v = haar_unitary(4, rng);
            CHECK(best <= (m - v.mat()).norm() + 1e-12);
        }
    }
    SUBCASE("projection error obeys the condition-number bound") {
        // ||U~ - H||_F <= (1+sqrt(2)) kappa(M) ||M - H||_F to first order
        Rng rng(55);
        for (int t = 0; t < 100; ++t) {
            const int m = 4 + 2 * (t % 3);
            const Unitary h = haar_unitary(m, rng);
            Mat noisy = h.mat();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c) noisy(r, c) += 1e-3 * rng.uniform() * rng.complex_normal();
            const double eps = (noisy - h.mat()).norm();
            const double bound = (1.0 + std::sqrt(2.0)) * condition_number(noisy) * eps;
            const double dev = (closest_unitary(noisy).mat() - h.mat()).norm();
            CHECK(dev <= bound + 10.0 * eps * eps);
        }
    }
}

TEST_CASE("gauge_fix") {
    Rng rng(99);
    const Unitary h = haar_unitary(5, rng);

    SUBCASE("already canonical input is a fixed point") {
        const Unitary canon = gauge_fix(h).canonical;
        const GaugeForm again = gauge_fix(canon);
        CHECK(max_abs(again.canonical.mat() - canon.mat()) < 1e-12);
        CHECK(again.d_out.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(again.d_in.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("first row and column become real non-negative") {
        const Mat c = gauge_fix(h).canonical.mat();
        for (int i = 0; i < 5; ++i) {
            CHECK(c(i, 0).imag() == 0.0);
            CHECK(c(i, 0).real() >= 0.0);
            CHECK(c(0, i).imag() == 0.0);
            CHECK(c(0, i).real() >= 0.0);
        }
    }
    SUBCASE("a global sign is absorbed") {
        const Unitary minus{Mat(-h.mat())};
        CHECK(max_abs(gauge_fix(minus).canonical.mat() - gauge_fix(h).canonical.mat()) < 1e-12);
    }
    SUBCASE("reassembly reproduces the original") {
        const GaugeForm g = gauge_fix(h);
        Mat re(5, 5);
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 5; ++k)
                re(j, k) = std::polar(1.0, g.d_out(j)) * g.canonical(j, k) * std::polar(1.0, g.d_in(k));
        CHECK(max_abs(re - h.mat()) < 1e-12);
    }
    SUBCASE("vanishing reference entries raise with the offending index") {
        Mat sw = Mat::Zero(2, 2);
        sw(0, 1) = sw(1, 0) = 1.0;
        try {
            gauge_fix(Unitary(sw));
            FAIL("expected GaugeDegenerateError");
        } catch (const GaugeDegenerateError& e) {
            CHECK(e.row == 0);
            CHECK(e.col == 0);
        }
        CHECK_NOTHROW(gauge_fix(Unitary(sw), GaugePolicy::lenient));
    }
}

TEST_CASE("fidelity") {
    Rng rng(404);
    const Unitary h = haar_unitary(4, rng);

    SUBCASE("self fidelity is one") { CHECK(fidelity(h, h) == doctest::Approx(1.0).epsilon(1e-12)); }
    SUBCASE("identity vs swap is one half") {
        Mat sw = Mat::Zero(2, 2);
        sw(0, 1) = sw(1, 0) = 1.0;
        CHECK(fidelity(Unitary(Mat::Identity(2, 2)), Unitary(sw)) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("global sign is invisible") {
        const Unitary minus{Mat(-h.mat())};
        CHECK(fidelity(h, minus) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("diagonal phase freedom is invisible") {
        Rng prng(7);
        for (int t = 0; t < 20; ++t) {
            const Unitary u = haar_unitary(4, prng);
            const Mat d1 = random_unit_diagonal(4, prng);
            const Mat d2 = random_unit_diagonal(4, prng);
            const Unitary gauged{Mat(d1 * u.mat() * d2)};
            CHECK(std::abs(fidelity(h, gauged) - fidelity(h, u)) < 1e-10);
        }
    }
    SUBCASE("aligned variant agrees where gauge_fix is well posed") {
        Rng prng(11);
        const Unitary u = haar_unitary(4, prng);
        const Mat d1 = random_unit_diagonal(4, prng);
        const Mat d2 = random_unit_diagonal(4, prng);
        const Unitary gauged{Mat(d1 * u.mat() * d2)};
        CHECK(aligned_fidelity(u, gauged) == doctest::Approx(1.0).epsilon(1e-10));
        Mat sw = Mat::Zero(2, 2);
        sw(0, 1) = sw(1, 0) = 1.0;
        CHECK(aligned_fidelity(Unitary(Mat::Identity(2, 2)), Unitary(sw)) ==
              doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("dimension mismatch is an error") {
        Rng prng(1);
        CHECK_THROWS_AS(fidelity(h, haar_unitary(5, prng)), InvalidDimensionError);
    }
}

TEST_CASE("condition_number") {
    Rng rng(3);
    for (int m : {2, 4, 7}) {
        const Unitary u = haar_unitary(m, rng);
        CHECK(condition_number(u.mat()) == doctest::Approx(double(m)).epsilon(1e-10));
    }
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 1.0;
    CHECK(condition_number(d) == doctest::Approx(2.5).epsilon(1e-12));

    d(1, 1) = 1e-13;
    CHECK_THROWS_AS(condition_number(d), SingularMatrixError);
}

TEST_CASE("Unitary type rejects bad input") {
    Mat not_u = Mat::Identity(3, 3);
    not_u(0, 0) = 1.1;
    CHECK_THROWS_AS(Unitary{not_u}, NotUnitaryError);
    CHECK_THROWS_AS(Unitary{Mat::Zero(2, 3)}, InvalidDimensionError);
    Mat nan_m = Mat::Identity(2, 2);
    nan_m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Unitary{nan_m}, NotUnitaryError);
}

TEST_CASE("wrap_phase conventions") {
    CHECK(wrap_phase(M_PI) == doctest::Approx(-M_PI));
    CHECK(wrap_phase(-M_PI) == doctest::Approx(-M_PI));
    CHECK(wrap_phase(3 * M_PI / 2) == doctest::Approx(-M_PI / 2));
    CHECK(wrap_phase_data(M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_phase_data(-M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_phase_data(0.25) == doctest::Approx(0.25));
}
