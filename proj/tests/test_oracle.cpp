#include <doctest.h>

#include <cmath>

#include "gmrfsteg/error.hpp"
#include "gmrfsteg/fim.hpp"
#include "gmrfsteg/oracle.hpp"

using namespace gmrfsteg;
using namespace gmrfsteg::oracle;

namespace {

double cell_mass_1d(int i, double sd)
{
    return 0.5 * (std::erf((i + 0.5) / (sd * std::sqrt(2.0))) - std::erf((i - 0.5) / (sd * std::sqrt(2.0))));
}

}  // namespace

TEST_SUITE("oracle")
{
    TEST_CASE("gauss-legendre quadrature reproduces Gaussian moments")
    {
        const fim::CliqueParams p{2.0, 3.0, 0.4, 1.0};
        CHECK(gaussian_expectation(p, [](double, double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(gaussian_expectation(p, [](double a, double) { return a * a; }) == doctest::Approx(2.0).epsilon(1e-12));
    }

    TEST_CASE("independent cover pmf factorizes")
    {
        const fim::CliqueParams p{1.0, 4.0, 0.0, 1.0};
        const auto pmf = cover_pmf(p, default_support(p));
        for (int i = -4; i <= 4; ++i)
            for (int j = -6; j <= 6; ++j)
                CHECK(std::abs(pmf.at(i, j) - cell_mass_1d(i, 1.0) * cell_mass_1d(j, 2.0)) <= 1e-10);
        CHECK(std::abs(pmf.total() - 1.0) <= kTailEpsilon);
    }

    TEST_CASE("cover pmf origin cell")
    {
        const fim::CliqueParams p{1.0, 1.0, 0.0, 1.0};
        const auto pmf = cover_pmf(p, 8);
        const double one_d = std::erf(0.5 / std::sqrt(2.0));
        CHECK(one_d == doctest::Approx(0.38292).epsilon(1e-4));
        CHECK(pmf.at(0, 0) == doctest::Approx(one_d * one_d).epsilon(1e-10));
        CHECK(pmf.at(0, 0) == doctest::Approx(0.1467).epsilon(1e-3));
    }

    TEST_CASE("cover pmf point symmetry")
    {
        for (double rho : {-0.6, 0.0, 0.9}) {
            const fim::CliqueParams p{2.0, 0.5, rho, 1.0};
            const auto pmf = cover_pmf(p, default_support(p));
            const int t = pmf.half_width;
            for (int i = -t; i <= t; ++i)
                for (int j = -t; j <= t; ++j)
                    CHECK(pmf.at(i, j) == doctest::Approx(pmf.at(-i, -j)).epsilon(1e-9));
        }
    }

    TEST_CASE("midpoint mode is close to the cell integral for wide densities")
    {
        const fim::CliqueParams p{25.0, 25.0, 0.3, 1.0};
        const auto a = cover_pmf(p, default_support(p));
        const auto b = cover_pmf(p, default_support(p), PmfMode::Midpoint);
        CHECK(b.at(0, 0) == doctest::Approx(a.at(0, 0)).epsilon(1e-3));
        CHECK(b.total() == doctest::Approx(1.0).epsilon(1e-6));
    }

    TEST_CASE("a narrow support is rejected")
    {
        CHECK_THROWS_AS(cover_pmf({25.0, 25.0, 0.0, 1.0}, 10), InvalidArgument);
    }

    TEST_CASE("stego pmf")
    {
        const fim::CliqueParams p{1.5, 2.0, 0.3, 1.0};
        const auto cover = cover_pmf(p, default_support(p));
        CHECK(stego_pmf(cover, 0, 0).probs == cover.probs);
        for (auto [b1, b2] : {std::pair{0.01, 0.2}, std::pair{1.0 / 3, 0.05}})
            CHECK(std::abs(stego_pmf(cover, b1, b2).total() - cover.total()) <= 1e-12);

        QuantizedPmf2 point;
        point.half_width = 2;
        point.probs.assign(25, 0.0);
        point.ref(0, 0) = 1.0;
        const auto q = stego_pmf(point, 1.0 / 3, 1.0 / 3);
        for (int i = -2; i <= 2; ++i)
            for (int j = -2; j <= 2; ++j)
                CHECK(q.at(i, j) == doctest::Approx(std::abs(i) <= 1 && std::abs(j) <= 1 ? 1.0 / 9 : 0.0));
        CHECK(mixed_mass_derivative(point) == 0.0);
        CHECK(std::abs(mixed_mass_derivative(cover)) <= 1e-12);
    }

    TEST_CASE("exact KL")
    {
        const fim::CliqueParams p{1.0, 1.0, 0.0, 1.0};
        const auto cover = cover_pmf(p, 8);
        CHECK(kl_exact(cover, cover) == 0.0);
        double last = 0.0;
        for (double b : {0.001, 0.01, 0.05, 0.1, 0.2, 1.0 / 3}) {
            const double kl = kl_exact(cover, stego_pmf(cover, b, 0.02));
            CHECK(kl >= 0.0);
            CHECK(kl > last);
            last = kl;
        }
    }

    TEST_CASE("exact KL at the small-variance example")
    {
        // The closed form is the fine-quantization limit; at unit variance and unit step the
        // exact divergence is lower. Frozen from this oracle.
        const fim::CliqueParams p{1.0, 1.0, 0.0, 1.0};
        const auto cover = cover_pmf(p, 8);
        const double kl = kl_exact(cover, stego_pmf(cover, 0.01, 0.01));
        CHECK(kl == doctest::Approx(2.529e-4).epsilon(2e-3));
        CHECK(kl < fim::kl_clique(0.01, 0.01, fim::fim_clique(p)));
    }

    TEST_CASE("exact KL approaches the quadratic form at large variance")
    {
        const fim::CliqueParams p{25.0, 25.0, 0.0, 1.0};
        const auto cover = cover_pmf(p, default_support(p));
        const double kl = kl_exact(cover, stego_pmf(cover, 0.01, 0.01));
        const double quad = fim::kl_clique(0.01, 0.01, fim::fim_clique(p));
        CHECK(std::abs(kl - quad) / kl <= 0.1);
    }

    TEST_CASE("discrete FIM sums")
    {
        // Unit variance, unit step: the discrete value sits below the continuous 2. Frozen from the oracle.
        const auto unit = fim_numeric({1.0, 1.0, 0.0, 1.0}, 8);
        CHECK(unit.i11 == doctest::Approx(1.8455).epsilon(1e-3));
        CHECK(std::abs(unit.i12) <= 1e-12);
        CHECK(unit.i22 == doctest::Approx(unit.i11));

        const auto corr = fim_numeric({1.0, 1.0, 0.5, 1.0}, 8);
        CHECK(corr.i12 > 0.0);
        CHECK(corr.i12 == doctest::Approx(0.615).epsilon(0.01));

        const auto a = fim_numeric({25.0, 25.0, 0.0, 1.0}, 40);
        const auto b = fim_numeric({100.0, 25.0, 0.0, 1.0}, 80);
        CHECK(a.i11 == doctest::Approx(2.0 / 625).epsilon(0.01));
        CHECK(b.i11 / a.i11 == doctest::Approx(1.0 / 16).epsilon(0.01));
    }

    TEST_CASE("discrete FIM converges to the closed form as the step shrinks")
    {
        const fim::CliqueParams p{1.0, 1.0, 0.5, 1.0};
        const auto closed = fim::fim_clique(p);
        double last = 1e9;
        for (double step : {1.0, 0.5, 0.25}) {
            fim::CliqueParams fine = p;
            fine.delta = step;
            const auto n = fim_numeric(fine, default_support(fine));
            const double scale = std::pow(step, -4);
            const double err = std::abs(n.i12 * scale - closed.i12) / closed.i12;
            CHECK(err < last);
            last = err;
        }
        CHECK(last < 0.05);
    }

    TEST_CASE("continuous FIM integrals reproduce the closed form")
    {
        for (double rho : {-0.9, -0.3, 0.0, 0.6})
            for (double s : {0.5, 4.0, 100.0}) {
                const fim::CliqueParams p{s, 1.0, rho, 1.0};
                const auto e = fim_entry_errors(fim::fim_clique(p), fim_quadrature(p), rho);
                for (double v : e)
                    CHECK(v <= 1e-6);
            }
    }

    TEST_CASE("finite-difference Hessian")
    {
        const fim::CliqueParams p{1.0, 1.0, 0.0, 1.0};
        const auto h = hessian_fd(p);
        CHECK(std::abs(h(0, 1)) <= 0.05);
        CHECK(h(0, 1) == h(1, 0));
        const auto n = fim_numeric(p, default_support(p));
        CHECK(h(0, 0) == doctest::Approx(n.i11 / std::log(2.0)).epsilon(0.02));
        CHECK(h(0, 0) == doctest::Approx(2.66).epsilon(0.01));

        const fim::CliqueParams wide{25.0, 25.0, 0.3, 1.0};
        const auto hw = hessian_fd(wide);
        const auto cw = fim::fim_clique(wide);
        CHECK(hw(0, 0) == doctest::Approx(cw.i11 / std::log(2.0)).epsilon(0.02));
        CHECK(hw(0, 1) == doctest::Approx(cw.i12 / std::log(2.0)).epsilon(0.02));
        CHECK_THROWS_AS(hessian_fd(p, 0.2), InvalidArgument);
    }

    TEST_CASE("Isserlis moments")
    {
        const auto r0 = isserlis_check({1.0, 1.0, 0.0, 1.0});
        CHECK(r0.max_rel_error <= 0.01);
        for (const auto& m : r0.moments) {
            if (m.name == "E[X1^2X2^2]")
                CHECK(m.numeric == doctest::Approx(1.0).epsilon(1e-8));
            if (m.name == "E[X1^4]")
                CHECK(m.numeric == doctest::Approx(3.0).epsilon(1e-8));
        }
        const auto r5 = isserlis_check({1.0, 1.0, 0.5, 1.0});
        for (const auto& m : r5.moments)
            if (m.name == "E[X1^2X2^2]")
                CHECK(m.numeric == doctest::Approx(1.5).epsilon(1e-8));
        CHECK(r5.moments.size() == 5);
    }
}
