#include <doctest.h>

#include <cmath>
#include <random>

#include "gmrfsteg/error.hpp"
#include "gmrfsteg/optimizer.hpp"

using namespace gmrfsteg;
using namespace gmrfsteg::optimizer;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi)
{
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Per-pixel objective whose derivative is the stationarity residual.
double objective(double beta, double gamma, double coupling, double lambda)
{
    const double nats = -2 * beta * std::log(beta) - (1 - 2 * beta) * std::log(1 - 2 * beta);
    return 0.5 * gamma * beta * beta + coupling * beta - lambda * nats;
}

estimation::ModelField flat_model(std::size_t w, std::size_t h, double variance, double rho)
{
    estimation::ModelField m;
    m.variance = FloatGrid(w, h, variance);
    m.cov_h = FloatGrid(w, h, rho * variance);
    m.cov_v = FloatGrid(w, h, rho * variance);
    m.rho_h = FloatGrid(w, h, rho);
    m.rho_v = FloatGrid(w, h, rho);
    return m;
}

double total_entropy(const FloatGrid& beta)
{
    double s = 0;
    for (double b : beta.values)
        s += entropy_ternary(b);
    return s;
}

}  // namespace

TEST_SUITE("optimizer")
{
    TEST_CASE("ternary entropy")
    {
        CHECK(entropy_ternary(0.0) == 0.0);
        CHECK(entropy_ternary(1.0 / 3) == doctest::Approx(std::log2(3.0)).epsilon(1e-14));
        const long double b = 0.1L;
        const long double ref = -2 * b * std::log2(b) - (1 - 2 * b) * std::log2(1 - 2 * b);
        CHECK(entropy_ternary(0.1) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-14));
        CHECK(entropy_ternary(0.1) == doctest::Approx(0.92193).epsilon(1e-5));
    }

    TEST_CASE("stationarity residual plug-ins")
    {
        CHECK(stationarity_residual(1.0 / 3, 2.0, 0.5, 7.0) == doctest::Approx(2.0 / 3 + 0.5));
        CHECK(stationarity_residual(0.25, 3.0, 0.2, 1.5) == doctest::Approx(0.75 + 0.2 - 3.0 * std::log(2.0)));
    }

    TEST_CASE("scalar root against bisection")
    {
        auto g = [](double b) { return stationarity_residual(b, 2, 0, 1); };
        const double oracle = bisect(g, 1e-12, 1.0 / 3);
        const double got = solve_beta_pixel(2, 1, 0);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(std::abs(got - 0.2987) <= 1e-4);
    }

    TEST_CASE("scalar solve asymptotes and clamps")
    {
        CHECK(solve_beta_pixel(2, 1e12, 0) == doctest::Approx(kBetaMax).epsilon(1e-6));
        CHECK(solve_beta_pixel(2, std::numeric_limits<double>::infinity(), 0) == kBetaMax);
        CHECK(solve_beta_pixel(2, 1e-12, 0) <= 1e-8);
        CHECK(solve_beta_pixel(2, 1, 100) == kBetaMin);
        CHECK(solve_beta_pixel(2, 1, -100) == kBetaMax);
        CHECK_THROWS_AS(solve_beta_pixel(2, -1, 0), InvalidArgument);
    }

    TEST_CASE("scalar solve is monotone")
    {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> lg(-3, 6), ll(-4, 3), lc(0, 5);
        for (int t = 0; t < 300; ++t) {
            const double gamma = std::pow(10, lg(rng));
            const double lambda = std::pow(10, ll(rng));
            const double coupling = lc(rng);
            const double b = solve_beta_pixel(gamma, lambda, coupling);
            CHECK(solve_beta_pixel(gamma, lambda * 1.5, coupling) >= b);
            CHECK(solve_beta_pixel(gamma * 1.5, lambda, coupling) <= b);
            CHECK(solve_beta_pixel(gamma, lambda, coupling + 0.5) <= b);
        }
    }

    TEST_CASE("scalar solve minimizes the per-pixel objective")
    {
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> lg(-2, 4), ll(-2, 2), lc(0, 3);
        for (int t = 0; t < 200; ++t) {
            const double gamma = std::pow(10, lg(rng));
            const double lambda = std::pow(10, ll(rng));
            const double coupling = lc(rng);
            const double b = solve_beta_pixel(gamma, lambda, coupling);
            const double f = objective(b, gamma, coupling, lambda);
            for (double d : {1e-4, 1e-3})
                for (double s : {-1.0, 1.0}) {
                    const double x = std::clamp(b + s * d * b, kBetaMin, kBetaMax);
                    CHECK(objective(x, gamma, coupling, lambda) >= f - 1e-12 * std::abs(f) - 1e-16);
                }
        }
    }

    TEST_CASE("negative gamma still yields a feasible beta")
    {
        for (double gamma : {-50.0, -500.0})
            for (double lambda : {0.5, 2.0}) {
                const double b = solve_beta_pixel(gamma, lambda, 0.3);
                CHECK(b >= kBetaMin);
                CHECK(b <= kBetaMax);
            }
    }

    TEST_CASE("lambda search hits a one-bit target")
    {
        SearchTolerance tol;
        tol.payload_abs_bits = 1e-8;
        tol.payload_rel = 1e-9;
        const auto sol = search_lambda(1, 1.0, tol, [](double lambda, std::span<double> out) {
            out[0] = solve_beta_pixel(3.7, lambda, 0.0);
        });
        CHECK(std::abs(entropy_ternary(sol.beta[0]) - 1.0) <= 1e-6);
        const double oracle = bisect([](double b) { return entropy_ternary(b) - 1.0; }, 1e-12, 1.0 / 3);
        CHECK(sol.beta[0] == doctest::Approx(oracle).epsilon(1e-5));
        CHECK(sol.beta[0] == doctest::Approx(0.1136).epsilon(1e-3));
    }

    TEST_CASE("lambda search at the extremes")
    {
        auto fill = [](double lambda, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = solve_beta_pixel(1.0 + i, lambda, 0.0);
        };
        const auto full = search_lambda(10, capacity_bits(10), {}, fill);
        CHECK(std::isinf(full.lambda));
        for (double b : full.beta)
            CHECK(b == kBetaMax);
        const auto none = search_lambda(10, 0.0, {}, fill);
        for (double b : none.beta)
            CHECK(b < 1e-3);
        CHECK_THROWS_AS(search_lambda(10, capacity_bits(10) + 1, {}, fill), InfeasiblePayload);
    }

    TEST_CASE("coefficient assembly follows the tree rule")
    {
        auto trees = lattice::build_trees(lattice::tessellate(3, 3));
        auto model = flat_model(3, 3, 1.0, 0.5);
        const auto fims = tree_fims(trees.a, model);
        FloatGrid beta(3, 3, 0.2);
        const auto all_on = assemble_coefficients(trees.a, fims, beta);
        // center pixel (index 4) is the third A tree in row-major order
        CHECK(trees.a[2].center == 4);
        const auto f = fim::fim_clique({1, 1, 0.5, 1});
        CHECK(all_on.gamma[2] == doctest::Approx(4 * f.i22 - 3 * 2.0));
        CHECK(all_on.coupling[2] == doctest::Approx(4 * f.i12 * 0.2));
        lattice::set_all_cliques(trees.a, 0);
        const auto off = assemble_coefficients(trees.a, fims, beta);
        CHECK(off.gamma[2] == doctest::Approx(2.0));
        CHECK(off.coupling[2] == 0.0);
    }

    TEST_CASE("flat independent model gives uniform beta and meets both halves")
    {
        const auto model = flat_model(16, 16, 4.0, 0.0);
        const auto part = lattice::tessellate(16, 16);
        OptimizerConfig cfg;
        cfg.payload_bits = 0.3 * 256;
        const auto res = alternate_optimize(model, part, cfg);
        const double first = res.beta[0];
        for (double b : res.beta.values)
            CHECK(b == doctest::Approx(first).epsilon(1e-6));
        double ha = 0, hb = 0;
        for (auto i : part.a_indices)
            ha += entropy_ternary(res.beta[i]);
        for (auto i : part.b_indices)
            hb += entropy_ternary(res.beta[i]);
        CHECK(std::abs(ha - cfg.payload_bits / 2) <= 0.1);
        CHECK(std::abs(hb - cfg.payload_bits / 2) <= 0.1);
        CHECK(std::abs(total_entropy(res.beta) - cfg.payload_bits) <= 0.2);
    }

    TEST_CASE("high-variance region gets larger change probabilities")
    {
        auto model = flat_model(16, 16, 1.0, 0.0);
        for (std::size_t r = 0; r < 16; ++r)
            for (std::size_t c = 8; c < 16; ++c)
                model.variance.at(r, c) = 25.0;
        OptimizerConfig cfg;
        cfg.payload_bits = 0.4 * 256;
        const auto res = alternate_optimize(model, lattice::tessellate(16, 16), cfg);
        double low = 0, high = 0;
        for (std::size_t r = 0; r < 16; ++r)
            for (std::size_t c = 0; c < 16; ++c)
                (c < 8 ? low : high) += res.beta.at(r, c);
        CHECK(high > low);

        // single-iteration independent model orders the regions the same way
        cfg.max_outer_iters = 1;
        cfg.mode = CliqueMode::AllOff;
        const auto ind = alternate_optimize(model, lattice::tessellate(16, 16), cfg);
        CHECK(ind.beta.at(3, 12) > ind.beta.at(3, 3));
    }

    TEST_CASE("correlated model meets the payload under every clique mode")
    {
        auto model = flat_model(20, 18, 9.0, 0.6);
        for (std::size_t r = 0; r < 18; ++r)
            for (std::size_t c = 0; c < 20; ++c)
                model.variance.at(r, c) = 1.0 + (r * 7 + c * 3) % 40;
        for (auto mode : {CliqueMode::Dynamic, CliqueMode::AllOn, CliqueMode::AllOff}) {
            OptimizerConfig cfg;
            cfg.payload_bits = 0.4 * 360;
            cfg.mode = mode;
            cfg.beta_t = 0.05;
            const auto res = alternate_optimize(model, lattice::tessellate(20, 18), cfg);
            CHECK(std::abs(total_entropy(res.beta) - cfg.payload_bits) <= 0.2);
            for (double b : res.beta.values) {
                CHECK(b >= kBetaMin);
                CHECK(b <= kBetaMax);
            }
            CHECK(res.trace.size() == 2 * static_cast<std::size_t>(res.outer_iterations));
        }
    }

    TEST_CASE("deterministic and thread independent")
    {
        auto model = flat_model(24, 20, 4.0, 0.3);
        for (std::size_t i = 0; i < model.variance.size(); ++i)
            model.variance[i] = 0.5 + (i * 37 % 101) / 4.0;
        OptimizerConfig cfg;
        cfg.payload_bits = 0.2 * 480;
        cfg.seed = 99;
        const auto a = alternate_optimize(model, lattice::tessellate(24, 20), cfg);
        const auto b = alternate_optimize(model, lattice::tessellate(24, 20), cfg);
        cfg.threads = 3;
        const auto c = alternate_optimize(model, lattice::tessellate(24, 20), cfg);
        CHECK(a.beta == b.beta);
        CHECK(a.beta == c.beta);
    }

    TEST_CASE("configuration errors")
    {
        const auto model = flat_model(8, 8, 1.0, 0.0);
        OptimizerConfig cfg;
        cfg.payload_bits = 0;
        CHECK_THROWS_AS(alternate_optimize(model, lattice::tessellate(8, 8), cfg), InvalidArgument);
        cfg.payload_bits = 64 * 1.6;
        CHECK_THROWS_AS(alternate_optimize(model, lattice::tessellate(8, 8), cfg), InfeasiblePayload);
        cfg.payload_bits = 1;
        CHECK_THROWS_AS(alternate_optimize(flat_model(2, 8, 1.0, 0.0), lattice::tessellate(2, 8), cfg),
                        InvalidArgument);
    }
}
