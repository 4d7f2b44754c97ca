#include "gmrfsteg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gmrfsteg/error.hpp"
#include "gmrfsteg/parallel.hpp"

namespace gmrfsteg::optimizer {

double SearchTolerance::payload_tolerance(double target) const
{
    return std::max(payload_rel * target, payload_abs_bits);
}

double entropy_ternary(double beta)
{
    if (beta <= 0.0)
        return 0.0;
    const double rest = 1.0 - 2.0 * beta;
    const double tail = rest > 0.0 ? rest * std::log2(rest) : 0.0;
    return -2.0 * beta * std::log2(beta) - tail;
}

double stationarity_residual(double beta, double gamma, double lambda_coef, double lagrange)
{
    return gamma * beta + lambda_coef - 2.0 * lagrange * std::log((1.0 - 2.0 * beta) / beta);
}

namespace {

double residual_slope(double beta, double gamma, double lagrange)
{
    return gamma + 2.0 * lagrange / (beta * (1.0 - 2.0 * beta));
}

/// Safeguarded Newton on a bracket with g(lo) < 0 < g(hi).
double bracketed_root(double lo, double hi, double gamma, double lambda_coef, double lagrange,
                      const SearchTolerance& tol)
{
    double x = 0.5 * (lo + hi);
    double step_old = hi - lo;
    double step = step_old;
    for (int it = 0; it < 200; ++it) {
        const double g = stationarity_residual(x, gamma, lambda_coef, lagrange);
        if (std::abs(g) <= tol.beta_residual)
            return x;
        if (g < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= tol.beta_interval)
            return 0.5 * (lo + hi);

        const double slope = residual_slope(x, gamma, lagrange);
        const double newton = x - g / slope;
        if (slope > 0.0 && newton > lo && newton < hi && std::abs(2.0 * g) <= std::abs(step_old * slope)) {
            step_old = step;
            step = x - newton;
            x = newton;
        } else {
            step_old = step;
            step = 0.5 * (hi - lo);
            x = lo + step;
        }
    }
    return x;
}

}  // namespace

double solve_beta_pixel(double gamma, double lagrange, double lambda_coef, const SearchTolerance& tolerance)
{
    if (std::isnan(lagrange) || lagrange < 0.0)
        throw InvalidArgument("Lagrange multiplier must be non-negative");
    if (std::isinf(lagrange))
        return kBetaMax;
    if (lagrange == 0.0)
        return kBetaMin;

    auto g = [&](double b) { return stationarity_residual(b, gamma, lambda_coef, lagrange); };

    // min over (0, 1/3] of 2 lambda / (beta (1 - 2 beta)) is 16 lambda, reached at beta = 1/4.
    if (gamma >= -16.0 * lagrange) {
        if (g(kBetaMin) >= 0.0)
            return kBetaMin;
        if (g(kBetaMax) <= 0.0)
            return kBetaMax;
        return bracketed_root(kBetaMin, kBetaMax, gamma, lambda_coef, lagrange, tolerance);
    }

    // Non-monotone residual: take the first upward crossing on a log-spaced scan.
    constexpr int kScan = 256;
    const double log_lo = std::log(kBetaMin);
    const double log_hi = std::log(kBetaMax);
    double prev_x = kBetaMin;
    double prev_g = g(prev_x);
    for (int i = 1; i <= kScan; ++i) {
        const double x = i == kScan ? kBetaMax : std::exp(log_lo + (log_hi - log_lo) * i / kScan);
        const double gx = g(x);
        if (prev_g < 0.0 && gx >= 0.0)
            return bracketed_root(prev_x, x, gamma, lambda_coef, lagrange, tolerance);
        prev_x = x;
        prev_g = gx;
    }
    return g(kBetaMin) >= 0.0 ? kBetaMin : kBetaMax;
}

LambdaSolution search_lambda(std::size_t count, double target_bits, const SearchTolerance& tolerance,
                             const BetaFill& fill)
{
    if (std::isnan(target_bits) || target_bits < 0.0)
        throw InvalidArgument("payload target must be non-negative");
    const double capacity = capacity_bits(count);
    const double tol = tolerance.payload_tolerance(target_bits);
    if (target_bits > capacity * (1.0 + 1e-12))
        throw InfeasiblePayload("payload of " + std::to_string(target_bits) + " bits exceeds capacity " +
                                std::to_string(capacity));

    LambdaSolution sol;
    sol.beta.assign(count, kBetaMax);
    if (capacity - target_bits <= tol) {
        sol.lambda = std::numeric_limits<double>::infinity();
        sol.payload_bits = capacity;
        return sol;
    }

    std::vector<double> work(count);
    auto payload = [&](double lambda) {
        fill(lambda, work);
        double sum = 0.0;
        for (double b : work)
            sum += entropy_ternary(b);
        return sum;
    };
    auto accept = [&](double lambda, double bits) {
        sol.lambda = lambda;
        sol.payload_bits = bits;
        sol.beta = work;
        return sol;
    };

    double lo = tolerance.lambda_lo;
    double hi = tolerance.lambda_hi;

    double p_lo = payload(lo);
    if (std::abs(p_lo - target_bits) <= tol)
        return accept(lo, p_lo);
    while (p_lo > target_bits) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300)
            return accept(hi, payload(hi));
        p_lo = payload(lo);
        if (std::abs(p_lo - target_bits) <= tol)
            return accept(lo, p_lo);
    }

    double p_hi = payload(hi);
    if (std::abs(p_hi - target_bits) <= tol)
        return accept(hi, p_hi);
    while (p_hi < target_bits) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300)
            throw InfeasiblePayload("payload search could not bracket " + std::to_string(target_bits) + " bits");
        p_hi = payload(hi);
        if (std::abs(p_hi - target_bits) <= tol)
            return accept(hi, p_hi);
    }

    double mid = lo;
    double p_mid = p_lo;
    for (int it = 1; it <= tolerance.max_iters; ++it) {
        const double product = lo * hi;
        mid = std::isnormal(product) ? std::sqrt(product) : std::exp(0.5 * (std::log(lo) + std::log(hi)));
        p_mid = payload(mid);
        sol.iterations = it;
        if (std::abs(p_mid - target_bits) <= tol)
            break;
        if (p_mid < target_bits)
            lo = mid;
        else
            hi = mid;
    }
    return accept(mid, p_mid);
}

std::vector<TreeFim> tree_fims(std::span<const lattice::CliqueTree> trees, const estimation::ModelField& model,
                               double delta, const std::function<fim::Fim2(const fim::CliqueParams&)>& kernel)
{
    const auto& var = model.variance;
    std::vector<TreeFim> out(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) {
        const auto& t = trees[i];
        for (int k = 0; k < t.count; ++k) {
            const auto anchor = lattice::clique_anchor(t, k, var.width);
            const double rho = lattice::is_horizontal(t.directions[k]) ? model.rho_h[anchor] : model.rho_v[anchor];
            const auto f = kernel({var[t.neighbors[k]], var[t.center], rho, delta});
            out[i].i22[k] = f.i22;
            out[i].i12[k] = f.i12;
        }
        out[i].fi = fim::fi_single(var[t.center], delta);
    }
    return out;
}

PixelCoefficients assemble_coefficients(std::span<const lattice::CliqueTree> trees, std::span<const TreeFim> fims,
                                        const FloatGrid& beta)
{
    if (trees.size() != fims.size())
        throw InvalidArgument("tree and fim lists must align");
    PixelCoefficients c;
    c.gamma.resize(trees.size());
    c.coupling.resize(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) {
        const auto& t = trees[i];
        double gamma = 0.0;
        double coupling = 0.0;
        int active = 0;
        for (int k = 0; k < t.count; ++k) {
            if (!t.thetas[k])
                continue;
            ++active;
            gamma += fims[i].i22[k];
            coupling += fims[i].i12[k] * beta[t.neighbors[k]];
        }
        c.gamma[i] = gamma - (active - 1) * fims[i].fi;
        c.coupling[i] = coupling;
    }
    return c;
}

LambdaSolution solve_lambda_sublattice(std::span<const lattice::CliqueTree> trees, std::span<const TreeFim> fims,
                                       const FloatGrid& beta, double target_bits, const SearchTolerance& tolerance,
                                       int threads)
{
    const auto coef = assemble_coefficients(trees, fims, beta);
    return search_lambda(trees.size(), target_bits, tolerance, [&](double lambda, std::span<double> out) {
        parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                out[i] = solve_beta_pixel(coef.gamma[i], lambda, coef.coupling[i], tolerance);
        });
    });
}

double capacity_bits(std::size_t pixels) { return static_cast<double>(pixels) * std::log2(3.0); }

namespace {

double lambda_ratio(double now, double before)
{
    if (std::isinf(now) && std::isinf(before))
        return 1.0;
    return now / before;
}

}  // namespace

OptimizeResult alternate_optimize(const estimation::ModelField& model, const lattice::SublatticePartition& partition,
                                  const OptimizerConfig& config)
{
    const auto& var = model.variance;
    if (var.width < 3 || var.height < 3)
        throw InvalidArgument("image must be at least 3x3 for clique trees");
    if (var.width != partition.width || var.height != partition.height)
        throw InvalidArgument("model and partition dimensions differ");
    const std::size_t n = var.size();
    if (!(config.payload_bits > 0.0))
        throw InvalidArgument("payload must be positive");
    if (config.payload_bits > capacity_bits(n) * (1.0 + 1e-12))
        throw InfeasiblePayload("payload exceeds capacity of " + std::to_string(capacity_bits(n)) + " bits");
    if (config.max_outer_iters < 1)
        throw InvalidArgument("need at least one outer iteration");

    OptimizeResult res;
    res.trees = lattice::build_trees(partition);
    auto& trees = res.trees;
    const auto fims_a = tree_fims(trees.a, model, config.delta);
    const auto fims_b = tree_fims(trees.b, model, config.delta);

    res.beta = FloatGrid(var.width, var.height, kBetaMin);
    std::mt19937_64 rng(config.seed);
    for (auto i : partition.b_indices) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        res.beta[i] = std::max(kBetaMin, u * config.init_beta_max);
    }

    if (config.mode == CliqueMode::AllOff) {
        lattice::set_all_cliques(trees.a, 0);
        lattice::set_all_cliques(trees.b, 0);
    }

    const double target_a = config.payload_bits * static_cast<double>(partition.a_indices.size()) / n;
    const double target_b = config.payload_bits - target_a;

    auto run_half = [&](lattice::Sublattice which, double target, int k) {
        const auto& half = trees.trees(which);
        const auto& fims = which == lattice::Sublattice::A ? fims_a : fims_b;
        const auto sol = solve_lambda_sublattice(half, fims, res.beta, target, config.tolerance, config.threads);
        for (std::size_t i = 0; i < half.size(); ++i)
            res.beta[half[i].center] = sol.beta[i];
        res.trace.push_back({k, which == lattice::Sublattice::A ? 'A' : 'B', sol.lambda, sol.payload_bits - target});
        return sol.lambda;
    };

    double prev_a = 0.0;
    double prev_b = 0.0;
    for (int k = 1; k <= config.max_outer_iters; ++k) {
        if (config.mode == CliqueMode::Dynamic) {
            lattice::allocate_cliques(trees.a, res.beta, config.beta_t);
            lattice::allocate_cliques(trees.b, res.beta, config.beta_t);
        }
        res.lambda_a = run_half(lattice::Sublattice::A, target_a, k);
        res.lambda_b = run_half(lattice::Sublattice::B, target_b, k);
        res.outer_iterations = k;
        if (k >= 2 && lambda_ratio(res.lambda_a, prev_a) > config.lambda_ratio_stop &&
            lambda_ratio(res.lambda_b, prev_b) > config.lambda_ratio_stop) {
            res.converged = true;
            break;
        }
        prev_a = res.lambda_a;
        prev_b = res.lambda_b;
    }
    return res;
}

}  // namespace gmrfsteg::optimizer
