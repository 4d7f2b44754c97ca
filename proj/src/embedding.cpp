#include "gmrfsteg/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "gmrfsteg/error.hpp"
#include "gmrfsteg/image_io.hpp"
#include "gmrfsteg/lattice.hpp"
#include "gmrfsteg/parallel.hpp"

namespace gmrfsteg::embedding {

CostMap probs_to_costs(const optimizer::ChangeProbMap& beta)
{
    CostMap cost(beta.width, beta.height);
    for (std::size_t i = 0; i < beta.size(); ++i) {
        const double b = beta[i];
        if (std::isnan(b) || b > optimizer::kBetaMax * (1.0 + 1e-12))
            throw InvalidArgument("change probability outside [0, 1/3]");
        cost[i] = std::max(0.0, std::log(1.0 / std::max(b, optimizer::kBetaMin) - 2.0));
    }
    return cost;
}

CostMap smooth_costs(const CostMap& cost, int kernel) { return filter::box_filter(cost, kernel); }

double gibbs_beta(double cost, double lambda)
{
    const double e = std::exp(-lambda * cost);
    return e / (1.0 + 2.0 * e);
}

CostSolution costs_to_probs(const CostMap& cost, double payload_bits, const optimizer::SearchTolerance& tolerance,
                            int threads)
{
    for (double d : cost.values)
        if (!std::isfinite(d) || d < 0.0)
            throw InvalidArgument("costs must be finite and non-negative");
    // Gibbs betas fall as lambda grows, so the search runs over the temperature 1 / lambda.
    const auto sol = optimizer::search_lambda(cost.size(), payload_bits, tolerance, [&](double temperature, std::span<double> out) {
        parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                out[i] = std::isinf(temperature)
                             ? optimizer::kBetaMax
                             : std::max(optimizer::kBetaMin, gibbs_beta(cost[i], 1.0 / temperature));
        });
    });
    const double lambda = 1.0 / sol.lambda;
    return {optimizer::ChangeProbMap(cost.width, cost.height, sol.beta), lambda, sol.payload_bits};
}

double uniform_draw(std::uint64_t seed, std::uint64_t index)
{
    // splitmix64 output at position `index` of the stream seeded with `seed`.
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

StegoResult simulate_embedding(const ImageGrid& cover, const optimizer::ChangeProbMap& beta, std::uint64_t seed)
{
    if (!cover.same_shape(beta))
        throw InvalidArgument("cover and change-probability map differ in shape");
    StegoResult res;
    res.seed = seed;
    res.stego = cover;
    res.changes = ChangeMap(cover.width, cover.height);
    std::size_t changed_a = 0;
    std::size_t changed_b = 0;
    std::size_t count_a = 0;
    for (std::size_t r = 0; r < cover.height; ++r) {
        for (std::size_t c = 0; c < cover.width; ++c) {
            const std::size_t i = r * cover.width + c;
            const double u = uniform_draw(seed, i);
            const double b = beta[i];
            int change = u < b ? 1 : (u < 2.0 * b ? -1 : 0);
            if (change == 1 && cover[i] == 255)
                change = -1;
            else if (change == -1 && cover[i] == 0)
                change = 1;

            const bool in_a = lattice::SublatticePartition::classify(r, c) == lattice::Sublattice::A;
            count_a += in_a;
            if (change != 0) {
                res.changes[i] = static_cast<std::int8_t>(change);
                res.stego[i] = static_cast<std::uint8_t>(cover[i] + change);
                (change > 0 ? res.plus : res.minus) += 1;
                (in_a ? changed_a : changed_b) += 1;
            }
        }
    }
    const std::size_t count_b = cover.size() - count_a;
    res.change_rate_a = count_a ? static_cast<double>(changed_a) / count_a : 0.0;
    res.change_rate_b = count_b ? static_cast<double>(changed_b) / count_b : 0.0;
    return res;
}

}  // namespace gmrfsteg::embedding
