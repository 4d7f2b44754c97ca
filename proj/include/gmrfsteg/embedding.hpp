#pragma once

#include <cstdint>

#include "gmrfsteg/grid.hpp"
#include "gmrfsteg/optimizer.hpp"

namespace gmrfsteg::embedding {

constexpr int kDefaultSmoothingKernel = 7;

/// Per-pixel cost d >= 0; d = 0 exactly where beta = 1/3.
using CostMap = FloatGrid;
using ChangeMap = Grid<std::int8_t>;

/// d = ln(1/beta - 2), beta floored at kBetaMin.
CostMap probs_to_costs(const optimizer::ChangeProbMap& beta);

CostMap smooth_costs(const CostMap& cost, int kernel = kDefaultSmoothingKernel);

/// beta = e^{-lambda d} / (1 + 2 e^{-lambda d}).
double gibbs_beta(double cost, double lambda);

struct CostSolution {
    optimizer::ChangeProbMap beta;
    double lambda = 0.0;
    double payload_bits = 0.0;
};

/// Payload-limited sender: lambda searched so the total entropy matches payload_bits.
CostSolution costs_to_probs(const CostMap& cost, double payload_bits, const optimizer::SearchTolerance& tolerance = {},
                            int threads = 1);

/// Uniform [0, 1) draw for pixel `index`, counter-based so independent of visiting order.
double uniform_draw(std::uint64_t seed, std::uint64_t index);

struct StegoResult {
    ImageGrid stego;
    ChangeMap changes;
    std::uint64_t seed = 0;
    std::size_t plus = 0;   // realized +1 changes
    std::size_t minus = 0;  // realized -1 changes
    double change_rate_a = 0.0;
    double change_rate_b = 0.0;
};

StegoResult simulate_embedding(const ImageGrid& cover, const optimizer::ChangeProbMap& beta, std::uint64_t seed);

}  // namespace gmrfsteg::embedding
