#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gmrfsteg/estimation.hpp"
#include "gmrfsteg/fim.hpp"
#include "gmrfsteg/grid.hpp"
#include "gmrfsteg/lattice.hpp"

namespace gmrfsteg::optimizer {

constexpr double kBetaMin = 1e-9;
constexpr double kBetaMax = 1.0 / 3.0;

/// One beta per pixel, each in [kBetaMin, 1/3].
using ChangeProbMap = FloatGrid;

struct SearchTolerance {
    double payload_rel = 1e-6;
    double payload_abs_bits = 0.1;
    int max_iters = 80;
    double lambda_lo = 1e-6;
    double lambda_hi = 1e6;
    double beta_residual = 1e-10;
    double beta_interval = 1e-12;

    double payload_tolerance(double target) const;
};

enum class CliqueMode {
    Dynamic,  // threshold rule re-applied every outer iteration
    AllOff,   // independent-pixel model
    AllOn,
};

struct OptimizerConfig {
    double payload_bits = 0.0;
    double beta_t = lattice::kDefaultBetaThreshold;
    int max_outer_iters = 4;
    double lambda_ratio_stop = 0.98;
    double init_beta_max = 0.001;
    std::uint64_t seed = 0;
    SearchTolerance tolerance;
    CliqueMode mode = CliqueMode::Dynamic;
    double delta = 1.0;
    int threads = 1;
};

/// h(beta) in bits, 0 log 0 := 0.
double entropy_ternary(double beta);

/// Gamma beta + Lambda - 2 lambda ln((1 - 2 beta) / beta).
double stationarity_residual(double beta, double gamma, double lambda_coef, double lagrange);

/// Root of the stationarity residual in [kBetaMin, 1/3], clamped at the ends.
double solve_beta_pixel(double gamma, double lagrange, double lambda_coef,
                        const SearchTolerance& tolerance = {});

struct LambdaSolution {
    double lambda = 0.0;  // +inf when the target equals capacity
    std::vector<double> beta;
    double payload_bits = 0.0;
    int iterations = 0;
};

/// Finds lambda so that the entropy of fill(lambda, beta) hits target_bits.
/// fill must write betas that are nondecreasing in lambda.
using BetaFill = std::function<void(double lambda, std::span<double> beta)>;
LambdaSolution search_lambda(std::size_t count, double target_bits, const SearchTolerance& tolerance,
                             const BetaFill& fill);

/// Per-pixel Gamma and Lambda of the stationarity condition.
struct PixelCoefficients {
    std::vector<double> gamma;
    std::vector<double> coupling;
};

/// Fisher coefficients of one tree: i22, i12 of each clique (center in slot 2) and I1 of the center.
struct TreeFim {
    std::array<double, 4> i22{};
    std::array<double, 4> i12{};
    double fi = 0.0;
};

std::vector<TreeFim> tree_fims(std::span<const lattice::CliqueTree> trees, const estimation::ModelField& model,
                               double delta = 1.0,
                               const std::function<fim::Fim2(const fim::CliqueParams&)>& kernel = fim::fim_clique);

PixelCoefficients assemble_coefficients(std::span<const lattice::CliqueTree> trees, std::span<const TreeFim> fims,
                                        const FloatGrid& beta);

/// Solves every center of `trees` for one sublattice, the other half of `beta` held fixed.
LambdaSolution solve_lambda_sublattice(std::span<const lattice::CliqueTree> trees, std::span<const TreeFim> fims,
                                       const FloatGrid& beta, double target_bits, const SearchTolerance& tolerance,
                                       int threads = 1);

struct TraceRow {
    int iter = 0;
    char lattice = 'A';
    double lambda = 0.0;
    double payload_error = 0.0;
};

struct OptimizeResult {
    ChangeProbMap beta;
    std::vector<TraceRow> trace;
    bool converged = false;  // lambda-ratio stop reached
    int outer_iterations = 0;
    double lambda_a = 0.0;
    double lambda_b = 0.0;
    lattice::TreeSet trees;  // thetas as used in the final iteration
};

double capacity_bits(std::size_t pixels);

OptimizeResult alternate_optimize(const estimation::ModelField& model, const lattice::SublatticePartition& partition,
                                  const OptimizerConfig& config);

}  // namespace gmrfsteg::optimizer
