#pragma once

#include <array>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmrfsteg/fim.hpp"

// Brute-force references for the closed forms in fim.hpp. Nothing here calls
// into fim.cpp; only the plain Fim2 / CliqueParams structs are shared.
namespace gmrfsteg::oracle {

constexpr double kTailEpsilon = 1e-8;

/// Cell probabilities p(i, j) for i, j in [-T, T]; i indexes x1.
struct QuantizedPmf2 {
    int half_width = 0;
    double delta = 1.0;
    std::vector<double> probs;

    int side() const { return 2 * half_width + 1; }
    bool contains(int i, int j) const { return std::abs(i) <= half_width && std::abs(j) <= half_width; }
    double at(int i, int j) const { return contains(i, j) ? probs[offset(i, j)] : 0.0; }
    double& ref(int i, int j) { return probs[offset(i, j)]; }
    double total() const;

private:
    std::size_t offset(int i, int j) const
    {
        return static_cast<std::size_t>(i + half_width) * side() + static_cast<std::size_t>(j + half_width);
    }
};

enum class PmfMode {
    CellIntegral,  // integrate the density over each cell
    Midpoint,      // delta^2 f at the cell center
};

/// ceil(8 sqrt(max variance) / delta).
int default_support(const fim::CliqueParams& params);

QuantizedPmf2 cover_pmf(const fim::CliqueParams& params, int half_width, PmfMode mode = PmfMode::CellIntegral);

/// Symmetric ternary changes applied independently to both pixels; mass pushed past the support is dropped.
QuantizedPmf2 stego_pmf(const QuantizedPmf2& cover, double beta1, double beta2);

/// Sum over the support extended by one cell of the beta1*beta2 coefficient of the stego pmf.
double mixed_mass_derivative(const QuantizedPmf2& cover);

/// KL(p || q) in bits.
double kl_exact(const QuantizedPmf2& p, const QuantizedPmf2& q);

/// Discrete FIM sums over the quantized pmf; cells with p below DBL_MIN are skipped.
fim::Fim2 fim_numeric(const fim::CliqueParams& params, int half_width);

/// E[g(X1, X2)] for the zero-mean bivariate Gaussian, by composite Gauss-Legendre over +-10 std.
double gaussian_expectation(const fim::CliqueParams& params, const std::function<double(double, double)>& g);

/// Continuous-limit FIM integrals evaluated by quadrature.
fim::Fim2 fim_quadrature(const fim::CliqueParams& params);

/// One-sided second differences of kl_exact at beta = 0.
Eigen::Matrix2d hessian_fd(const fim::CliqueParams& params, double h = 1e-3, int half_width = 0);

struct MomentCheck {
    std::string name;
    double numeric = 0.0;
    double closed = 0.0;
    double rel_error = 0.0;  // relative to the moment's natural scale
};

struct IsserlisReport {
    std::vector<MomentCheck> moments;
    double max_rel_error = 0.0;
};

IsserlisReport isserlis_check(const fim::CliqueParams& params);

/// Per-entry relative errors (i11, i12, i22). An off-diagonal reference that is zero
/// by symmetry (rho = 0) is judged against sqrt(ref.i11 * ref.i22) instead.
std::array<double, 3> fim_entry_errors(const fim::Fim2& value, const fim::Fim2& reference, double rho);

}  // namespace gmrfsteg::oracle
