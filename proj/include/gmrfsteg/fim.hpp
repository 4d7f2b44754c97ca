#pragma once

#include <span>

namespace gmrfsteg::fim {

/// Binary steganographic FIM of one clique, slot 2 = tree center.
struct Fim2 {
    double i11 = 0.0;
    double i12 = 0.0;
    double i22 = 0.0;

    friend bool operator==(const Fim2&, const Fim2&) = default;
};

/// sigma1, sigma2 are variances, not standard deviations.
struct CliqueParams {
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rho = 0.0;
    double delta = 1.0;
};

/// Throws InvalidArgument unless sigma >= 0.01, |rho| <= 0.99, delta > 0.
void validate(const CliqueParams& params);

Fim2 fim_clique(const CliqueParams& params);

/// I1(0) = 2 delta^4 / sigma^2.
double fi_single(double sigma, double delta = 1.0);

/// Quadratic KL of one clique, in bits.
double kl_clique(double beta1, double beta2, const Fim2& fim);

/// Quadratic KL of a 4-ary clique tree, in bits. Each fims[c] has the
/// neighbour in slot 1 and the center in slot 2.
double kl_tree(double beta_center, std::span<const double> beta_neighbors, std::span<const int> thetas,
               std::span<const Fim2> fims, double fi_center);

}  // namespace gmrfsteg::fim
