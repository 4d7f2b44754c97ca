#include "gmrfsteg/fim.hpp"

#include <cmath>
#include <numbers>

#include "gmrfsteg/error.hpp"

namespace gmrfsteg::fim {

void validate(const CliqueParams& params)
{
    if (!(params.sigma1 >= 0.01) || !(params.sigma2 >= 0.01))
        throw InvalidArgument("clique variances must be >= 0.01");
    if (!(std::abs(params.rho) <= 0.99))
        throw InvalidArgument("clique correlation must satisfy |rho| <= 0.99");
    if (!(params.delta > 0.0))
        throw InvalidArgument("quantization step must be positive");
}

Fim2 fim_clique(const CliqueParams& params)
{
    const double d2 = params.delta * params.delta;
    const double d4 = d2 * d2;
    const double r2 = params.rho * params.rho;
    const double denom = (1.0 - r2) * (1.0 - r2);
    return {
        2.0 * d4 / (params.sigma1 * params.sigma1 * denom),
        2.0 * d4 * r2 / (params.sigma1 * params.sigma2 * denom),
        2.0 * d4 / (params.sigma2 * params.sigma2 * denom),
    };
}

double fi_single(double sigma, double delta)
{
    const double d2 = delta * delta;
    return 2.0 * d2 * d2 / (sigma * sigma);
}

double kl_clique(double beta1, double beta2, const Fim2& fim)
{
    return (fim.i11 * beta1 * beta1 + 2.0 * fim.i12 * beta1 * beta2 + fim.i22 * beta2 * beta2) /
           (2.0 * std::numbers::ln2);
}

double kl_tree(double beta_center, std::span<const double> beta_neighbors, std::span<const int> thetas,
               std::span<const Fim2> fims, double fi_center)
{
    if (beta_neighbors.size() != thetas.size() || thetas.size() != fims.size())
        throw InvalidArgument("kl_tree: neighbour, theta and fim arrays must align");
    if (thetas.size() > 4)
        throw InvalidArgument("kl_tree: a clique tree has at most 4 cliques");

    double sum = 0.0;
    int active = 0;
    for (std::size_t c = 0; c < thetas.size(); ++c) {
        if (!thetas[c])
            continue;
        ++active;
        const double b1 = beta_neighbors[c];
        const auto& f = fims[c];
        sum += f.i11 * b1 * b1 + 2.0 * f.i12 * b1 * beta_center + f.i22 * beta_center * beta_center;
    }
    sum -= (active - 1) * fi_center * beta_center * beta_center;
    return sum / (2.0 * std::numbers::ln2);
}

}  // namespace gmrfsteg::fim
