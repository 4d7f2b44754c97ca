#include "gmrfsteg/oracle.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <string>

#include "gmrfsteg/error.hpp"

namespace gmrfsteg::oracle {

namespace {

struct Rule {
    std::vector<double> nodes;  // on [-1, 1]
    std::vector<double> weights;
};

Rule gauss_legendre(int n)
{
    Rule rule{std::vector<double>(n), std::vector<double>(n)};
    for (int k = 0; k < n; ++k) {
        double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int m = 2; m <= n; ++m) {
                const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        rule.nodes[k] = x;
        rule.weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

const Rule& rule16()
{
    static const Rule r = gauss_legendre(16);
    return r;
}

const Rule& rule8()
{
    static const Rule r = gauss_legendre(8);
    return r;
}

/// Nodes and weights of a composite rule on [a, b] with `panels` equal panels.
void composite(double a, double b, int panels, const Rule& rule, std::vector<double>& x, std::vector<double>& w)
{
    x.clear();
    w.clear();
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * width;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            x.push_back(mid + 0.5 * width * rule.nodes[k]);
            w.push_back(0.5 * width * rule.weights[k]);
        }
    }
}

double lower_tail(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// P(a < Z < b) for standard normal Z, accurate in both tails.
double normal_interval(double a, double b)
{
    if (a >= 0.0)
        return upper_tail(a) - upper_tail(b);
    if (b <= 0.0)
        return lower_tail(b) - lower_tail(a);
    return 1.0 - lower_tail(a) - upper_tail(b);
}

double normal_density(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

void check_params(const fim::CliqueParams& p)
{
    if (!(p.sigma1 > 0.0) || !(p.sigma2 > 0.0) || !(std::abs(p.rho) < 1.0) || !(p.delta > 0.0))
        throw InvalidArgument("oracle: invalid clique parameters");
}

constexpr int kCellPanels = 4;

}  // namespace

double QuantizedPmf2::total() const
{
    double s = 0.0;
    for (double p : probs)
        s += p;
    return s;
}

int default_support(const fim::CliqueParams& params)
{
    return static_cast<int>(std::ceil(8.0 * std::sqrt(std::max(params.sigma1, params.sigma2)) / params.delta));
}

QuantizedPmf2 cover_pmf(const fim::CliqueParams& params, int half_width, PmfMode mode)
{
    check_params(params);
    if (half_width < 1)
        throw InvalidArgument("oracle: support half-width must be >= 1");
    QuantizedPmf2 pmf;
    pmf.half_width = half_width;
    pmf.delta = params.delta;
    pmf.probs.assign(static_cast<std::size_t>(pmf.side()) * pmf.side(), 0.0);

    const double s1 = std::sqrt(params.sigma1);
    const double s2 = std::sqrt(params.sigma2);
    const double one_minus = 1.0 - params.rho * params.rho;
    const double d = params.delta;
    const int t = half_width;

    if (mode == PmfMode::Midpoint) {
        const double norm = 1.0 / (2.0 * std::numbers::pi * s1 * s2 * std::sqrt(one_minus));
        for (int i = -t; i <= t; ++i)
            for (int j = -t; j <= t; ++j) {
                const double z1 = i * d / s1;
                const double z2 = j * d / s2;
                const double q = (z1 * z1 - 2.0 * params.rho * z1 * z2 + z2 * z2) / one_minus;
                pmf.ref(i, j) = d * d * norm * std::exp(-0.5 * q);
            }
        return pmf;
    }

    // X2 | X1 = x ~ N(slope x, cond_sd^2); integrate the x1 cell numerically, x2 cell in closed form.
    const double slope = params.rho * s2 / s1;
    const double cond_sd = s2 * std::sqrt(one_minus);
    std::vector<double> xs;
    std::vector<double> ws;
    std::vector<double> cdf_edges(2 * t + 2);
    for (int i = -t; i <= t; ++i) {
        composite((i - 0.5) * d, (i + 0.5) * d, kCellPanels, rule8(), xs, ws);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double weight = ws[k] * normal_density(xs[k] / s1) / s1;
            if (weight == 0.0)
                continue;
            const double mean = slope * xs[k];
            for (int j = -t; j <= t; ++j) {
                const double a = ((j - 0.5) * d - mean) / cond_sd;
                const double b = ((j + 0.5) * d - mean) / cond_sd;
                pmf.ref(i, j) += weight * normal_interval(a, b);
            }
        }
    }
    const double missing = 1.0 - pmf.total();
    if (missing > kTailEpsilon)
        throw InvalidArgument("oracle: tail mass " + std::to_string(missing) + " exceeds tolerance; enlarge T");
    return pmf;
}

QuantizedPmf2 stego_pmf(const QuantizedPmf2& cover, double beta1, double beta2)
{
    if (!(beta1 >= 0.0 && beta1 <= 1.0 / 3.0 + 1e-15 && beta2 >= 0.0 && beta2 <= 1.0 / 3.0 + 1e-15))
        throw InvalidArgument("oracle: change probabilities must lie in [0, 1/3]");
    QuantizedPmf2 q = cover;
    const int t = cover.half_width;
    const double keep1 = 1.0 - 2.0 * beta1;
    const double keep2 = 1.0 - 2.0 * beta2;
    for (int i = -t; i <= t; ++i)
        for (int j = -t; j <= t; ++j) {
            const double row = cover.at(i - 1, j) + cover.at(i + 1, j);
            const double col = cover.at(i, j - 1) + cover.at(i, j + 1);
            const double diag = cover.at(i - 1, j - 1) + cover.at(i - 1, j + 1) + cover.at(i + 1, j - 1) +
                                cover.at(i + 1, j + 1);
            q.ref(i, j) = cover.at(i, j) * keep1 * keep2 + row * beta1 * keep2 + col * keep1 * beta2 +
                          diag * beta1 * beta2;
        }
    return q;
}

double mixed_mass_derivative(const QuantizedPmf2& cover)
{
    const int t = cover.half_width + 1;
    double sum = 0.0;
    for (int i = -t; i <= t; ++i)
        for (int j = -t; j <= t; ++j) {
            const double row = cover.at(i - 1, j) + cover.at(i + 1, j);
            const double col = cover.at(i, j - 1) + cover.at(i, j + 1);
            const double diag = cover.at(i - 1, j - 1) + cover.at(i - 1, j + 1) + cover.at(i + 1, j - 1) +
                                cover.at(i + 1, j + 1);
            sum += 4.0 * cover.at(i, j) - 2.0 * row - 2.0 * col + diag;
        }
    return sum;
}

double kl_exact(const QuantizedPmf2& p, const QuantizedPmf2& q)
{
    if (p.half_width != q.half_width)
        throw InvalidArgument("oracle: pmf supports differ");
    double sum = 0.0;
    for (std::size_t k = 0; k < p.probs.size(); ++k) {
        const double pk = p.probs[k];
        if (pk <= 0.0)
            continue;
        if (!(q.probs[k] > 0.0))
            throw InvalidArgument("oracle: q vanishes where p does not");
        sum -= pk * std::log1p((q.probs[k] - pk) / pk);
    }
    return sum / std::numbers::ln2;
}

fim::Fim2 fim_numeric(const fim::CliqueParams& params, int half_width)
{
    const auto p = cover_pmf(params, half_width);
    const int t = half_width;
    fim::Fim2 out;
    for (int i = -t; i <= t; ++i)
        for (int j = -t; j <= t; ++j) {
            const double pij = p.at(i, j);
            if (pij < DBL_MIN)
                continue;
            const double o1 = p.at(i - 1, j) + p.at(i + 1, j) - 2.0 * pij;
            const double o2 = p.at(i, j - 1) + p.at(i, j + 1) - 2.0 * pij;
            out.i11 += o1 * o1 / pij;
            out.i12 += o1 * o2 / pij;
            out.i22 += o2 * o2 / pij;
        }
    return out;
}

double gaussian_expectation(const fim::CliqueParams& params, const std::function<double(double, double)>& g)
{
    check_params(params);
    constexpr double kReach = 10.0;
    constexpr int kPanels = 20;
    std::vector<double> z;
    std::vector<double> w;
    composite(-kReach, kReach, kPanels, rule16(), z, w);

    const double s1 = std::sqrt(params.sigma1);
    const double s2 = std::sqrt(params.sigma2);
    const double cond = std::sqrt(1.0 - params.rho * params.rho);
    double sum = 0.0;
    for (std::size_t a = 0; a < z.size(); ++a) {
        const double wa = w[a] * normal_density(z[a]);
        const double x1 = s1 * z[a];
        double inner = 0.0;
        for (std::size_t b = 0; b < z.size(); ++b) {
            const double x2 = s2 * (params.rho * z[a] + cond * z[b]);
            inner += w[b] * normal_density(z[b]) * g(x1, x2);
        }
        sum += wa * inner;
    }
    return sum;
}

fim::Fim2 fim_quadrature(const fim::CliqueParams& params)
{
    const double cov = params.rho * std::sqrt(params.sigma1 * params.sigma2);
    const double det = params.sigma1 * params.sigma2 - cov * cov;
    const double g11 = params.sigma2 / det;
    const double g22 = params.sigma1 / det;
    const double g12 = -cov / det;
    auto u1 = [&](double x1, double x2) {
        const double y = g11 * x1 + g12 * x2;
        return y * y - g11;
    };
    auto u2 = [&](double x1, double x2) {
        const double y = g12 * x1 + g22 * x2;
        return y * y - g22;
    };
    const double d2 = params.delta * params.delta;
    const double d4 = d2 * d2;
    return {
        d4 * gaussian_expectation(params, [&](double a, double b) { return u1(a, b) * u1(a, b); }),
        d4 * gaussian_expectation(params, [&](double a, double b) { return u1(a, b) * u2(a, b); }),
        d4 * gaussian_expectation(params, [&](double a, double b) { return u2(a, b) * u2(a, b); }),
    };
}

Eigen::Matrix2d hessian_fd(const fim::CliqueParams& params, double h, int half_width)
{
    if (!(h > 0.0) || 3.0 * h > 1.0 / 3.0)
        throw InvalidArgument("oracle: finite-difference step leaves [0, 1/3]");
    const int t = half_width > 0 ? half_width : default_support(params);
    const auto p = cover_pmf(params, t);
    auto f = [&](double b1, double b2) { return kl_exact(p, stego_pmf(p, b1, b2)); };

    const double f0 = f(0.0, 0.0);
    const double h2 = h * h;
    const double d11 = (2.0 * f0 - 5.0 * f(h, 0.0) + 4.0 * f(2.0 * h, 0.0) - f(3.0 * h, 0.0)) / h2;
    const double d22 = (2.0 * f0 - 5.0 * f(0.0, h) + 4.0 * f(0.0, 2.0 * h) - f(0.0, 3.0 * h)) / h2;
    auto mixed = [&](double s) { return (f(s, s) - f(s, 0.0) - f(0.0, s) + f0) / (s * s); };
    const double d12 = 2.0 * mixed(h) - mixed(2.0 * h);

    Eigen::Matrix2d hess;
    hess << d11, d12, d12, d22;
    return hess;
}

IsserlisReport isserlis_check(const fim::CliqueParams& params)
{
    const double s11 = params.sigma1;
    const double s22 = params.sigma2;
    const double s12 = params.rho * std::sqrt(s11 * s22);
    const double sd1 = std::sqrt(s11);
    const double sd2 = std::sqrt(s22);

    struct Moment {
        const char* name;
        std::function<double(double, double)> g;
        double closed;
        double scale;
    };
    const Moment moments[] = {
        {"E[X1^2]", [](double a, double) { return a * a; }, s11, s11},
        {"E[X1X2]", [](double a, double b) { return a * b; }, s12, sd1 * sd2},
        {"E[X1^4]", [](double a, double) { return a * a * a * a; }, 3.0 * s11 * s11, s11 * s11},
        {"E[X1^3X2]", [](double a, double b) { return a * a * a * b; }, 3.0 * s11 * s12, s11 * sd1 * sd2},
        {"E[X1^2X2^2]", [](double a, double b) { return a * a * b * b; }, s11 * s22 + 2.0 * s12 * s12, s11 * s22},
    };

    IsserlisReport report;
    for (const auto& s : moments) {
        const double numeric = gaussian_expectation(params, s.g);
        const double err = std::abs(numeric - s.closed) / s.scale;
        report.moments.push_back({s.name, numeric, s.closed, err});
        report.max_rel_error = std::max(report.max_rel_error, err);
    }
    return report;
}

std::array<double, 3> fim_entry_errors(const fim::Fim2& value, const fim::Fim2& reference, double rho)
{
    auto rel = [](double v, double r, double denom) { return std::abs(v - r) / denom; };
    const double off_scale = rho == 0.0 ? std::sqrt(reference.i11 * reference.i22) : std::abs(reference.i12);
    return {rel(value.i11, reference.i11, std::abs(reference.i11)), rel(value.i12, reference.i12, off_scale),
            rel(value.i22, reference.i22, std::abs(reference.i22))};
}

}  // namespace gmrfsteg::oracle
