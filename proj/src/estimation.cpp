#include "gmrfsteg/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmrfsteg/error.hpp"
#include "gmrfsteg/parallel.hpp"

namespace gmrfsteg::estimation {

BasisMatrix::BasisMatrix(int block, Eigen::MatrixXd design) : block_(block), design_(std::move(design))
{
    if (block < 1 || block % 2 == 0)
        throw InvalidArgument("block size must be odd and positive, got " + std::to_string(block));
    if (design_.rows() != static_cast<Eigen::Index>(block) * block)
        throw InvalidArgument("design matrix must have p^2 rows");
    if (design_.cols() < 1 || design_.cols() >= design_.rows())
        throw InvalidArgument("parameter count q must satisfy 1 <= q < p^2");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(design_);
    if (rank_check.rank() < design_.cols())
        throw InvalidArgument("design matrix is rank deficient");

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(design_);
    q_ = qr.householderQ() * Eigen::MatrixXd::Identity(design_.rows(), design_.cols());
}

BasisMatrix build_basis(int block, int degree)
{
    if (block < 1 || block % 2 == 0)
        throw InvalidArgument("block size must be odd and positive, got " + std::to_string(block));
    if (degree < 0)
        throw InvalidArgument("polynomial degree must be non-negative");
    const long long q = static_cast<long long>(degree + 1) * (degree + 2) / 2;
    const long long rows = static_cast<long long>(block) * block;
    if (q >= rows)
        throw InvalidArgument("degree " + std::to_string(degree) + " needs q=" + std::to_string(q) +
                              " parameters, not fewer than p^2=" + std::to_string(rows));

    const double half = (block - 1) / 2.0;
    Eigen::MatrixXd g(rows, q);
    for (int dy = 0; dy < block; ++dy) {
        for (int dx = 0; dx < block; ++dx) {
            const double u = half > 0 ? (dx - half) / half : 0.0;
            const double v = half > 0 ? (dy - half) / half : 0.0;
            const Eigen::Index row = dy * block + dx;
            Eigen::Index col = 0;
            for (int total = 0; total <= degree; ++total)
                for (int a = total; a >= 0; --a)
                    g(row, col++) = std::pow(u, a) * std::pow(v, total - a);
        }
    }
    return BasisMatrix(block, std::move(g));
}

std::vector<double> fit_block(std::span<const double> block, const BasisMatrix& basis)
{
    if (block.size() != static_cast<std::size_t>(basis.rows()))
        throw InvalidArgument("block length must equal p^2");
    const Eigen::Map<const Eigen::VectorXd> b(block.data(), static_cast<Eigen::Index>(block.size()));
    const auto& q = basis.orthonormal();
    const Eigen::VectorXd fitted = q * (q.transpose() * b);
    return {fitted.data(), fitted.data() + fitted.size()};
}

namespace {

/// Block remainders r_n - r̂_n for every pixel of one row, packed [col][p^2].
class RemainderRow {
public:
    RemainderRow(const FloatGrid& residual, const BasisMatrix& basis)
        : residual_(residual), basis_(basis), samples_(basis.rows()), data_(residual.width * basis.rows())
    {
    }

    void compute(std::size_t row)
    {
        const int p = basis_.block();
        const int half = p / 2;
        const auto& q = basis_.orthonormal();
        Eigen::VectorXd b(samples_);
        for (std::size_t c = 0; c < residual_.width; ++c) {
            for (int dy = 0; dy < p; ++dy) {
                const auto rr = mirror_index(static_cast<long long>(row) + dy - half, residual_.height);
                for (int dx = 0; dx < p; ++dx)
                    b[dy * p + dx] = residual_.at(rr, mirror_index(static_cast<long long>(c) + dx - half, residual_.width));
            }
            Eigen::Map<Eigen::VectorXd> e(data_.data() + c * samples_, samples_);
            e = b - q * (q.transpose() * b);
        }
    }

    std::span<const double> at(std::size_t col) const
    {
        return {data_.data() + col * samples_, static_cast<std::size_t>(samples_)};
    }

private:
    const FloatGrid& residual_;
    const BasisMatrix& basis_;
    Eigen::Index samples_;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

struct RawFields {
    FloatGrid variance;  // unclamped
    FloatGrid cov_h;
    FloatGrid cov_v;
};

RawFields scan(const FloatGrid& residual, const BasisMatrix& basis, int threads)
{
    if (residual.size() == 0)
        throw InvalidArgument("empty residual field");
    const std::size_t w = residual.width;
    const std::size_t h = residual.height;
    RawFields out{FloatGrid(w, h), FloatGrid(w, h), FloatGrid(w, h)};
    const double dof = basis.dof();

    parallel_for(h, threads, [&](std::size_t row_begin, std::size_t row_end) {
        RemainderRow first(residual, basis);
        RemainderRow second(residual, basis);
        RemainderRow* current = &first;
        RemainderRow* below = &second;
        current->compute(row_begin);
        for (std::size_t r = row_begin; r < row_end; ++r) {
            const bool has_below = r + 1 < h;
            if (has_below)
                below->compute(r + 1);
            for (std::size_t c = 0; c < w; ++c) {
                const auto e = current->at(c);
                out.variance.at(r, c) = dot(e, e) / dof;
                if (c + 1 < w)
                    out.cov_h.at(r, c) = dot(e, current->at(c + 1)) / dof;
                if (has_below)
                    out.cov_v.at(r, c) = dot(e, below->at(c)) / dof;
            }
            std::swap(current, below);
        }
    });
    return out;
}

void clamp_variance(FloatGrid& variance)
{
    for (double& v : variance.values)
        v = std::max(kVarianceFloor, v);
}

}  // namespace

FloatGrid estimate_variance(const FloatGrid& residual, const BasisMatrix& basis, int threads)
{
    auto raw = scan(residual, basis, threads);
    clamp_variance(raw.variance);
    return std::move(raw.variance);
}

FloatGrid estimate_covariance(const FloatGrid& residual, const BasisMatrix& basis, Orientation orientation, int threads)
{
    auto raw = scan(residual, basis, threads);
    return orientation == Orientation::Horizontal ? std::move(raw.cov_h) : std::move(raw.cov_v);
}

double clamp_correlation(double covariance, double var_m, double var_n)
{
    const double rho = covariance / std::sqrt(var_m * var_n);
    if (std::abs(rho) > kRhoLimit)
        return std::copysign(kRhoLimit, rho);
    return rho;
}

ModelField correlation(ModelField model)
{
    const auto& var = model.variance;
    const std::size_t w = var.width;
    const std::size_t h = var.height;
    model.rho_h = FloatGrid(w, h);
    model.rho_v = FloatGrid(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            if (c + 1 < w)
                model.rho_h.at(r, c) = clamp_correlation(model.cov_h.at(r, c), var.at(r, c), var.at(r, c + 1));
            if (r + 1 < h)
                model.rho_v.at(r, c) = clamp_correlation(model.cov_v.at(r, c), var.at(r, c), var.at(r + 1, c));
        }
    return model;
}

ModelField estimate_model(const FloatGrid& residual, const BasisMatrix& basis, int threads)
{
    auto raw = scan(residual, basis, threads);
    clamp_variance(raw.variance);
    ModelField model;
    model.variance = std::move(raw.variance);
    model.cov_h = std::move(raw.cov_h);
    model.cov_v = std::move(raw.cov_v);
    return correlation(std::move(model));
}

}  // namespace gmrfsteg::estimation
