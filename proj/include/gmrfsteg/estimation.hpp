#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmrfsteg/grid.hpp"

namespace gmrfsteg::estimation {

constexpr int kDefaultBlock = 9;
constexpr int kDefaultDegree = 2;
constexpr double kVarianceFloor = 0.01;
constexpr double kRhoLimit = 0.99;

/// Design matrix G (p^2 x q) of the local parametric model, with its thin
/// orthonormal factor Q cached so that every block projection reuses one QR.
class BasisMatrix {
public:
    /// Validates rank; throws InvalidArgument on a rank-deficient or oversized design.
    BasisMatrix(int block, Eigen::MatrixXd design);

    int block() const { return block_; }
    int rows() const { return static_cast<int>(design_.rows()); }
    int params() const { return static_cast<int>(design_.cols()); }
    const Eigen::MatrixXd& design() const { return design_; }
    const Eigen::MatrixXd& orthonormal() const { return q_; }

    /// p^2 - q, the residual degrees of freedom.
    double dof() const { return static_cast<double>(rows() - params()); }

private:
    int block_;
    Eigen::MatrixXd design_;
    Eigen::MatrixXd q_;
};

/// All monomials u^a v^b with a + b <= degree on u, v in [-1, 1]; column 0 is constant.
BasisMatrix build_basis(int block = kDefaultBlock, int degree = kDefaultDegree);

/// Least-squares projection of a p^2 block onto span(G).
std::vector<double> fit_block(std::span<const double> block, const BasisMatrix& basis);

enum class Orientation { Horizontal, Vertical };

struct ModelField {
    FloatGrid variance;  // clamped to >= kVarianceFloor
    FloatGrid cov_h;     // clique (r,c)-(r,c+1), stored at the left pixel; 0 in the last column
    FloatGrid cov_v;     // clique (r,c)-(r+1,c), stored at the top pixel; 0 in the last row
    FloatGrid rho_h;
    FloatGrid rho_v;
};

/// Per-pixel block residual variance, clamped at kVarianceFloor.
FloatGrid estimate_variance(const FloatGrid& residual, const BasisMatrix& basis, int threads = 1);

/// Covariance between each pixel's block remainder and its right (or lower) neighbour's.
FloatGrid estimate_covariance(const FloatGrid& residual, const BasisMatrix& basis, Orientation orientation,
                              int threads = 1);

/// Correlation coefficient with magnitude clamp |rho| <= 0.99.
double clamp_correlation(double covariance, double var_m, double var_n);

/// Fills rho_h / rho_v from covariances and (already clamped) variances.
ModelField correlation(ModelField model);

/// Variance, both covariances and correlations in one pass over the residual field.
ModelField estimate_model(const FloatGrid& residual, const BasisMatrix& basis, int threads = 1);

}  // namespace gmrfsteg::estimation
