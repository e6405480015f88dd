#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pigp/kernel.hpp"

namespace pigp {

/// Masked 2D grid. Node (ix, iy) sits at (ix * spacing, iy * spacing);
/// mask true = inside the domain. Everything off-grid or masked carries a
/// Dirichlet zero condition, including hole perimeters.
struct GridDomain {
    int nx = 0;
    int ny = 0;
    double spacing = 1.0;
    std::vector<char> mask;   // row-major, iy * nx + ix

    bool inside(int ix, int iy) const {
        return ix >= 0 && ix < nx && iy >= 0 && iy < ny && mask[iy * nx + ix];
    }
    int n_interior() const;
    void validate() const;   // >= 1 interior cell, 4-connected interior

    /// Rasterize an axis-aligned rectangular hole (inclusive node range).
    void cut_rectangle(int x0, int y0, int x1, int y1);
    /// Rasterize a circular hole centred at (cx, cy) in node units.
    void cut_circle(double cx, double cy, double radius);

    static GridDomain full(int nx, int ny, double spacing);
};

/// M smallest Dirichlet-Laplacian eigenpairs of the masked domain.
/// Eigenfunction fields are orthonormal under the grid inner product
/// <u, v> = spacing^2 * sum_cells u v, zero on and outside the boundary,
/// and evaluate off-grid by bilinear interpolation.
struct ReducedRankBasis {
    GridDomain domain;
    Vec eigenvalues;      // ascending, > 0, units 1/length^2
    Mat eigenfunctions;   // n_interior x M
    std::vector<int> interior_index;   // grid cell -> column-stacked row, -1 outside

    int size() const { return static_cast<int>(eigenvalues.size()); }

    /// phi_i at an arbitrary in-domain point (bilinear; masked corners
    /// contribute zero). Throws std::invalid_argument off the domain.
    Vec evaluate_at(double x, double y) const;

    /// Eigenfunction values at grid node (ix, iy); zero when masked.
    double node_value(int ix, int iy, int i) const;
};

/// Build the basis: 5-point-stencil negative Laplacian with Dirichlet
/// condition on all mask boundaries, M smallest eigenpairs via
/// shift-invert Lanczos on a sparse Cholesky factorization.
ReducedRankBasis build_basis(const GridDomain& domain, int M);

/// Spectral density of the 2D squared-exponential kernel,
/// S(w) = sigma_y^2 * 2 pi * l^2 * exp(-l^2 w^2 / 2).
double se_spectral_density_2d(double omega, double signal_variance, double length_scale);

/// Boundary-constrained covariance
///   k(x, x') = sum_i S(sqrt(lambda_i)) phi_i(x) phi_i(x').
double eval_constrained(const ReducedRankBasis& basis, const SeParams& params,
                        const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& xp);

/// The constrained covariance exposed through the Kernel interface with
/// optimizable (sigma_y^2, l); pair with a WhiteNoiseKernel for noisy data.
class ConstrainedSeKernel : public Kernel {
public:
    ConstrainedSeKernel(std::shared_ptr<const ReducedRankBasis> basis,
                        double signal_variance, double length_scale);

    int input_dim() const override { return 2; }
    double eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                bool same_index) const override;
    int n_params() const override { return 2; }
    Vec log_params() const override;
    KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const override;
    std::vector<std::string> param_names() const override;
    Mat gram(const Mat& rows, const Mat& cols, bool match_diagonal) const override;
    std::vector<Mat> gram_gradients(const Mat& X) const override;
    std::string name() const override { return "constrained_se"; }

    double signal_variance() const { return signal_variance_; }
    double length_scale() const { return length_scale_; }
    const ReducedRankBasis& basis() const { return *basis_; }

    /// Spectral weights S(sqrt(lambda_i)) at the current hyperparameters.
    Vec spectral_weights() const;

    /// phi matrix at arbitrary points (rows of a N x 2 matrix).
    Mat features(const Mat& X) const;

private:
    std::shared_ptr<const ReducedRankBasis> basis_;
    double signal_variance_;
    double length_scale_;
};

/// Convenience: constrained kernel + white noise, ready for gp-engine.
KernelPtr wrap_as_kernel(std::shared_ptr<const ReducedRankBasis> basis,
                         const SeParams& params);

} // namespace pigp
