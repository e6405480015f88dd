#include "pigp/boundary.hpp"

#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "pigp/errors.hpp"

namespace pigp {

int GridDomain::n_interior() const {
    int n = 0;
    for (char m : mask) n += (m != 0);
    return n;
}

void GridDomain::validate() const {
    if (nx < 1 || ny < 1 || !(spacing > 0.0)) {
        throw std::invalid_argument("grid domain needs nx, ny >= 1 and spacing > 0");
    }
    if (mask.size() != static_cast<std::size_t>(nx) * ny) {
        throw std::invalid_argument("mask size must be nx * ny");
    }
    const int n = n_interior();
    if (n < 1) {
        throw std::invalid_argument("domain needs at least one interior cell");
    }
    // 4-connectivity: BFS from the first interior cell must reach all of them
    std::vector<char> seen(mask.size(), 0);
    std::queue<std::pair<int, int>> frontier;
    for (int iy = 0; iy < ny && frontier.empty(); ++iy) {
        for (int ix = 0; ix < nx && frontier.empty(); ++ix) {
            if (inside(ix, iy)) {
                frontier.emplace(ix, iy);
                seen[iy * nx + ix] = 1;
            }
        }
    }
    int reached = 0;
    const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
    while (!frontier.empty()) {
        auto [ix, iy] = frontier.front();
        frontier.pop();
        ++reached;
        for (int d = 0; d < 4; ++d) {
            const int jx = ix + dx[d], jy = iy + dy[d];
            if (inside(jx, jy) && !seen[jy * nx + jx]) {
                seen[jy * nx + jx] = 1;
                frontier.emplace(jx, jy);
            }
        }
    }
    if (reached != n) {
        throw std::invalid_argument("domain interior must be a single 4-connected component");
    }
}

void GridDomain::cut_rectangle(int x0, int y0, int x1, int y1) {
    for (int iy = std::max(0, y0); iy <= std::min(ny - 1, y1); ++iy) {
        for (int ix = std::max(0, x0); ix <= std::min(nx - 1, x1); ++ix) {
            mask[iy * nx + ix] = 0;
        }
    }
}

void GridDomain::cut_circle(double cx, double cy, double radius) {
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const double dx = ix - cx, dy = iy - cy;
            if (dx * dx + dy * dy <= radius * radius) mask[iy * nx + ix] = 0;
        }
    }
}

GridDomain GridDomain::full(int nx, int ny, double spacing) {
    GridDomain d;
    d.nx = nx;
    d.ny = ny;
    d.spacing = spacing;
    d.mask.assign(static_cast<std::size_t>(nx) * ny, 1);
    return d;
}

double ReducedRankBasis::node_value(int ix, int iy, int i) const {
    if (!domain.inside(ix, iy)) return 0.0;
    const int row = interior_index[iy * domain.nx + ix];
    return eigenfunctions(row, i);
}

Vec ReducedRankBasis::evaluate_at(double x, double y) const {
    const double h = domain.spacing;
    double gx = x / h, gy = y / h;
    // one-ulp slack so exact node coordinates never round off the grid
    const double eps = 1e-9;
    if (gx < -eps || gx > domain.nx - 1 + eps || gy < -eps || gy > domain.ny - 1 + eps) {
        throw std::invalid_argument("point outside the grid domain");
    }
    gx = std::min(std::max(gx, 0.0), static_cast<double>(domain.nx - 1));
    gy = std::min(std::max(gy, 0.0), static_cast<double>(domain.ny - 1));
    int ix = static_cast<int>(std::floor(gx));
    int iy = static_cast<int>(std::floor(gy));
    if (ix == domain.nx - 1) --ix;
    if (iy == domain.ny - 1) --iy;
    if (domain.nx == 1) ix = 0;
    if (domain.ny == 1) iy = 0;
    const double fx = gx - ix, fy = gy - iy;
    const bool any_inside = domain.inside(ix, iy) || domain.inside(ix + 1, iy) ||
                            domain.inside(ix, iy + 1) || domain.inside(ix + 1, iy + 1);
    if (!any_inside) {
        throw std::invalid_argument("point lies in a masked region of the domain");
    }
    Vec phi = Vec::Zero(size());
    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
    const double w01 = (1 - fx) * fy, w11 = fx * fy;
    for (int i = 0; i < size(); ++i) {
        phi[i] = w00 * node_value(ix, iy, i) + w10 * node_value(ix + 1, iy, i) +
                 w01 * node_value(ix, iy + 1, i) + w11 * node_value(ix + 1, iy + 1, i);
    }
    return phi;
}

namespace {

// Shift-invert Lanczos (full reorthogonalization) for the M smallest
// eigenpairs of a sparse SPD matrix, followed by a Rayleigh-Ritz refinement
// in the recovered subspace.
void smallest_eigenpairs(const Eigen::SparseMatrix<double>& L, int M, Vec& values,
                         Mat& vectors) {
    const int n = static_cast<int>(L.rows());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() != Eigen::Success) {
        throw NumericError("sparse Cholesky of the domain Laplacian failed");
    }

    const int m = std::min(n, std::max(2 * M + 20, M + 40));
    Mat V(n, m);
    Vec alpha(m), beta(m);

    std::mt19937_64 rng(0x5eedb0d1u);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    v.normalize();

    Vec prev = Vec::Zero(n);
    double beta_prev = 0.0;
    int steps = 0;
    for (int k = 0; k < m; ++k) {
        V.col(k) = v;
        Vec w = solver.solve(v);
        alpha[k] = v.dot(w);
        w -= alpha[k] * v + beta_prev * prev;
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass) {
            w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
        }
        beta[k] = w.norm();
        ++steps;
        if (beta[k] < 1e-13) break;   // invariant subspace found
        prev = v;
        v = w / beta[k];
        beta_prev = beta[k];
    }

    Mat T = Mat::Zero(steps, steps);
    for (int k = 0; k < steps; ++k) {
        T(k, k) = alpha[k];
        if (k + 1 < steps) T(k, k + 1) = T(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<Mat> tri(T);
    if (tri.info() != Eigen::Success) {
        throw NumericError("tridiagonal eigensolver failed");
    }
    if (steps < M) {
        throw NumericError("Lanczos terminated before finding enough eigenpairs");
    }

    // largest Ritz values of L^{-1} = smallest eigenvalues of L
    Mat W(n, M);
    for (int i = 0; i < M; ++i) {
        W.col(i) = V.leftCols(steps) * tri.eigenvectors().col(steps - 1 - i);
    }
    // Rayleigh-Ritz in span(W) against L itself
    Eigen::HouseholderQR<Mat> qr(W);
    Mat Q = qr.householderQ() * Mat::Identity(n, M);
    Mat A = Q.transpose() * (L * Q);
    A = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> rr(A);
    if (rr.info() != Eigen::Success) {
        throw NumericError("Rayleigh-Ritz eigensolver failed");
    }
    values = rr.eigenvalues();
    vectors = Q * rr.eigenvectors();
}

} // namespace

ReducedRankBasis build_basis(const GridDomain& domain, int M) {
    domain.validate();
    const int n = domain.n_interior();
    if (M < 1 || M > n) {
        throw std::invalid_argument("basis size M must lie in [1, n_interior]");
    }

    ReducedRankBasis basis;
    basis.domain = domain;
    basis.interior_index.assign(domain.mask.size(), -1);
    int row = 0;
    for (int iy = 0; iy < domain.ny; ++iy) {
        for (int ix = 0; ix < domain.nx; ++ix) {
            if (domain.inside(ix, iy)) basis.interior_index[iy * domain.nx + ix] = row++;
        }
    }

    // negative 5-point Laplacian with Dirichlet zeros on every mask boundary
    const double inv_h2 = 1.0 / (domain.spacing * domain.spacing);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 5);
    const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
    for (int iy = 0; iy < domain.ny; ++iy) {
        for (int ix = 0; ix < domain.nx; ++ix) {
            if (!domain.inside(ix, iy)) continue;
            const int r = basis.interior_index[iy * domain.nx + ix];
            trips.emplace_back(r, r, 4.0 * inv_h2);
            for (int d = 0; d < 4; ++d) {
                const int jx = ix + dx[d], jy = iy + dy[d];
                if (domain.inside(jx, jy)) {
                    trips.emplace_back(r, basis.interior_index[jy * domain.nx + jx], -inv_h2);
                }
            }
        }
    }
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trips.begin(), trips.end());

    Vec values;
    Mat vectors;
    smallest_eigenpairs(L, M, values, vectors);

    // normalize under the grid inner product h^2 * sum(u v)
    basis.eigenvalues = values;
    basis.eigenfunctions = vectors / domain.spacing;
    // fixed sign convention: first nonzero component positive
    for (int i = 0; i < M; ++i) {
        for (int r2 = 0; r2 < n; ++r2) {
            const double v = basis.eigenfunctions(r2, i);
            if (std::abs(v) > 1e-12) {
                if (v < 0.0) basis.eigenfunctions.col(i) *= -1.0;
                break;
            }
        }
    }
    return basis;
}

double se_spectral_density_2d(double omega, double signal_variance, double length_scale) {
    const double l2 = length_scale * length_scale;
    return signal_variance * 2.0 * M_PI * l2 * std::exp(-0.5 * l2 * omega * omega);
}

double eval_constrained(const ReducedRankBasis& basis, const SeParams& params,
                        const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& xp) {
    if (x.size() != 2 || xp.size() != 2) {
        throw std::invalid_argument("constrained kernel expects 2D points");
    }
    if (params.length_scales.size() != 1) {
        throw std::invalid_argument("constrained kernel uses a single isotropic length scale");
    }
    const Vec a = basis.evaluate_at(x[0], x[1]);
    const Vec b = basis.evaluate_at(xp[0], xp[1]);
    double k = 0.0;
    // multiply the feature pair first so the sum is symmetric in x, x'
    for (int i = 0; i < basis.size(); ++i) {
        k += se_spectral_density_2d(std::sqrt(basis.eigenvalues[i]), params.signal_variance,
                                    params.length_scales[0]) *
             (a[i] * b[i]);
    }
    return k;
}

ConstrainedSeKernel::ConstrainedSeKernel(std::shared_ptr<const ReducedRankBasis> basis,
                                         double signal_variance, double length_scale)
    : basis_(std::move(basis)), signal_variance_(signal_variance),
      length_scale_(length_scale) {
    if (!basis_) throw std::invalid_argument("constrained kernel needs a basis");
    if (!(signal_variance_ > 0.0) || !(length_scale_ > 0.0)) {
        throw std::invalid_argument("signal_variance and length_scale must be > 0");
    }
}

Vec ConstrainedSeKernel::spectral_weights() const {
    Vec s(basis_->size());
    for (int i = 0; i < basis_->size(); ++i) {
        s[i] = se_spectral_density_2d(std::sqrt(basis_->eigenvalues[i]), signal_variance_,
                                      length_scale_);
    }
    return s;
}

Mat ConstrainedSeKernel::features(const Mat& X) const {
    Mat phi(X.rows(), basis_->size());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        phi.row(r) = basis_->evaluate_at(X(r, 0), X(r, 1)).transpose();
    }
    return phi;
}

double ConstrainedSeKernel::eval(const Eigen::Ref<const Vec>& xp,
                                 const Eigen::Ref<const Vec>& xq, bool) const {
    SeParams p;
    p.signal_variance = signal_variance_;
    p.length_scales = Vec::Constant(1, length_scale_);
    return eval_constrained(*basis_, p, xp, xq);
}

Vec ConstrainedSeKernel::log_params() const {
    Vec lp(2);
    lp << std::log(signal_variance_), std::log(length_scale_);
    return lp;
}

KernelPtr ConstrainedSeKernel::with_log_params(const Eigen::Ref<const Vec>& lp) const {
    if (lp.size() != 2) {
        throw std::invalid_argument("constrained_se: parameter vector size mismatch");
    }
    return std::make_shared<ConstrainedSeKernel>(basis_, std::exp(lp[0]), std::exp(lp[1]));
}

std::vector<std::string> ConstrainedSeKernel::param_names() const {
    return {"constrained_se.signal_variance", "constrained_se.length_scale"};
}

Mat ConstrainedSeKernel::gram(const Mat& rows, const Mat& cols, bool) const {
    if (rows.cols() != 2 || cols.cols() != 2) {
        throw std::invalid_argument("constrained_se: expects 2D inputs");
    }
    const Mat phi_r = features(rows);
    const Vec s = spectral_weights();
    if (rows.rows() == cols.rows() && rows.isApprox(cols)) {
        return phi_r * s.asDiagonal() * phi_r.transpose();
    }
    const Mat phi_c = features(cols);
    return phi_r * s.asDiagonal() * phi_c.transpose();
}

std::vector<Mat> ConstrainedSeKernel::gram_gradients(const Mat& X) const {
    const Mat phi = features(X);
    const Vec s = spectral_weights();
    // dS/dlog(sigma^2) = S; dS/dlog(l) = S * (2 - l^2 lambda)
    Vec s_l(basis_->size());
    const double l2 = length_scale_ * length_scale_;
    for (int i = 0; i < basis_->size(); ++i) {
        s_l[i] = s[i] * (2.0 - l2 * basis_->eigenvalues[i]);
    }
    std::vector<Mat> grads;
    grads.push_back(phi * s.asDiagonal() * phi.transpose());
    grads.push_back(phi * s_l.asDiagonal() * phi.transpose());
    return grads;
}

KernelPtr wrap_as_kernel(std::shared_ptr<const ReducedRankBasis> basis,
                         const SeParams& params) {
    params.validate();
    if (params.length_scales.size() != 1) {
        throw std::invalid_argument("wrap_as_kernel: single isotropic length scale expected");
    }
    auto core = std::make_shared<ConstrainedSeKernel>(std::move(basis),
                                                      params.signal_variance,
                                                      params.length_scales[0]);
    if (params.noise_variance <= 0.0) return core;
    auto noise = std::make_shared<WhiteNoiseKernel>(params.noise_variance, 2);
    return combine_sum({core, noise});
}

} // namespace pigp
