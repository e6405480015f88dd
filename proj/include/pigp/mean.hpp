#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace pigp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Prior mean over inputs. Zero, or affine in a slice of the input columns.
/// Fitted once by least squares before hyperparameter optimization, then
/// held fixed.
class MeanFunction {
public:
    virtual ~MeanFunction() = default;
    virtual Vec eval(const Mat& X) const = 0;
    virtual std::string name() const = 0;
};

using MeanPtr = std::shared_ptr<const MeanFunction>;

class ZeroMean : public MeanFunction {
public:
    Vec eval(const Mat& X) const override { return Vec::Zero(X.rows()); }
    std::string name() const override { return "zero"; }
};

class LinearMean : public MeanFunction {
public:
    LinearMean(Vec weights, double intercept, std::vector<int> covariate_slice);

    Vec eval(const Mat& X) const override;
    std::string name() const override { return "linear"; }

    const Vec& weights() const { return weights_; }
    double intercept() const { return intercept_; }
    const std::vector<int>& covariate_slice() const { return covariate_slice_; }

private:
    Vec weights_;
    double intercept_;
    std::vector<int> covariate_slice_;
};

/// Ordinary least-squares affine fit of y against the given input columns.
MeanPtr fit_linear_mean(const Mat& X, const Vec& y, const std::vector<int>& covariate_slice);

} // namespace pigp
