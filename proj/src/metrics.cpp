#include "pigp/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "pigp/errors.hpp"

namespace pigp {

double metric_nmse(const Vec& y_true, const Vec& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.size() < 2) {
        throw std::invalid_argument("metric_nmse: equal lengths >= 2 required");
    }
    const double var = (y_true.array() - y_true.mean()).square().mean();
    if (!(var > 0.0)) {
        throw DegenerateDataError("metric_nmse: zero-variance truth");
    }
    return (y_true - y_pred).squaredNorm() / (static_cast<double>(y_true.size()) * var);
}

double metric_log_loss(const Vec& y_true, const Vec& pred_mean, const Vec& pred_var) {
    if (y_true.size() != pred_mean.size() || y_true.size() != pred_var.size() ||
        y_true.size() < 1) {
        throw std::invalid_argument("metric_log_loss: length mismatch");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        if (!(pred_var[i] > 0.0)) {
            throw std::invalid_argument("metric_log_loss: predictive variance must be > 0");
        }
        const double r = y_true[i] - pred_mean[i];
        total += 0.5 * std::log(2.0 * M_PI * pred_var[i]) + r * r / (2.0 * pred_var[i]);
    }
    return total / static_cast<double>(y_true.size());
}

} // namespace pigp
