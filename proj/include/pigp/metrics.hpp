#pragma once

#include <Eigen/Dense>

namespace pigp {

using Vec = Eigen::VectorXd;

/// Normalized mean squared error: sum((y - yhat)^2) / (N * var(y)).
/// Predicting mean(y) everywhere scores exactly 1.
double metric_nmse(const Vec& y_true, const Vec& y_pred);

/// Mean Gaussian negative log predictive density:
///   mean_i [ 0.5 log(2 pi v_i) + (y_i - mu_i)^2 / (2 v_i) ].
/// Reported with this sign convention (lower is better).
double metric_log_loss(const Vec& y_true, const Vec& pred_mean, const Vec& pred_var);

} // namespace pigp
