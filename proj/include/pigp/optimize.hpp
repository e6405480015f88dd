#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pigp/gp.hpp"
#include "pigp/kernel.hpp"
#include "pigp/mean.hpp"

namespace pigp {

/// Per-parameter box bounds in natural (not log) units.
struct Bounds {
    Vec lower;
    Vec upper;

    void validate() const;
};

struct OptimizationSpec {
    Bounds bounds;
    int n_starts = 4;
    int max_iterations = 200;
    double tolerance = 1e-8;   // relative LML improvement
    unsigned seed = 0;
};

struct StartTrace {
    Vec start_log_params;
    Vec final_log_params;
    double final_lml = 0.0;
    int iterations = 0;
    bool converged = false;
    bool failed = false;       // factorization failed at/near the start
};

struct OptimizationResult {
    KernelPtr best_kernel;
    Vec best_log_params;
    double best_lml = 0.0;
    std::vector<StartTrace> per_start_trace;
};

/// Maximize the log marginal likelihood over the kernel's log-parameters
/// with box bounds, multi-starting from a nested Halton sequence over the
/// log-bounds. Deterministic for fixed seed and inputs; ties between equal
/// final LMLs break to the lexicographically smallest log-parameter vector.
OptimizationResult optimize(const KernelPtr& kernel_family, const MeanPtr& mean,
                            const TrainingSet& data, const OptimizationSpec& spec);

/// Data-driven default bounds, keyed off the kernel's parameter names:
///   - length scales: [1e-2, 1e2] x median pairwise input distance
///   - variances / amplitudes: [1e-6, 1e2] x var(y) (amplitudes rescaled
///     by zeta * omega_n^3 at the centre of their boxes)
///   - natural frequencies: [2*pi/span, pi/dt_min] on the time column,
///     split into disjoint sub-ranges per mode for MDOF kernels
///   - damping ratios: [1e-3, 0.5]
Bounds default_bounds(const KernelPtr& kernel_family, const TrainingSet& data,
                      int time_column = 0);

} // namespace pigp
