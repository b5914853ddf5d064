#pragma once

#include "mtrack/blackbox.hpp"
#include "mtrack/estimator.hpp"
#include "mtrack/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace mtrack {

/// Per-step record of a closed-loop run over k = 0..N.
struct ClosedLoopTrace {
    VectorList u;    // applied input
    VectorList du;   // u_k - u_{k-1}
    VectorList y;    // measurement (including sensor noise when injected)
    VectorList r;    // reference
    VectorList e;    // r_k - y_k
    VectorList xbar; // predictor state used to compute du_k

    Index steps() const { return static_cast<Index>(u.size()); }
    std::vector<double> xbar_norms() const;
};

/// Pre-drawn w_k ~ N(0, W) and v_k ~ N(0, V) so several controllers can share them.
struct NoiseRealization {
    VectorList w;
    VectorList v;

    static NoiseRealization sample(const NoiseModel& noise, Index N, std::uint64_t seed);
};

/// u_0 = 0; for k >= 1 the predictor is advanced with (du_{k-1}, y_{k-1}) and only the
/// leading block of K_k (r_{k:N} - xbar_k) is applied. The plant must be at rest.
ClosedLoopTrace run_closed_loop(BlackBox& plant, const GainSchedule& gains, const EstimatorSchedule& estimator,
                                const VectorList& reference, const NoiseRealization* noise = nullptr);

ClosedLoopTrace run_closed_loop(BlackBox& plant, const GainSchedule& gains, const EstimatorSchedule& estimator,
                                const VectorList& reference, const std::optional<NoiseModel>& inject,
                                std::uint64_t seed);

/// Largest |du_k - leading_rows(K_k)(r_{k:N} - xbar_k)| over k >= 1, recomputed from the trace.
double max_increment_residual(const ClosedLoopTrace& trace, const GainSchedule& gains);

/// One row per step: k, u[i], du[i], y[i], r[i], e[i], xbar_norm.
void write_trace_csv(const ClosedLoopTrace& trace, const std::filesystem::path& path);

} // namespace mtrack
