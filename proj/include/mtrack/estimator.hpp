#pragma once

#include "mtrack/common.hpp"
#include "mtrack/markov.hpp"

#include <filesystem>

namespace mtrack {

/// Input-disturbance covariance W (m x m, PSD) and sensor-noise covariance V (p x p, PD).
struct NoiseModel {
    Matrix W;
    Matrix V;

    static NoiseModel scaled_identity(Index m, Index p, double w, double v);
    void validate() const;
};

enum class CovarianceForm {
    // P = W - W T'(V + T W T')^{-1} T W; valid for singular (even zero) W.
    Information,
    // P = (W^{-1} + T' V^{-1} T)^{-1} as usually printed; needs W positive definite.
    Printed,
};

struct EstimatorOptions {
    CovarianceForm form = CovarianceForm::Information;
    bool keep_covariance = false; // store P_k (memory grows as N^3)
};

/// Gains of the output-space predictor
///   xbar_k = [-F_k I] xbar_{k-1} + B_k du_{k-1} + F_k y_{k-1},   k in [1, N].
///
/// The disturbance block layout follows the data form: M_k has N-k+1 block rows,
/// row i holding M_hat_{i+2} .. M_hat_{i+k+1}, which telescopes with length(xbar_k).
class EstimatorSchedule {
public:
    EstimatorSchedule() = default;
    EstimatorSchedule(Index N, Index p, Index m, BlockList F, BlockList B, BlockList P = {});

    Index horizon() const { return N_; }
    Index outputs() const { return p_; }
    Index inputs() const { return m_; }

    const Matrix& F(Index k) const; // (N-k+1)p x p
    const Matrix& B(Index k) const; // (N-k+1)p x m
    const Matrix& P(Index k) const; // km x km, only with keep_covariance
    bool has_covariance() const { return !P_.empty(); }

private:
    Index N_ = 0, p_ = 0, m_ = 0;
    BlockList F_, B_, P_; // index k-1
};

// Data-form building blocks for step k (1 <= k <= N).
Matrix build_disturbance_hankel(const MarkovSequence& markov, Index N, Index k); // M_k
Matrix build_disturbance_row(const MarkovSequence& markov, Index k);             // N_k = [M_1 .. M_k]
Matrix build_disturbance_toeplitz(const MarkovSequence& markov, Index k);        // T_{k-1}, upper block Toeplitz
Matrix build_input_column(const MarkovSequence& markov, Index N, Index k);       // B_k = [H_1; ..; H_{N-k+1}]

/// P_k for a single step, in either algebraic form.
Matrix estimator_covariance(const MarkovSequence& markov, const NoiseModel& noise, Index k,
                            CovarianceForm form = CovarianceForm::Information);

EstimatorSchedule build_estimator_schedule(const MarkovSequence& markov, const NoiseModel& noise, Index N,
                                           const EstimatorOptions& options = {});

struct EstimatorState {
    Index k = 0;
    Vector xbar; // length (N-k+1)p

    /// xbar_0 = 0.
    static EstimatorState initial(Index N, Index p);
};

/// Advances xbar_{k-1} to xbar_k using du_{k-1} and the measurement y_{k-1}.
EstimatorState estimator_step(const EstimatorSchedule& schedule, const EstimatorState& state, const Vector& du_prev,
                              const Vector& y_prev);

// F_###.csv (k = 1..N) beside a manifest.
void write_estimator(const EstimatorSchedule& schedule, const std::filesystem::path& dir);

} // namespace mtrack
