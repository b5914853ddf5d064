#pragma once

#include "mtrack/common.hpp"
#include "mtrack/markov.hpp"

#include <filesystem>
#include <utility>

namespace mtrack {

struct ClosedLoopTrace;

/// Stage/terminal weights of the tracking cost
///   J = 1/2 e_N' S e_N + 1/2 sum_{k<N} (e_k' Q e_k + du_k' R du_k) + 1/2 du_N' T du_N.
struct CostWeights {
    Matrix Q; // p x p, PSD
    Matrix S; // p x p, PSD
    Matrix R; // m x m, PD
    Matrix T; // m x m, PD

    /// Q = S = I_p, R = T = rho I_m.
    static CostWeights scaled_identity(Index p, Index m, double rho, double q = 1.0, double s = 1.0);

    Index outputs() const { return Q.rows(); }
    Index inputs() const { return R.rows(); }

    /// Throws unless Q, S are symmetric PSD and R, T symmetric PD.
    void validate() const;
};

struct TrackingProblem {
    Index N = 0;
    VectorList reference; // r_0..r_N; may be empty when only gains are wanted
    CostWeights weights;
    MarkovSequence markov; // augmented

    void validate() const;
};

enum class GainStorage {
    Full,            // every K_k kept whole
    LeadingBlockRow, // only the m rows that produce du_k; enough to run the loop
};

/// Batch gains K_k for k in [0, N]; K_k maps the stacked error over [k, N] to the
/// stacked increments over [k, N].
class GainSchedule {
public:
    GainSchedule() = default;
    GainSchedule(Index N, Index p, Index m, GainStorage storage, BlockList gains);

    Index horizon() const { return N_; }
    Index outputs() const { return p_; }
    Index inputs() const { return m_; }
    GainStorage storage() const { return storage_; }

    /// Stored matrix for step k (whole K_k or its leading block row).
    const Matrix& gain(Index k) const;
    /// The m rows of K_k that produce du_k.
    Eigen::Block<const Matrix> leading_rows(Index k) const;
    /// du_k = leading_rows(k) * stacked_error, stacked_error = r_{k:N} - xbar_k.
    Vector increment(Index k, const Vector& stacked_error) const;

private:
    Index N_ = 0, p_ = 0, m_ = 0;
    GainStorage storage_ = GainStorage::Full;
    BlockList K_;
};

/// Block lower-triangular Toeplitz operator over [k, N]: block (i, j) = H_hat_{i-j}.
Matrix build_hbar(const MarkovSequence& markov, Index N, Index k);

/// (Q_bar_k, R_bar_k): Q (resp. R) repeated N-k times followed by S (resp. T).
std::pair<Matrix, Matrix> build_weight_blocks(const CostWeights& weights, Index N, Index k);

/// K_k = (Hbar_k' Qbar_k Hbar_k + Rbar_k)^{-1} (Qbar_k Hbar_k)' for all k.
///
/// The normal matrix for step k is the trailing principal submatrix of the one for
/// k = 0, so a single reversed-order Cholesky factor serves every k.
GainSchedule synthesize_gains(const TrackingProblem& problem, GainStorage storage = GainStorage::Full);

double evaluate_cost(const ClosedLoopTrace& trace, const CostWeights& weights);

// Same layout as the Markov bundle: manifest.txt + K_###.csv.
void write_gains(const GainSchedule& gains, const std::filesystem::path& dir, double rho);
GainSchedule read_gains(const std::filesystem::path& dir);

} // namespace mtrack
