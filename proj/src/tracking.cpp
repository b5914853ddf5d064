#include "mtrack/tracking.hpp"

#include "mtrack/closed_loop.hpp"
#include "mtrack/nested_cholesky.hpp"
#include "mtrack/textio.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>

namespace mtrack {

namespace {

void require_psd(const Matrix& W, const std::string& name, bool strict) {
    if (!is_symmetric(W)) throw Error(name + " must be symmetric");
    if (strict) {
        Eigen::LLT<Matrix> llt(W);
        if (llt.info() != Eigen::Success) throw Error(name + " must be positive definite");
        return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) throw Error(name + " must be positive semidefinite");
}

std::string gain_file(Index k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "K_%03ld.csv", static_cast<long>(k));
    return buf;
}

} // namespace

CostWeights CostWeights::scaled_identity(Index p, Index m, double rho, double q, double s) {
    return {q * Matrix::Identity(p, p), s * Matrix::Identity(p, p), rho * Matrix::Identity(m, m),
            rho * Matrix::Identity(m, m)};
}

void CostWeights::validate() const {
    const Index p = Q.rows(), m = R.rows();
    require_shape(Q, p, p, "Q");
    require_shape(S, p, p, "S");
    require_shape(R, m, m, "R");
    require_shape(T, m, m, "T");
    require_psd(Q, "Q", false);
    require_psd(S, "S", false);
    require_psd(R, "R", true);
    require_psd(T, "T", true);
}

void TrackingProblem::validate() const {
    if (N < 0) throw DimensionError("TrackingProblem: horizon must be >= 0");
    weights.validate();
    require_markov_lags(markov, N, "TrackingProblem");
    if (weights.outputs() != markov.p || weights.inputs() != markov.m) {
        throw DimensionError("TrackingProblem: weights are for p=" + std::to_string(weights.outputs()) +
                             ", m=" + std::to_string(weights.inputs()) + " but Markov blocks are " +
                             std::to_string(markov.p) + "x" + std::to_string(markov.m));
    }
    if (!reference.empty()) {
        if (static_cast<Index>(reference.size()) != N + 1)
            throw DimensionError("TrackingProblem: reference has " + std::to_string(reference.size()) +
                                 " samples, expected N+1 = " + std::to_string(N + 1));
        for (std::size_t k = 0; k < reference.size(); ++k) require_length(reference[k], markov.p, "r_" + std::to_string(k));
    }
}

GainSchedule::GainSchedule(Index N, Index p, Index m, GainStorage storage, BlockList gains)
    : N_(N), p_(p), m_(m), storage_(storage), K_(std::move(gains)) {
    if (static_cast<Index>(K_.size()) != N_ + 1)
        throw DimensionError("GainSchedule: expected " + std::to_string(N_ + 1) + " gains, got " + std::to_string(K_.size()));
    for (Index k = 0; k <= N_; ++k) {
        const Index len = N_ - k + 1;
        require_shape(K_[static_cast<std::size_t>(k)], storage_ == GainStorage::Full ? len * m_ : m_, len * p_,
                      "K_" + std::to_string(k));
    }
}

const Matrix& GainSchedule::gain(Index k) const {
    if (k < 0 || k > N_) throw DimensionError("GainSchedule: step " + std::to_string(k) + " outside [0, N]");
    return K_[static_cast<std::size_t>(k)];
}

Eigen::Block<const Matrix> GainSchedule::leading_rows(Index k) const { return gain(k).topRows(m_); }

Vector GainSchedule::increment(Index k, const Vector& stacked_error) const {
    require_length(stacked_error, (N_ - k + 1) * p_, "stacked error at step " + std::to_string(k));
    return leading_rows(k) * stacked_error;
}

Matrix build_hbar(const MarkovSequence& markov, Index N, Index k) {
    if (k < 0 || k > N) throw DimensionError("build_hbar: step k=" + std::to_string(k) + " outside [0, N=" + std::to_string(N) + "]");
    const Index len = N - k + 1;
    require_markov_lags(markov, len - 1, "build_hbar");
    const Index p = markov.p, m = markov.m;
    Matrix Hbar = Matrix::Zero(len * p, len * m);
    for (Index i = 0; i < len; ++i)
        for (Index j = 0; j <= i; ++j) Hbar.block(i * p, j * m, p, m) = markov.H_hat[static_cast<std::size_t>(i - j)];
    return Hbar;
}

std::pair<Matrix, Matrix> build_weight_blocks(const CostWeights& weights, Index N, Index k) {
    if (k < 0 || k > N) throw DimensionError("build_weight_blocks: step k outside [0, N]");
    const Index len = N - k + 1, p = weights.outputs(), m = weights.inputs();
    Matrix Qbar = Matrix::Zero(len * p, len * p);
    Matrix Rbar = Matrix::Zero(len * m, len * m);
    for (Index i = 0; i + 1 < len; ++i) {
        Qbar.block(i * p, i * p, p, p) = weights.Q;
        Rbar.block(i * m, i * m, m, m) = weights.R;
    }
    Qbar.bottomRightCorner(p, p) = weights.S;
    Rbar.bottomRightCorner(m, m) = weights.T;
    return {std::move(Qbar), std::move(Rbar)};
}

GainSchedule synthesize_gains(const TrackingProblem& problem, GainStorage storage) {
    problem.validate();
    const Index N = problem.N, p = problem.markov.p, m = problem.markov.m;
    const Matrix Hbar = build_hbar(problem.markov, N, 0);
    const auto [Qbar, Rbar] = build_weight_blocks(problem.weights, N, 0);

    // Qbar is block diagonal; apply it block-row by block-row.
    Matrix QH(Hbar.rows(), Hbar.cols());
    for (Index i = 0; i <= N; ++i) QH.middleRows(i * p, p).noalias() = Qbar.block(i * p, i * p, p, p) * Hbar.middleRows(i * p, p);

    Matrix G = Rbar;
    G.noalias() += Hbar.transpose() * QH;
    G = 0.5 * (G + G.transpose()).eval();
    const NestedCholesky factor(G, "normal matrix Hbar'QbarHbar + Rbar");

    BlockList gains;
    gains.reserve(static_cast<std::size_t>(N + 1));
    for (Index k = 0; k <= N; ++k) {
        const Index s = (N - k + 1) * m, sp = (N - k + 1) * p;
        const auto QH_k = QH.bottomRightCorner(sp, s); // Qbar_k Hbar_k
        if (storage == GainStorage::Full) {
            gains.push_back(factor.solve_trailing(s, QH_k.transpose()));
        } else {
            // Rows 0..m-1 of G_k^{-1} (symmetric), then times (Qbar_k Hbar_k)'.
            const Matrix Z = factor.solve_trailing(s, Matrix::Identity(s, m));
            gains.push_back((QH_k * Z).transpose());
        }
    }
    return GainSchedule(N, p, m, storage, std::move(gains));
}

double evaluate_cost(const ClosedLoopTrace& trace, const CostWeights& weights) {
    const Index steps = trace.steps();
    if (steps < 1) throw DimensionError("evaluate_cost: empty trace");
    if (static_cast<Index>(trace.du.size()) != steps || static_cast<Index>(trace.e.size()) != steps)
        throw DimensionError("evaluate_cost: trace columns have inconsistent lengths");
    const Index N = steps - 1;
    double J = 0.0;
    for (Index k = 0; k <= N; ++k) {
        const Vector& e = trace.e[static_cast<std::size_t>(k)];
        const Vector& du = trace.du[static_cast<std::size_t>(k)];
        require_length(e, weights.outputs(), "evaluate_cost: e_" + std::to_string(k));
        require_length(du, weights.inputs(), "evaluate_cost: du_" + std::to_string(k));
        const Matrix& We = k < N ? weights.Q : weights.S;
        const Matrix& Wu = k < N ? weights.R : weights.T;
        J += 0.5 * e.dot(We * e) + 0.5 * du.dot(Wu * du);
    }
    return J;
}

void write_gains(const GainSchedule& gains, const std::filesystem::path& dir, double rho) {
    std::filesystem::create_directories(dir);
    for (Index k = 0; k <= gains.horizon(); ++k) textio::write_matrix_csv(dir / gain_file(k), gains.gain(k));
    textio::write_manifest(dir / "manifest.txt",
                           {{"N", std::to_string(gains.horizon())},
                            {"p", std::to_string(gains.outputs())},
                            {"m", std::to_string(gains.inputs())},
                            {"rho", textio::format_double(rho)},
                            {"storage", gains.storage() == GainStorage::Full ? "full" : "leading_block_row"}});
}

GainSchedule read_gains(const std::filesystem::path& dir) {
    const auto manifest = textio::read_manifest(dir / "manifest.txt");
    auto field = [&](const char* key) -> const std::string& {
        auto it = manifest.find(key);
        if (it == manifest.end()) throw Error(dir.string() + "/manifest.txt: missing '" + key + "'");
        return it->second;
    };
    const Index N = std::stol(field("N")), p = std::stol(field("p")), m = std::stol(field("m"));
    const GainStorage storage = field("storage") == "full" ? GainStorage::Full : GainStorage::LeadingBlockRow;
    BlockList K;
    for (Index k = 0; k <= N; ++k) K.push_back(textio::read_matrix_csv(dir / gain_file(k)));
    return GainSchedule(N, p, m, storage, std::move(K));
}

} // namespace mtrack
