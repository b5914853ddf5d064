#include "mtrack/estimator.hpp"

#include "mtrack/nested_cholesky.hpp"
#include "mtrack/textio.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>

namespace mtrack {

namespace {

// kron(I_k, W) * X, with X having k*W.cols() rows.
Matrix block_diag_times(const Matrix& W, Index k, const Matrix& X) {
    const Index w = W.rows();
    Matrix out(k * w, X.cols());
    for (Index i = 0; i < k; ++i) out.middleRows(i * w, w).noalias() = W * X.middleRows(i * W.cols(), W.cols());
    return out;
}

Matrix block_diag(const Matrix& W, Index k) {
    Matrix out = Matrix::Zero(k * W.rows(), k * W.cols());
    for (Index i = 0; i < k; ++i) out.block(i * W.rows(), i * W.cols(), W.rows(), W.cols()) = W;
    return out;
}

void check_step(Index N, Index k, const char* who) {
    if (k < 1 || k > N)
        throw DimensionError(std::string(who) + ": step k=" + std::to_string(k) + " outside [1, N=" + std::to_string(N) + "]");
}

Matrix spd_right_solve(const Matrix& lhs_transposed_rhs, const Matrix& spd) {
    // X * spd = rhs  <=>  spd * X' = rhs'
    Eigen::LLT<Matrix> llt(spd);
    if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance V + N P N' is not positive definite");
    return llt.solve(lhs_transposed_rhs.transpose()).transpose();
}

} // namespace

NoiseModel NoiseModel::scaled_identity(Index m, Index p, double w, double v) {
    return {w * Matrix::Identity(m, m), v * Matrix::Identity(p, p)};
}

void NoiseModel::validate() const {
    if (W.rows() != W.cols() || !is_symmetric(W)) throw Error("W must be a symmetric square matrix");
    if (V.rows() != V.cols() || !is_symmetric(V)) throw Error("V must be a symmetric square matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
    if (W.size() > 0 && es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, W.cwiseAbs().maxCoeff()))
        throw Error("W must be positive semidefinite");
    Eigen::LLT<Matrix> llt(V);
    if (llt.info() != Eigen::Success) throw Error("V must be positive definite");
}

EstimatorSchedule::EstimatorSchedule(Index N, Index p, Index m, BlockList F, BlockList B, BlockList P)
    : N_(N), p_(p), m_(m), F_(std::move(F)), B_(std::move(B)), P_(std::move(P)) {
    if (static_cast<Index>(F_.size()) != N_ || static_cast<Index>(B_.size()) != N_)
        throw DimensionError("EstimatorSchedule: expected " + std::to_string(N_) + " entries");
    if (!P_.empty() && static_cast<Index>(P_.size()) != N_) throw DimensionError("EstimatorSchedule: covariance list length");
    for (Index k = 1; k <= N_; ++k) {
        require_shape(F_[static_cast<std::size_t>(k - 1)], (N_ - k + 1) * p_, p_, "F_" + std::to_string(k));
        require_shape(B_[static_cast<std::size_t>(k - 1)], (N_ - k + 1) * p_, m_, "B_" + std::to_string(k));
    }
}

const Matrix& EstimatorSchedule::F(Index k) const {
    check_step(N_, k, "EstimatorSchedule::F");
    return F_[static_cast<std::size_t>(k - 1)];
}

const Matrix& EstimatorSchedule::B(Index k) const {
    check_step(N_, k, "EstimatorSchedule::B");
    return B_[static_cast<std::size_t>(k - 1)];
}

const Matrix& EstimatorSchedule::P(Index k) const {
    check_step(N_, k, "EstimatorSchedule::P");
    if (P_.empty()) throw Error("EstimatorSchedule: covariances were not kept (EstimatorOptions::keep_covariance)");
    return P_[static_cast<std::size_t>(k - 1)];
}

Matrix build_disturbance_hankel(const MarkovSequence& markov, Index N, Index k) {
    check_step(N, k, "build_disturbance_hankel");
    require_markov_lags(markov, N + 1, "build_disturbance_hankel");
    const Index p = markov.p, m = markov.m, rows = N - k + 1;
    Matrix Mk(rows * p, k * m);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < k; ++j) Mk.block(i * p, j * m, p, m) = markov.M_hat[static_cast<std::size_t>(i + j + 2)];
    return Mk;
}

Matrix build_disturbance_row(const MarkovSequence& markov, Index k) {
    if (k < 1) throw DimensionError("build_disturbance_row: k must be >= 1");
    require_markov_lags(markov, k, "build_disturbance_row");
    Matrix Nk(markov.p, k * markov.m);
    for (Index j = 0; j < k; ++j) Nk.middleCols(j * markov.m, markov.m) = markov.M_hat[static_cast<std::size_t>(j + 1)];
    return Nk;
}

Matrix build_disturbance_toeplitz(const MarkovSequence& markov, Index k) {
    if (k < 1) throw DimensionError("build_disturbance_toeplitz: k must be >= 1");
    require_markov_lags(markov, k - 1, "build_disturbance_toeplitz");
    const Index p = markov.p, m = markov.m;
    Matrix T = Matrix::Zero(k * p, k * m);
    for (Index i = 0; i < k; ++i)
        for (Index j = i; j < k; ++j) T.block(i * p, j * m, p, m) = markov.M_hat[static_cast<std::size_t>(j - i)];
    return T;
}

Matrix build_input_column(const MarkovSequence& markov, Index N, Index k) {
    check_step(N, k, "build_input_column");
    require_markov_lags(markov, N - k + 1, "build_input_column");
    const Index rows = N - k + 1;
    Matrix Bk(rows * markov.p, markov.m);
    for (Index i = 0; i < rows; ++i) Bk.middleRows(i * markov.p, markov.p) = markov.H_hat[static_cast<std::size_t>(i + 1)];
    return Bk;
}

Matrix estimator_covariance(const MarkovSequence& markov, const NoiseModel& noise, Index k, CovarianceForm form) {
    noise.validate();
    const Matrix T = build_disturbance_toeplitz(markov, k);
    const Matrix Wblk = block_diag(noise.W, k);
    const Matrix Vblk = block_diag(noise.V, k);
    if (form == CovarianceForm::Printed) {
        Eigen::LLT<Matrix> wl(Wblk);
        if (wl.info() != Eigen::Success) {
            throw NumericalError("W is singular: the printed covariance form needs W positive definite; "
                                 "regularize W or use the information form");
        }
        const Matrix Winv = wl.solve(Matrix::Identity(Wblk.rows(), Wblk.cols()));
        const Matrix VinvT = Vblk.llt().solve(T);
        Matrix info = Winv + T.transpose() * VinvT;
        info = 0.5 * (info + info.transpose()).eval();
        Eigen::LLT<Matrix> il(info);
        if (il.info() != Eigen::Success) throw NumericalError("information matrix is not positive definite");
        return il.solve(Matrix::Identity(info.rows(), info.cols()));
    }
    const Matrix WT = Wblk * T.transpose();
    Matrix S = Vblk + T * WT;
    S = 0.5 * (S + S.transpose()).eval();
    Matrix P = Wblk - WT * S.llt().solve(WT.transpose());
    return 0.5 * (P + P.transpose());
}

EstimatorSchedule build_estimator_schedule(const MarkovSequence& markov, const NoiseModel& noise, Index N,
                                           const EstimatorOptions& options) {
    noise.validate();
    if (N < 0) throw DimensionError("build_estimator_schedule: N must be >= 0");
    const Index p = markov.p, m = markov.m;
    require_shape(noise.W, m, m, "W");
    require_shape(noise.V, p, p, "V");
    if (N == 0) return EstimatorSchedule(0, p, m, {}, {});
    require_markov_lags(markov, N + 1, "build_estimator_schedule");

    BlockList F, B, P;
    F.reserve(static_cast<std::size_t>(N));
    B.reserve(static_cast<std::size_t>(N));

    auto finish = [&](Index k, const Matrix& PN) {
        const Matrix Nk = build_disturbance_row(markov, k);
        Matrix innovation = noise.V + Nk * PN;
        innovation = 0.5 * (innovation + innovation.transpose()).eval();
        F.push_back(spd_right_solve(build_disturbance_hankel(markov, N, k) * PN, innovation));
        B.push_back(build_input_column(markov, N, k));
    };

    if (options.form == CovarianceForm::Printed) {
        for (Index k = 1; k <= N; ++k) {
            Matrix Pk = estimator_covariance(markov, noise, k, CovarianceForm::Printed);
            finish(k, Pk * build_disturbance_row(markov, k).transpose());
            if (options.keep_covariance) P.push_back(std::move(Pk));
        }
        return EstimatorSchedule(N, p, m, std::move(F), std::move(B), std::move(P));
    }

    // T_{k-1} is the trailing k-block principal part of T_{N-1}; since T is upper
    // triangular, S_k = V_blk + T_{k-1} W_blk T_{k-1}' is likewise trailing in S_N.
    const Matrix Tbig = build_disturbance_toeplitz(markov, N);
    const Matrix WTbig = block_diag_times(noise.W, N, Tbig.transpose()); // W_blk T'
    Matrix Sbig = Tbig * WTbig;
    for (Index i = 0; i < N; ++i) Sbig.block(i * p, i * p, p, p) += noise.V;
    Sbig = 0.5 * (Sbig + Sbig.transpose()).eval();
    const NestedCholesky factor(Sbig, "V_blk + T W_blk T'");

    for (Index k = 1; k <= N; ++k) {
        const auto Tk = Tbig.bottomRightCorner(k * p, k * m);
        const auto WTk = WTbig.bottomRightCorner(k * m, k * p);
        const Matrix WNt = block_diag_times(noise.W, k, build_disturbance_row(markov, k).transpose());
        const Matrix X = factor.solve_trailing(k * p, Tk * WNt);
        finish(k, WNt - WTk * X);
        if (options.keep_covariance) {
            Matrix Pk = block_diag(noise.W, k) - WTk * factor.solve_trailing(k * p, WTk.transpose());
            P.push_back(0.5 * (Pk + Pk.transpose()));
        }
    }
    return EstimatorSchedule(N, p, m, std::move(F), std::move(B), std::move(P));
}

EstimatorState EstimatorState::initial(Index N, Index p) { return {0, Vector::Zero((N + 1) * p)}; }

EstimatorState estimator_step(const EstimatorSchedule& schedule, const EstimatorState& state, const Vector& du_prev,
                              const Vector& y_prev) {
    const Index k = state.k + 1;
    const Index N = schedule.horizon(), p = schedule.outputs();
    if (k > N) throw DimensionError("estimator_step: already at the end of the horizon");
    require_length(state.xbar, (N - k + 2) * p, "estimator_step: xbar_" + std::to_string(k - 1));
    require_length(du_prev, schedule.inputs(), "estimator_step: du");
    require_length(y_prev, p, "estimator_step: y");
    const Index len = (N - k + 1) * p;
    EstimatorState next{k, state.xbar.tail(len)};
    next.xbar.noalias() += schedule.F(k) * (y_prev - state.xbar.head(p));
    next.xbar.noalias() += schedule.B(k) * du_prev;
    return next;
}

void write_estimator(const EstimatorSchedule& schedule, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (Index k = 1; k <= schedule.horizon(); ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "F_%03ld.csv", static_cast<long>(k));
        textio::write_matrix_csv(dir / buf, schedule.F(k));
    }
    textio::write_manifest(dir / "manifest.txt", {{"N", std::to_string(schedule.horizon())},
                                                  {"p", std::to_string(schedule.outputs())},
                                                  {"m", std::to_string(schedule.inputs())}});
}

} // namespace mtrack
