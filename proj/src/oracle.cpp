#include "mtrack/oracle.hpp"

namespace mtrack::oracle {

namespace {

// C_hat A_hat^j X for j = 0..count-1, in a list.
BlockList power_products(const AugmentedSystem& aug, const Matrix& X, Index count) {
    BlockList out;
    Matrix AX = X;
    for (Index j = 0; j < count; ++j) {
        out.push_back(aug.C_hat * AX);
        AX = aug.A_hat * AX;
    }
    return out;
}

Matrix observability(const AugmentedSystem& aug, Index blocks) {
    const Index p = aug.C_hat.rows();
    Matrix O(blocks * p, aug.A_hat.cols());
    Matrix CA = aug.C_hat;
    for (Index i = 0; i < blocks; ++i) {
        O.middleRows(i * p, p) = CA;
        CA = CA * aug.A_hat;
    }
    return O;
}

Matrix repeat_diag(const Matrix& stage, const Matrix& terminal, Index len) {
    const Index s = stage.rows();
    Matrix out = Matrix::Zero(len * s, len * s);
    for (Index i = 0; i < len; ++i) out.block(i * s, i * s, s, s) = i + 1 < len ? stage : terminal;
    return out;
}

} // namespace

BlockList model_gains(const StateSpace& sys, const CostWeights& weights, Index N) {
    const AugmentedSystem aug = augment(sys);
    const Index p = sys.outputs(), m = sys.inputs();
    const BlockList CAB = power_products(aug, aug.B_hat, N + 1); // C A^j B
    BlockList gains;
    for (Index k = 0; k <= N; ++k) {
        const Index len = N - k + 1;
        Matrix Hbar = Matrix::Zero(len * p, len * m);
        for (Index i = 1; i < len; ++i)
            for (Index j = 0; j < i; ++j) Hbar.block(i * p, j * m, p, m) = CAB[static_cast<std::size_t>(i - j - 1)];
        const Matrix Qbar = repeat_diag(weights.Q, weights.S, len);
        const Matrix Rbar = repeat_diag(weights.R, weights.T, len);
        const Matrix normal = Hbar.transpose() * Qbar * Hbar + Rbar;
        gains.push_back(normal.fullPivLu().inverse() * (Qbar * Hbar).transpose());
    }
    return gains;
}

ModelEstimator model_estimator(const StateSpace& sys, const NoiseModel& noise, Index N) {
    const AugmentedSystem aug = augment(sys);
    const Index p = sys.outputs(), md = sys.disturbances();
    const BlockList CAD = power_products(aug, aug.D_hat, N + 1); // C A^j D
    ModelEstimator out;
    for (Index k = 1; k <= N; ++k) {
        // D_{k-1} = [D, AD, .., A^{k-1} D]
        Matrix Dk(aug.A_hat.rows(), k * md);
        Matrix AD = aug.D_hat;
        for (Index j = 0; j < k; ++j) {
            Dk.middleCols(j * md, md) = AD;
            AD = aug.A_hat * AD;
        }
        // T_{k-1}: zero diagonal, block (i, j) = C A^{j-i-1} D above it.
        Matrix T = Matrix::Zero(k * p, k * md);
        for (Index i = 0; i < k; ++i)
            for (Index j = i + 1; j < k; ++j) T.block(i * p, j * md, p, md) = CAD[static_cast<std::size_t>(j - i - 1)];
        const Matrix Wblk = repeat_diag(noise.W, noise.W, k);
        const Matrix Vblk = repeat_diag(noise.V, noise.V, k);
        const Matrix P = (Wblk.inverse() + T.transpose() * Vblk.inverse() * T).inverse();
        const Matrix Y = Dk * P * Dk.transpose();
        const Matrix L = aug.A_hat * Y * aug.C_hat.transpose() * (noise.V + aug.C_hat * Y * aug.C_hat.transpose()).inverse();
        const Matrix O = observability(aug, N - k + 1);
        out.F.push_back(O * L);
        out.B.push_back(O * aug.B_hat);
        out.L.push_back(L);
        out.P.push_back(P);
    }
    return out;
}

ClosedLoopTrace model_closed_loop(const StateSpace& sys, const CostWeights& weights, const NoiseModel& noise,
                                  const VectorList& reference, const NoiseRealization* realization) {
    const auto N = static_cast<Index>(reference.size()) - 1;
    const Index m = sys.inputs(), p = sys.outputs();
    const AugmentedSystem aug = augment(sys);
    const BlockList K = model_gains(sys, weights, N);
    const ModelEstimator est = model_estimator(sys, noise, N);

    ClosedLoopTrace trace;
    Vector x = Vector::Zero(sys.states());
    Vector xc = Vector::Zero(aug.A_hat.rows()); // estimate of [x_k; u_{k-1}]
    Vector u = Vector::Zero(m);
    for (Index k = 0; k <= N; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        Vector du = Vector::Zero(m);
        Vector xbar = Vector::Zero((N - k + 1) * p);
        if (k >= 1) {
            const Vector& y_prev = trace.y.back();
            xc = aug.A_hat * xc + aug.B_hat * trace.du.back() + est.L[ks - 1] * (y_prev - aug.C_hat * xc);
            xbar = observability(aug, N - k + 1) * xc;
            Vector rstack((N - k + 1) * p);
            for (Index i = k; i <= N; ++i) rstack.segment((i - k) * p, p) = reference[static_cast<std::size_t>(i)];
            du = (K[ks] * (rstack - xbar)).head(m);
        }
        u += du;
        Vector y = sys.C() * x;
        if (realization) y += realization->v[ks];
        x = sys.A() * x + sys.B() * u;
        if (realization) x += sys.D() * realization->w[ks];

        trace.u.push_back(u);
        trace.du.push_back(du);
        trace.e.push_back(reference[ks] - y);
        trace.y.push_back(y);
        trace.r.push_back(reference[ks]);
        trace.xbar.push_back(xbar);
    }
    return trace;
}

} // namespace mtrack::oracle
