#include "mtrack/lti.hpp"

#include "mtrack/textio.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace mtrack {

StateSpace::StateSpace(Matrix A, Matrix B, Matrix C, std::optional<Matrix> D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(D ? std::move(*D) : B_) {
    if (A_.rows() == 0) throw DimensionError("StateSpace: A must have at least one state");
    if (A_.rows() != A_.cols()) throw DimensionError("StateSpace: A is " + shape_of(A_) + ", must be square");
    if (B_.rows() != A_.rows())
        throw DimensionError("StateSpace: B is " + shape_of(B_) + ", needs " + std::to_string(A_.rows()) + " rows");
    if (C_.cols() != A_.cols())
        throw DimensionError("StateSpace: C is " + shape_of(C_) + ", needs " + std::to_string(A_.cols()) + " cols");
    if (D_.rows() != A_.rows())
        throw DimensionError("StateSpace: D is " + shape_of(D_) + ", needs " + std::to_string(A_.rows()) + " rows");
    if (B_.cols() == 0 || C_.rows() == 0) throw DimensionError("StateSpace: needs at least one input and output");
}

double StateSpace::spectral_radius() const {
    Eigen::EigenSolver<Matrix> es(A_, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

AugmentedSystem augment(const StateSpace& sys) {
    const Index n = sys.states(), m = sys.inputs(), p = sys.outputs(), md = sys.disturbances();
    AugmentedSystem aug;
    aug.A_hat = Matrix::Zero(n + m, n + m);
    aug.A_hat.topLeftCorner(n, n) = sys.A();
    aug.A_hat.topRightCorner(n, m) = sys.B();
    aug.A_hat.bottomRightCorner(m, m).setIdentity();

    aug.B_hat = Matrix::Zero(n + m, m);
    aug.B_hat.topRows(n) = sys.B();
    aug.B_hat.bottomRows(m).setIdentity();

    aug.C_hat = Matrix::Zero(p, n + m);
    aug.C_hat.leftCols(n) = sys.C();

    aug.D_hat = Matrix::Zero(n + m, md);
    aug.D_hat.topRows(n) = sys.D();
    return aug;
}

SignalTrace simulate(const StateSpace& sys, const Vector& x0, const SignalTrace& inputs) {
    require_length(x0, sys.states(), "simulate: x0");
    const Index steps = inputs.steps();
    if (steps < 1) throw DimensionError("simulate: need at least one input sample");
    const bool has_w = !inputs.w.empty();
    const bool has_v = !inputs.v.empty();
    if (has_w && inputs.w.size() != inputs.u.size()) throw DimensionError("simulate: w length differs from u");
    if (has_v && inputs.v.size() != inputs.u.size()) throw DimensionError("simulate: v length differs from u");

    SignalTrace out = inputs;
    out.y.assign(static_cast<std::size_t>(steps), Vector());
    Vector x = x0;
    for (Index k = 0; k < steps; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        require_length(inputs.u[ku], sys.inputs(), "simulate: u_" + std::to_string(k));
        Vector y = sys.C() * x;
        if (has_v) {
            require_length(inputs.v[ku], sys.outputs(), "simulate: v_" + std::to_string(k));
            y += inputs.v[ku];
        }
        out.y[ku] = std::move(y);
        Vector next = sys.A() * x + sys.B() * inputs.u[ku];
        if (has_w) {
            require_length(inputs.w[ku], sys.disturbances(), "simulate: w_" + std::to_string(k));
            next += sys.D() * inputs.w[ku];
        }
        x = std::move(next);
    }
    return out;
}

MarkovSequence markov_from_model(const StateSpace& sys, Index count) {
    if (count < 1) throw DimensionError("markov_from_model: count must be >= 1");
    if (sys.disturbances() != sys.inputs())
        throw DimensionError("markov_from_model: disturbance width must equal input width");
    MarkovSequence seq;
    seq.p = sys.outputs();
    seq.m = sys.inputs();
    seq.H.reserve(static_cast<std::size_t>(count + 1));
    seq.M.reserve(static_cast<std::size_t>(count + 1));
    seq.H.push_back(Matrix::Zero(seq.p, seq.m));
    seq.M.push_back(Matrix::Zero(seq.p, seq.m));
    Matrix CA = sys.C(); // C A^{i-1}
    for (Index i = 1; i <= count; ++i) {
        seq.H.push_back(CA * sys.B());
        seq.M.push_back(CA * sys.D());
        CA = CA * sys.A();
    }
    return seq;
}

StateSpace random_stable_system(Index n, Index m, Index p, std::uint64_t seed, double radius) {
    if (n < 1 || m < 1 || p < 1) throw DimensionError("random_stable_system: dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Real block-diagonal Jordan form: 1x1 real poles and 2x2 rotation-scaling blocks.
    Matrix J = Matrix::Zero(n, n);
    for (Index i = 0; i < n;) {
        const double r = 0.05 + (radius - 0.05) * unit(rng);
        if (i + 1 < n && unit(rng) < 0.5) {
            const double phi = std::numbers::pi * unit(rng);
            J(i, i) = J(i + 1, i + 1) = r * std::cos(phi);
            J(i, i + 1) = r * std::sin(phi);
            J(i + 1, i) = -r * std::sin(phi);
            i += 2;
        } else {
            J(i, i) = unit(rng) < 0.5 ? r : -r;
            i += 1;
        }
    }

    auto gaussian = [&](Index r, Index c) {
        Matrix g(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j) g(i, j) = gauss(rng);
        return g;
    };
    // Orthogonal basis with bounded column scaling keeps cond(V) <= e.
    const Matrix Q = Eigen::HouseholderQR<Matrix>(gaussian(n, n)).householderQ();
    Vector scale(n);
    for (Index i = 0; i < n; ++i) scale(i) = std::exp(unit(rng) - 0.5);
    const Matrix V = Q * scale.asDiagonal();
    const Matrix A = V * J * V.inverse();
    return StateSpace(A, gaussian(n, m), gaussian(p, n));
}

StateSpace read_state_space(std::istream& in) {
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) values.push_back(textio::parse_double(tok));
    }
    if (values.size() < 3) throw Error("state-space file: missing 'n m p' header");
    const auto n = static_cast<Index>(values[0]);
    const auto m = static_cast<Index>(values[1]);
    const auto p = static_cast<Index>(values[2]);
    if (n < 1 || m < 1 || p < 1) throw DimensionError("state-space file: header dimensions must be positive");
    const auto base = static_cast<std::size_t>(n * n + n * m + p * n);
    const std::size_t have = values.size() - 3;
    const bool with_d = have == base + static_cast<std::size_t>(n * m);
    if (have != base && !with_d) {
        throw DimensionError("state-space file: expected " + std::to_string(base) + " or " +
                             std::to_string(base + static_cast<std::size_t>(n * m)) + " entries, found " +
                             std::to_string(have));
    }
    std::size_t at = 3;
    auto take = [&](Index r, Index c) {
        Matrix out(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j) out(i, j) = values[at++];
        return out;
    };
    Matrix A = take(n, n);
    Matrix B = take(n, m);
    Matrix C = take(p, n);
    std::optional<Matrix> D;
    if (with_d) D = take(n, m);
    return StateSpace(std::move(A), std::move(B), std::move(C), std::move(D));
}

StateSpace read_state_space(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_state_space(in);
}

void write_state_space(std::ostream& out, const StateSpace& sys) {
    out << sys.states() << ' ' << sys.inputs() << ' ' << sys.outputs() << '\n';
    auto dump = [&](const Matrix& M) {
        for (Index i = 0; i < M.rows(); ++i) {
            for (Index j = 0; j < M.cols(); ++j) out << (j ? " " : "") << textio::format_double(M(i, j));
            out << '\n';
        }
    };
    dump(sys.A());
    dump(sys.B());
    dump(sys.C());
    dump(sys.D());
}

} // namespace mtrack
