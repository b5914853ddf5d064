#pragma once

#include "mtrack/common.hpp"
#include "mtrack/markov.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>

namespace mtrack {

/// Discrete LTI plant
///   x_{k+1} = A x_k + B u_k + D w_k
///   y_k     = C x_k (+ v_k at the measurement)
/// D defaults to B, i.e. the disturbance enters through the input channel.
class StateSpace {
public:
    StateSpace() = default;
    StateSpace(Matrix A, Matrix B, Matrix C, std::optional<Matrix> D = std::nullopt);

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    const Matrix& C() const { return C_; }
    const Matrix& D() const { return D_; }

    Index states() const { return A_.rows(); }
    Index inputs() const { return B_.cols(); }
    Index outputs() const { return C_.rows(); }
    Index disturbances() const { return D_.cols(); }

    double spectral_radius() const;

private:
    Matrix A_, B_, C_, D_;
};

/// Incremental form with state [x_k; u_{k-1}] driven by du_k = u_k - u_{k-1}.
struct AugmentedSystem {
    Matrix A_hat; // [[A, B], [0, I]]
    Matrix B_hat; // [B; I]
    Matrix C_hat; // [C, 0]
    Matrix D_hat; // [D; 0]
};

AugmentedSystem augment(const StateSpace& sys);

/// Per-step signals over k = 0..steps-1. Empty w or v means zero.
struct SignalTrace {
    VectorList u;
    VectorList w;
    VectorList y;
    VectorList v;

    Index steps() const { return static_cast<Index>(u.size()); }
};

/// Runs the recursion from x0. y_k is read before u_k acts (one-sample delay).
SignalTrace simulate(const StateSpace& sys, const Vector& x0, const SignalTrace& inputs);

/// H_0 = M_0 = 0, H_i = C A^{i-1} B, M_i = C A^{i-1} D for i in [1, count].
MarkovSequence markov_from_model(const StateSpace& sys, Index count);

/// Random stable plant with eigenvalues of modulus <= radius and a well-conditioned
/// eigenbasis. Used by the oracle-equivalence suites.
StateSpace random_stable_system(Index n, Index m, Index p, std::uint64_t seed, double radius = 0.9);

// Plain-text format: header "n m p", then rows of A (n), B (n), C (p) and optionally D (n).
// Lines starting with '#' are ignored.
StateSpace read_state_space(std::istream& in);
StateSpace read_state_space(const std::string& path);
void write_state_space(std::ostream& out, const StateSpace& sys);

} // namespace mtrack
