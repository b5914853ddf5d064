#pragma once

// Model-based reference route. Everything here is computed from the augmented
// state-space matrices (powers of A_hat, explicit inverses) and shares no code with
// the Markov-data path in tracking/estimator/closed_loop beyond the plain data types.

#include "mtrack/closed_loop.hpp"
#include "mtrack/lti.hpp"

namespace mtrack::oracle {

/// K_k for k = 0..N with Hbar built from C_hat A_hat^i B_hat.
BlockList model_gains(const StateSpace& sys, const CostWeights& weights, Index N);

struct ModelEstimator {
    BlockList F; // index k-1: [C; CA; ..; CA^{N-k}] L_{k-1}
    BlockList B; // index k-1: [CB; ..; CA^{N-k}B]
    BlockList L; // index k-1: state-space predictor gain L_{k-1}
    BlockList P; // index k-1
};

/// Predictor gains from the state-space formulas; W must be positive definite.
ModelEstimator model_estimator(const StateSpace& sys, const NoiseModel& noise, Index N);

/// Closed loop with a state-space predictor x_check and model gains, simulating the
/// plant internally from rest.
ClosedLoopTrace model_closed_loop(const StateSpace& sys, const CostWeights& weights, const NoiseModel& noise,
                                  const VectorList& reference, const NoiseRealization* realization = nullptr);

} // namespace mtrack::oracle
