#pragma once

#include "mtrack/blackbox.hpp"
#include "mtrack/markov.hpp"

#include <cstdint>

namespace mtrack {

/// Cross-correlation estimate H_i = (1/S) sum_k y_{k+i} u_k^T (i >= 1; H_0 = 0) under a unit-covariance
/// white-noise input (scaled by `amplitude`, and the estimate rescaled accordingly).
/// The plant must be at rest. A dedicated disturbance port is excited with an
/// independent white sequence in the same run; otherwise M = H.
MarkovSequence estimate_markov_whitenoise(BlackBox& plant, Index count, Index samples, std::uint64_t seed,
                                          double amplitude = 1.0);

struct ImpulseOptions {
    double amplitude = 1.0;
    // Central difference of +/- amplitude impulses instead of subtracting the free response.
    bool symmetric = false;
};

/// One impulse experiment per input channel (and per disturbance channel when the plant
/// has a separate port), resetting the plant in between. Exact for noise-free LTI plants.
MarkovSequence estimate_markov_impulse(BlackBox& plant, Index count, const ImpulseOptions& options = {});

} // namespace mtrack
