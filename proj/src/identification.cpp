#include "mtrack/identification.hpp"

#include <random>

namespace mtrack {

namespace {

Vector checked_step(BlackBox& plant, const Vector& u, const Vector& w, bool with_w, Index p, Index k) {
    Vector y = with_w ? plant.step(u, w) : plant.step(u);
    if (y.size() != p) {
        throw DimensionError(plant.id() + ": output at step " + std::to_string(k) + " has length " +
                             std::to_string(y.size()) + ", earlier steps had " + std::to_string(p));
    }
    if (!y.allFinite()) throw InstabilityError(plant.id() + ": non-finite output at step " + std::to_string(k));
    return y;
}

// Response over lags 0..count to a held-for-one-sample impulse `u0` on the input
// (or on the disturbance port when `on_port`).
Matrix impulse_response(BlackBox& plant, const Vector& pulse, bool on_port, Index count) {
    const Index m = plant.input_dim(), p = plant.output_dim();
    plant.reset();
    Matrix Y(p, count + 1);
    const Vector zero_u = Vector::Zero(m);
    const Vector zero_w = Vector::Zero(plant.disturbance_dim());
    for (Index k = 0; k <= count; ++k) {
        if (k == 0)
            Y.col(k) = on_port ? checked_step(plant, zero_u, pulse, true, p, k) : checked_step(plant, pulse, zero_w, false, p, k);
        else
            Y.col(k) = checked_step(plant, zero_u, zero_w, false, p, k);
    }
    return Y;
}

BlockList blocks_from_columns(const std::vector<Matrix>& per_channel, Index p, Index count) {
    const auto channels = static_cast<Index>(per_channel.size());
    BlockList out(static_cast<std::size_t>(count + 1), Matrix::Zero(p, channels));
    for (Index j = 0; j < channels; ++j)
        for (Index i = 0; i <= count; ++i) out[static_cast<std::size_t>(i)].col(j) = per_channel[static_cast<std::size_t>(j)].col(i);
    return out;
}

} // namespace

MarkovSequence estimate_markov_whitenoise(BlackBox& plant, Index count, Index samples, std::uint64_t seed,
                                          double amplitude) {
    if (count < 1) throw DimensionError("estimate_markov_whitenoise: count must be >= 1");
    if (samples < count + 1) {
        throw DimensionError("estimate_markov_whitenoise: samples (" + std::to_string(samples) +
                             ") must be >= count + 1 (" + std::to_string(count + 1) + ")");
    }
    if (!(amplitude > 0.0)) throw Error("estimate_markov_whitenoise: amplitude must be positive");

    const Index m = plant.input_dim(), p = plant.output_dim();
    const bool port = plant.has_disturbance_port();
    const Index md = plant.disturbance_dim();
    const Index total = samples + count;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix U(m, samples), Wn(port ? md : 0, samples), Y(p, total);
    const Vector zero_w = Vector::Zero(md);
    for (Index k = 0; k < total; ++k) {
        Vector u = Vector::Zero(m);
        Vector w = zero_w;
        if (k < samples) {
            for (Index j = 0; j < m; ++j) u(j) = amplitude * gauss(rng);
            U.col(k) = u;
            if (port) {
                for (Index j = 0; j < md; ++j) w(j) = amplitude * gauss(rng);
                Wn.col(k) = w;
            }
        }
        Y.col(k) = checked_step(plant, u, w, port, p, k);
    }

    MarkovSequence seq;
    seq.p = p;
    seq.m = m;
    const double scale = 1.0 / (amplitude * amplitude * static_cast<double>(samples));
    // y_k is sampled before u_k acts, so lag 0 is zero by construction rather than estimated
    seq.H.push_back(Matrix::Zero(p, m));
    if (port) seq.M.push_back(Matrix::Zero(p, md));
    for (Index i = 1; i <= count; ++i) {
        seq.H.push_back(scale * Y.middleCols(i, samples) * U.transpose());
        if (port) seq.M.push_back(scale * Y.middleCols(i, samples) * Wn.transpose());
    }
    if (!port) seq.M = seq.H;
    return seq;
}

MarkovSequence estimate_markov_impulse(BlackBox& plant, Index count, const ImpulseOptions& options) {
    if (count < 1) throw DimensionError("estimate_markov_impulse: count must be >= 1");
    if (!plant.resettable()) {
        throw NotResettableError(plant.id() +
                                 " is not resettable; impulse identification needs one experiment per channel, "
                                 "use estimate_markov_whitenoise instead");
    }
    if (!(options.amplitude > 0.0)) throw Error("estimate_markov_impulse: amplitude must be positive");

    const Index m = plant.input_dim(), p = plant.output_dim();
    const bool port = plant.has_disturbance_port();
    const double a = options.amplitude;

    Matrix baseline;
    if (!options.symmetric) baseline = impulse_response(plant, Vector::Zero(m), false, count);

    auto channel_response = [&](Index width, Index j, bool on_port) -> Matrix {
        const Vector e = Vector::Unit(width, j);
        if (options.symmetric) {
            const Matrix up = impulse_response(plant, a * e, on_port, count);
            const Matrix down = impulse_response(plant, -a * e, on_port, count);
            return (up - down) / (2.0 * a);
        }
        return (impulse_response(plant, a * e, on_port, count) - baseline) / a;
    };

    std::vector<Matrix> input_cols;
    for (Index j = 0; j < m; ++j) input_cols.push_back(channel_response(m, j, false));

    MarkovSequence seq;
    seq.p = p;
    seq.m = m;
    seq.H = blocks_from_columns(input_cols, p, count);
    if (port) {
        std::vector<Matrix> dist_cols;
        for (Index j = 0; j < plant.disturbance_dim(); ++j) dist_cols.push_back(channel_response(plant.disturbance_dim(), j, true));
        seq.M = blocks_from_columns(dist_cols, p, count);
    } else {
        seq.M = seq.H;
    }
    plant.reset();
    return seq;
}

} // namespace mtrack
