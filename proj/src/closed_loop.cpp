#include "mtrack/closed_loop.hpp"

#include "mtrack/textio.hpp"

#include <Eigen/Eigenvalues>

#include <random>

namespace mtrack {

namespace {

Matrix psd_sqrt(const Matrix& W) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(W);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Vector stack_reference(const VectorList& reference, Index k) {
    const Index p = reference.front().size();
    const auto N = static_cast<Index>(reference.size()) - 1;
    Vector out((N - k + 1) * p);
    for (Index i = k; i <= N; ++i) out.segment((i - k) * p, p) = reference[static_cast<std::size_t>(i)];
    return out;
}

} // namespace

std::vector<double> ClosedLoopTrace::xbar_norms() const {
    std::vector<double> out;
    out.reserve(xbar.size());
    for (const auto& x : xbar) out.push_back(x.norm());
    return out;
}

NoiseRealization NoiseRealization::sample(const NoiseModel& noise, Index N, std::uint64_t seed) {
    noise.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Matrix Ws = psd_sqrt(noise.W), Vs = psd_sqrt(noise.V);
    auto draw = [&](const Matrix& root) {
        Vector z(root.cols());
        for (Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
        return Vector(root * z);
    };
    NoiseRealization out;
    for (Index k = 0; k <= N; ++k) {
        out.w.push_back(draw(Ws));
        out.v.push_back(draw(Vs));
    }
    return out;
}

ClosedLoopTrace run_closed_loop(BlackBox& plant, const GainSchedule& gains, const EstimatorSchedule& estimator,
                                const VectorList& reference, const NoiseRealization* noise) {
    const Index N = gains.horizon(), p = gains.outputs(), m = gains.inputs();
    if (estimator.horizon() != N || estimator.outputs() != p || estimator.inputs() != m)
        throw DimensionError("run_closed_loop: gain and estimator schedules disagree on (N, p, m)");
    if (plant.input_dim() != m || plant.output_dim() != p) {
        throw DimensionError("run_closed_loop: plant '" + plant.id() + "' is " + std::to_string(plant.output_dim()) +
                             "x" + std::to_string(plant.input_dim()) + " but schedules are " + std::to_string(p) +
                             "x" + std::to_string(m));
    }
    if (static_cast<Index>(reference.size()) != N + 1)
        throw DimensionError("run_closed_loop: reference needs N+1 = " + std::to_string(N + 1) + " samples");
    for (std::size_t k = 0; k < reference.size(); ++k) require_length(reference[k], p, "r_" + std::to_string(k));
    if (noise && (static_cast<Index>(noise->w.size()) < N + 1 || static_cast<Index>(noise->v.size()) < N + 1))
        throw DimensionError("run_closed_loop: noise realization shorter than the horizon");

    ClosedLoopTrace trace;
    EstimatorState est = EstimatorState::initial(N, p);
    Vector u = Vector::Zero(m);
    for (Index k = 0; k <= N; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        Vector du = Vector::Zero(m);
        if (k >= 1) {
            est = estimator_step(estimator, est, trace.du.back(), trace.y.back());
            du = gains.increment(k, stack_reference(reference, k) - est.xbar);
        }
        u += du;

        Vector y;
        try {
            y = noise ? plant.step(u, noise->w[ks]) : plant.step(u);
        } catch (const InstabilityError& ex) {
            throw InstabilityError("closed loop aborted at step " + std::to_string(k) + ": " + ex.what());
        }
        if (y.size() != p) throw DimensionError("run_closed_loop: plant output length changed at step " + std::to_string(k));
        if (noise) y += noise->v[ks];
        if (!y.allFinite()) throw InstabilityError("closed loop aborted at step " + std::to_string(k) + ": non-finite plant output");

        trace.u.push_back(u);
        trace.du.push_back(du);
        trace.e.push_back(reference[ks] - y);
        trace.y.push_back(std::move(y));
        trace.r.push_back(reference[ks]);
        trace.xbar.push_back(est.xbar);
    }
    return trace;
}

ClosedLoopTrace run_closed_loop(BlackBox& plant, const GainSchedule& gains, const EstimatorSchedule& estimator,
                                const VectorList& reference, const std::optional<NoiseModel>& inject,
                                std::uint64_t seed) {
    if (!inject) return run_closed_loop(plant, gains, estimator, reference, nullptr);
    const NoiseRealization noise = NoiseRealization::sample(*inject, gains.horizon(), seed);
    return run_closed_loop(plant, gains, estimator, reference, &noise);
}

double max_increment_residual(const ClosedLoopTrace& trace, const GainSchedule& gains) {
    double worst = 0.0;
    for (Index k = 1; k < trace.steps(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const Vector expected = gains.increment(k, stack_reference(trace.r, k) - trace.xbar[ks]);
        worst = std::max(worst, (trace.du[ks] - expected).cwiseAbs().maxCoeff());
    }
    return worst;
}

void write_trace_csv(const ClosedLoopTrace& trace, const std::filesystem::path& path) {
    if (trace.steps() == 0) throw Error("write_trace_csv: empty trace");
    const Index m = trace.u.front().size(), p = trace.y.front().size();
    std::string out = "k";
    auto header = [&](const char* name, Index n) {
        for (Index i = 0; i < n; ++i) out += std::string(",") + name + "[" + std::to_string(i) + "]";
    };
    header("u", m);
    header("du", m);
    header("y", p);
    header("r", p);
    header("e", p);
    out += ",xbar_norm\n";
    const auto norms = trace.xbar_norms();
    for (Index k = 0; k < trace.steps(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        out += std::to_string(k);
        for (const VectorList* col : {&trace.u, &trace.du, &trace.y, &trace.r, &trace.e})
            for (Index i = 0; i < (*col)[ks].size(); ++i) out += "," + textio::format_double((*col)[ks](i));
        out += "," + textio::format_double(norms[ks]) + "\n";
    }
    textio::write_file(path, out);
}

} // namespace mtrack
