// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.
#include "mtrack/airfoil.hpp"
#include "mtrack/experiment.hpp"
#include "mtrack/identification.hpp"
#include "mtrack/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace mtrack;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what) {
    if (!ok) ++failures;
    std::printf("%s C%d %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double rel(const Matrix& a, const Matrix& b) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

Matrix stack(const VectorList& v) {
    Matrix m(v.front().size(), static_cast<Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) m.col(static_cast<Index>(k)) = v[k];
    return m;
}

struct PlantCase {
    StateSpace sys;
    Index N;
};

// 50 plants with n <= 6, m, p <= 3, N <= 20; the first one is the N = 1 boundary.
std::vector<PlantCase> population() {
    std::mt19937_64 rng(20240601);
    auto pick = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
    std::vector<PlantCase> out;
    for (int i = 0; i < 50; ++i) {
        const Index n = pick(1, 6), m = pick(1, 3), p = pick(1, 3), N = i == 0 ? 1 : pick(1, 20);
        out.push_back({random_stable_system(n, m, p, 1000 + static_cast<std::uint64_t>(i)), N});
    }
    return out;
}

const CostWeights weights_for(const StateSpace& s) { return CostWeights::scaled_identity(s.outputs(), s.inputs(), 0.1, 1.0, 2.0); }
const NoiseModel noise_for(const StateSpace& s) { return NoiseModel::scaled_identity(s.inputs(), s.outputs(), 0.5, 0.1); }

void gains_criterion(const std::vector<PlantCase>& plants) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& pc : plants) {
        const CostWeights w = weights_for(pc.sys);
        const GainSchedule g = synthesize_gains({pc.N, {}, w, augment_markov(markov_from_model(pc.sys, pc.N + 1))});
        const BlockList ref = oracle::model_gains(pc.sys, w, pc.N);
        for (Index k = 0; k <= pc.N; ++k) worst = std::max(worst, rel(g.gain(k), ref[static_cast<std::size_t>(k)]));
    }
    const double t = seconds_since(t0);
    report(1, worst <= 1e-8 && t <= 30.0,
           "gain equivalence on 50 plants: max rel " + fmt(worst) + " (<= 1e-8), " + fmt(t) + " s (<= 30 s)");
}

void estimator_criterion(const std::vector<PlantCase>& plants) {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& pc : plants) {
        const NoiseModel n = noise_for(pc.sys);
        const EstimatorSchedule est = build_estimator_schedule(augment_markov(markov_from_model(pc.sys, pc.N + 1)), n, pc.N);
        const oracle::ModelEstimator ref = oracle::model_estimator(pc.sys, n, pc.N);
        for (Index k = 1; k <= pc.N; ++k) {
            const auto i = static_cast<std::size_t>(k - 1);
            worst = std::max({worst, rel(est.F(k), ref.F[i]), rel(est.B(k), ref.B[i])});
        }
    }
    const double t = seconds_since(t0);
    report(2, worst <= 1e-8 && t <= 30.0,
           "estimator equivalence on 50 plants: max rel " + fmt(worst) + " (<= 1e-8), " + fmt(t) + " s (<= 30 s)");
}

// Relations checked bit for bit against a plain running sum.
bool relations_hold(const MarkovSequence& raw) {
    const MarkovSequence aug = augment_markov(raw);
    if (!raw.H[0].isZero(0.0) || !raw.M[0].isZero(0.0)) return false;
    Matrix acc = Matrix::Zero(raw.p, raw.m);
    for (std::size_t i = 0; i < raw.H.size(); ++i) {
        acc += raw.H[i];
        if (aug.H_hat[i] != acc) return false;
        if (aug.M_hat[i] != raw.M[i]) return false;
    }
    return true;
}

void markov_criterion(const std::vector<PlantCase>& plants, const MarkovSequence& airfoil_markov) {
    Index sequences = 0, bad = 0;
    auto check = [&](const MarkovSequence& s) {
        ++sequences;
        if (!relations_hold(s)) ++bad;
    };
    for (const auto& pc : plants) {
        check(markov_from_model(pc.sys, pc.N + 1));
        LtiBlackBox box(pc.sys);
        check(estimate_markov_impulse(box, pc.N + 1));
        box.reset();
        check(estimate_markov_impulse(box, pc.N + 1, {1e-2, true}));
        box.reset();
        check(estimate_markov_whitenoise(box, pc.N + 1, 2000, 7));
    }
    check(airfoil_markov);
    report(3, bad == 0,
           "Markov relations (prefix sums, M_hat = M, H_0 = 0) exact on " + std::to_string(sequences) +
               " sequences, " + std::to_string(bad) + " violations");
}

void identification_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    Matrix A(2, 2), B(2, 1), C(1, 2);
    A << 0.7, 0.2, -0.2, 0.5;
    B << 1.0, 0.5;
    C << 1.0, -0.4;
    const StateSpace sys(A, B, C);
    const MarkovSequence truth = markov_from_model(sys, 5);
    Matrix stacked_truth(1, 5);
    for (Index i = 1; i <= 5; ++i) stacked_truth.col(i - 1) = truth.H[static_cast<std::size_t>(i)];

    std::vector<double> medians;
    for (Index samples : {Index{1000}, Index{10000}, Index{100000}}) {
        std::vector<double> errs;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            LtiBlackBox box(sys);
            const MarkovSequence est = estimate_markov_whitenoise(box, 5, samples, seed);
            Matrix s(1, 5);
            for (Index i = 1; i <= 5; ++i) s.col(i - 1) = est.H[static_cast<std::size_t>(i)];
            errs.push_back((s - stacked_truth).norm() / stacked_truth.norm());
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(0.5 * (errs[9] + errs[10]));
    }
    const double t = seconds_since(t0);
    const bool monotone = medians[0] > medians[1] && medians[1] > medians[2];
    report(4, monotone && medians[2] <= 0.02 && t <= 60.0,
           "white-noise identification median rel err " + fmt(medians[0]) + " / " + fmt(medians[1]) + " / " +
               fmt(medians[2]) + " at 1e3/1e4/1e5 samples (monotone, <= 0.02), " + fmt(t) + " s (<= 60 s)");
}

void topology_criterion(const tensegrity::TensegrityPlant& plant) {
    const auto& topo = plant.model().topology;
    const bool ok = topo.q == 5 && topo.node_count() == 16 && topo.bar_count() == 15 && topo.string_count() == 26 &&
                    plant.input_dim() == 26 && plant.output_dim() == 26;
    report(5, ok,
           "q=" + std::to_string(topo.q) + ": " + std::to_string(topo.node_count()) + " nodes, " +
               std::to_string(topo.bar_count()) + " bars, " + std::to_string(topo.string_count()) + " strings, " +
               std::to_string(plant.input_dim()) + " inputs / " + std::to_string(plant.output_dim()) +
               " outputs (16/15/26, 26/26)");
}

void geometry_criterion() {
    const airfoil::AirfoilSpec spec;
    const airfoil::NacaProfile prof = airfoil::NacaProfile::from_code(spec.code, spec.chord);
    const airfoil::SurfaceNodes s = airfoil::surface_points(spec);
    double worst_dev = 0.0;
    for (Index i = 0; i < s.segments(); ++i) {
        const double a = s.stations[static_cast<std::size_t>(i)], b = s.stations[static_cast<std::size_t>(i + 1)];
        for (bool upper : {true, false}) {
            const airfoil::Point pa = upper ? prof.upper(a) : prof.lower(a), pb = upper ? prof.upper(b) : prof.lower(b);
            for (int j = 0; j < 1000; ++j) {
                const double t = a + (b - a) * j / 999.0;
                const airfoil::Point pt = upper ? prof.upper(t) : prof.lower(t);
                const double along = std::clamp((pt - pa).dot(pb - pa) / (pb - pa).squaredNorm(), 0.0, 1.0);
                worst_dev = std::max(worst_dev, (pt - pa - along * (pb - pa)).norm());
            }
        }
    }
    const auto topo = airfoil::initial_configuration(spec);
    const auto target = airfoil::morph_target(topo, airfoil::MorphSpec::linear(topo.q, M_PI / 72));
    double worst_len = 0.0;
    const Matrix before = topo.bar_vectors(), after = target.nodes * topo.Cb.transpose();
    for (Index j = 0; j < topo.bar_count(); ++j)
        worst_len = std::max(worst_len, std::abs(after.col(j).norm() - before.col(j).norm()));
    report(6, s.segments() == 5 && worst_dev <= spec.error_bound && worst_len <= 1e-12,
           "NACA 2412: q=" + std::to_string(s.segments()) + " (5), max segment deviation " + fmt(worst_dev) +
               " (<= 1e-3, 1000-point sampling), max bar length change " + fmt(worst_len) + " (<= 1e-12)");
}

void airfoil_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = parse_config("");
    const fs::path out = fs::temp_directory_path() / "mtrack_acceptance_track";
    fs::remove_all(out);
    std::ostringstream log;
    TrackResult res;
    try {
        res = cmd_track(cfg, out, log);
    } catch (const std::exception& e) {
        report(7, false, std::string("airfoil tracking aborted: ") + e.what());
        return;
    }
    const double t = seconds_since(t0);

    const ClosedLoopTrace& tr = res.trace;
    const Index N = tr.steps() - 1;
    const double terminal = tr.e.back().norm(), commanded = tr.r.back().norm();
    const Index lo = static_cast<Index>(std::floor(0.1 * static_cast<double>(N)));
    const Index hi = static_cast<Index>(std::ceil(0.9 * static_cast<double>(N)));
    Index decaying = 0;
    const Index channels = tr.e.front().size();
    for (Index i = 0; i < channels; ++i) {
        double first = 0.0, last = 0.0;
        for (Index k = 0; k <= N; ++k) {
            const double a = std::abs(tr.e[static_cast<std::size_t>(k)](i));
            if (k <= lo) first = std::max(first, a);
            if (k >= hi) last = std::max(last, a);
        }
        if (last < first) ++decaying;
    }
    const double ratio = terminal / commanded;
    report(7, ratio <= 0.05 && decaying == channels && t <= 600.0,
           "airfoil tracking: terminal error " + fmt(ratio * 100.0) + "% of commanded morph (<= 5%), " +
               std::to_string(decaying) + "/" + std::to_string(channels) + " channels decaying (all), " + fmt(t) +
               " s (<= 600 s)");
}

void loop_criterion(const std::vector<PlantCase>& plants) {
    double worst = 0.0;
    std::uint64_t seed = 500;
    for (const auto& pc : plants) {
        const StateSpace& s = pc.sys;
        VectorList r;
        for (Index k = 0; k <= pc.N; ++k)
            r.push_back(Vector::LinSpaced(s.outputs(), 0.5, 1.5) * std::sin(0.4 * static_cast<double>(k) + 0.3));
        const CostWeights w = weights_for(s);
        const NoiseModel n = noise_for(s);
        const MarkovSequence mk = augment_markov(markov_from_model(s, pc.N + 1));
        const GainSchedule g = synthesize_gains({pc.N, r, w, mk}, GainStorage::LeadingBlockRow);
        const EstimatorSchedule est = build_estimator_schedule(mk, n, pc.N);
        const NoiseRealization real = NoiseRealization::sample(n, pc.N, seed++);
        LtiBlackBox box(s);
        const ClosedLoopTrace data = run_closed_loop(box, g, est, r, &real);
        const ClosedLoopTrace model = oracle::model_closed_loop(s, w, n, r, &real);
        worst = std::max({worst, rel(stack(data.u), stack(model.u)), rel(stack(data.y), stack(model.y)),
                          rel(stack(data.e), stack(model.e))});
    }
    report(8, worst <= 1e-6, "data vs model closed loop on 50 plants with shared noise: max rel " + fmt(worst) + " (<= 1e-6)");
}

void verify_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out = fs::temp_directory_path() / "mtrack_acceptance_verify";
    fs::remove_all(out);
    std::ostringstream log;
    const VerifyReport rep = cmd_verify(parse_config(""), out, log);
    const double t = seconds_since(t0);
    report(9, rep.passed && t <= 300.0,
           "verify suite " + std::string(rep.passed ? "passed" : "failed") + " on " + std::to_string(rep.rows.size()) +
               " plants in " + fmt(t) + " s (<= 300 s)");
}

} // namespace

int main() {
    const auto plants = population();
    gains_criterion(plants);
    estimator_criterion(plants);

    const ExperimentConfig cfg = parse_config("");
    PlantSetup setup = make_plant(cfg);
    const MarkovSequence airfoil_markov =
        estimate_markov_impulse(*setup.plant, markov_max_lag(cfg.N), {cfg.amplitude, cfg.symmetric});
    markov_criterion(plants, airfoil_markov);
    identification_criterion();
    topology_criterion(*setup.tensegrity);
    geometry_criterion();
    airfoil_criterion();
    loop_criterion(plants);
    verify_criterion();
    return failures == 0 ? 0 : 1;
}
