#include "mtrack/experiment.hpp"

#include "mtrack/identification.hpp"
#include "mtrack/oracle.hpp"
#include "mtrack/textio.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace mtrack {

namespace fs = std::filesystem;

namespace {

double elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string num(double v) { return textio::format_double(v); }

std::map<std::string, std::string> base_manifest(const ExperimentConfig& cfg, const std::string& command) {
    return {{"command", command},
            {"version", kVersion},
            {"config_sha1", cfg.hash()},
            {"seed", std::to_string(cfg.seed)},
            {"plant", to_string(cfg.plant)},
            {"N", std::to_string(cfg.N)}};
}

void save_config_copy(const ExperimentConfig& cfg, const fs::path& out) { textio::write_file(out / "config.ini", cfg.text); }

MarkovSequence identify(const ExperimentConfig& cfg, PlantSetup& setup) {
    BlackBox& plant = *setup.plant;
    const Index lag = markov_max_lag(cfg.N);
    if (cfg.method == IdentMethod::Impulse) return estimate_markov_impulse(plant, lag, {cfg.amplitude, cfg.symmetric});
    return estimate_markov_whitenoise(plant, lag, cfg.samples, cfg.seed, cfg.amplitude);
}

void require_markov_fits(const MarkovSequence& mk, const BlackBox& plant, Index N) {
    if (mk.p != plant.output_dim() || mk.m != plant.input_dim())
        throw DimensionError("Markov bundle is " + std::to_string(mk.p) + "x" + std::to_string(mk.m) + " but plant '" +
                             plant.id() + "' is " + std::to_string(plant.output_dim()) + "x" +
                             std::to_string(plant.input_dim()));
    if (mk.count() < markov_max_lag(N))
        throw DimensionError("Markov bundle reaches lag " + std::to_string(mk.count()) + ", horizon needs " +
                             std::to_string(markov_max_lag(N)));
}

std::string gnuplot_script(const ExperimentConfig& cfg, Index p, Index m, bool tensegrity) {
    std::ostringstream g;
    g << "# gnuplot -p plot.gp\n"
      << "set datafile separator ','\nset key off\nset grid\n"
      << "set multiplot layout " << (tensegrity ? 2 : 1) << ",1\n"
      << "set title 'tracking error'\nset xlabel 't [s]'\nset ylabel 'e'\n"
      << "plot for [i=3:" << 2 + p << "] 'errors.csv' using 2:i with lines\n";
    if (tensegrity)
        g << "set title 'string rest-length change'\nset ylabel 'dl0 [m]'\n"
          << "plot for [i=3:" << 2 + m << "] 'string_length.csv' using 2:i with lines\n";
    g << "unset multiplot\n";
    (void)cfg;
    return g.str();
}

void write_errors_csv(const ClosedLoopTrace& tr, double dt, const fs::path& path) {
    const Index p = tr.e.front().size();
    std::string out = "k,t";
    for (Index i = 0; i < p; ++i) out += ",e[" + std::to_string(i) + "]";
    out += ",e_norm\n";
    for (Index k = 0; k < tr.steps(); ++k) {
        const Vector& e = tr.e[static_cast<std::size_t>(k)];
        out += std::to_string(k) + "," + num(static_cast<double>(k) * dt);
        for (Index i = 0; i < p; ++i) out += "," + num(e(i));
        out += "," + num(e.norm()) + "\n";
    }
    textio::write_file(path, out);
}

void write_tensegrity_outputs(const tensegrity::TensegrityPlant& plant, const airfoil::MorphTarget& morph,
                              const ClosedLoopTrace& tr, double dt, const fs::path& out) {
    const auto& model = plant.model();
    const auto& history = plant.node_history();
    const Index ns = model.topology.string_count(), nb = model.topology.bar_count();
    const Matrix Cs = model.topology.Cs;
    const Vector l_rest = (model.topology.nodes * Cs.transpose()).colwise().norm().transpose();

    std::string s = "k,t";
    for (Index j = 0; j < ns; ++j) s += ",dl0[" + std::to_string(j) + "]";
    for (Index j = 0; j < ns; ++j) s += ",dl[" + std::to_string(j) + "]";
    s += "\n";
    for (Index k = 0; k < tr.steps(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        s += std::to_string(k) + "," + num(static_cast<double>(k) * dt);
        for (Index j = 0; j < ns; ++j) s += "," + num(tr.u[ks](j));
        const Vector l = ks < history.size() ? Vector((history[ks] * Cs.transpose()).colwise().norm().transpose()) : l_rest;
        for (Index j = 0; j < ns; ++j) s += "," + num(l(j) - l_rest(j));
        s += "\n";
    }
    textio::write_file(out / "string_length.csv", s);
    (void)nb;

    std::string t = "k,t,node,x,z\n";
    for (std::size_t k = 0; k < history.size(); ++k)
        for (Index i = 0; i < history[k].cols(); ++i)
            t += std::to_string(k) + "," + num(static_cast<double>(k) * dt) + "," + std::to_string(i) + "," +
                 num(history[k](0, i)) + "," + num(history[k](2, i)) + "\n";
    textio::write_file(out / "node_trajectories.csv", t);

    airfoil::write_nodes_csv(out / "initial_nodes.csv", model.topology.nodes);
    airfoil::write_nodes_csv(out / "target_nodes.csv", morph.nodes);
    if (!history.empty()) airfoil::write_nodes_csv(out / "final_nodes.csv", history.back());
}

} // namespace

PlantSetup make_plant(const ExperimentConfig& cfg) {
    PlantSetup s;
    if (cfg.plant == PlantKind::Lti) {
        s.model = read_state_space(cfg.resolve(cfg.model).string());
        s.plant = std::make_unique<LtiBlackBox>(*s.model, cfg.separate_disturbance);
        return s;
    }
    const auto topology = airfoil::initial_configuration(cfg.airfoil);
    const auto morph = airfoil::MorphSpec::linear(topology.q, cfg.morph_step);
    std::vector<tensegrity::NodeMatrix> taut;
    if (cfg.taut_samples > 0) taut = airfoil::morph_path(topology, morph, cfg.taut_samples);
    s.fem = tensegrity::assemble_fem(topology, cfg.materials, taut);
    s.morph = airfoil::morph_target(topology, morph);
    auto plant = std::make_unique<tensegrity::TensegrityPlant>(*s.fem, cfg.sample_time, cfg.max_dt);
    s.tensegrity = plant.get();
    s.plant = std::move(plant);
    return s;
}

VectorList make_reference(const ExperimentConfig& cfg, const PlantSetup& setup) {
    const Index p = setup.plant->output_dim(), N = cfg.N;
    switch (cfg.reference) {
    case ReferenceKind::Zero: return VectorList(static_cast<std::size_t>(N + 1), Vector::Zero(p));
    case ReferenceKind::Constant: return VectorList(static_cast<std::size_t>(N + 1), Vector::Constant(p, cfg.constant));
    case ReferenceKind::Morph:
        if (!setup.morph) throw ConfigError("morph reference needs the tensegrity plant");
        return airfoil::reference_trajectory(setup.morph->displacement, N);
    case ReferenceKind::File: {
        const Matrix R = textio::read_matrix_csv(cfg.resolve(cfg.reference_file));
        require_shape(R, N + 1, p, "reference file");
        VectorList out;
        for (Index k = 0; k <= N; ++k) out.push_back(R.row(k).transpose());
        return out;
    }
    }
    throw ConfigError("unknown reference kind");
}

IdentifyResult cmd_identify(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    PlantSetup setup = make_plant(cfg);
    log << "identify: plant " << setup.plant->id() << " (" << setup.plant->output_dim() << " outputs, "
        << setup.plant->input_dim() << " inputs), " << to_string(cfg.method) << ", lags 0.." << markov_max_lag(cfg.N)
        << "\n";
    IdentifyResult res;
    try {
        res.markov = identify(cfg, setup);
    } catch (const InstabilityError& e) {
        throw InstabilityError(std::string("identification aborted: ") + e.what());
    }
    res.seconds = elapsed(t0);

    fs::create_directories(out);
    write_markov(res.markov, out / "markov");
    save_config_copy(cfg, out);
    auto man = base_manifest(cfg, "identify");
    man["method"] = to_string(cfg.method);
    man["amplitude"] = num(cfg.amplitude);
    man["symmetric"] = cfg.symmetric ? "true" : "false";
    man["samples"] = std::to_string(cfg.samples);
    man["markov_sha1"] = markov_content_hash(res.markov);
    textio::write_manifest(out / "manifest.txt", man);
    log << "identify: " << res.markov.count() + 1 << " blocks of " << res.markov.p << "x" << res.markov.m << " in "
        << res.seconds << " s -> " << (out / "markov").string() << "\n";
    return res;
}

std::vector<bool> decaying_channels(const ClosedLoopTrace& trace) {
    const Index steps = trace.steps();
    if (steps < 2) throw DimensionError("decaying_channels: trace too short");
    const Index N = steps - 1;
    const Index w = std::max<Index>(1, (N + 9) / 10);
    const Index p = trace.e.front().size();
    std::vector<bool> out;
    for (Index i = 0; i < p; ++i) {
        double first = 0.0, last = 0.0;
        for (Index k = 0; k <= N; ++k) {
            const double a = std::abs(trace.e[static_cast<std::size_t>(k)](i));
            if (k <= w) first = std::max(first, a);
            if (k >= N - w) last = std::max(last, a);
        }
        out.push_back(last < first);
    }
    return out;
}

TrackResult cmd_track(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
    PlantSetup setup = make_plant(cfg);
    BlackBox& plant = *setup.plant;
    const Index N = cfg.N, p = plant.output_dim(), m = plant.input_dim();
    fs::create_directories(out);

    MarkovSequence mk;
    if (!cfg.markov.empty()) {
        mk = read_markov(cfg.resolve(cfg.markov));
        log << "track: Markov bundle " << cfg.resolve(cfg.markov).string() << "\n";
    } else {
        log << "track: no bundle given, identifying\n";
        mk = cmd_identify(cfg, out / "identify", log).markov;
    }
    require_markov_fits(mk, plant, N);
    const std::string markov_sha = markov_content_hash(mk);
    mk = augment_markov(std::move(mk));

    TrackResult res;
    const auto t0 = std::chrono::steady_clock::now();
    const CostWeights weights = cfg.weights(p, m);
    const NoiseModel noise = cfg.noise(plant.disturbance_dim(), p);
    const VectorList reference = make_reference(cfg, setup);
    const GainSchedule gains = synthesize_gains({N, reference, weights, mk}, cfg.storage);
    const EstimatorSchedule est = build_estimator_schedule(mk, noise, N, {cfg.form, false});
    res.synthesis_seconds = elapsed(t0);
    log << "track: schedules for N = " << N << " in " << res.synthesis_seconds << " s\n";

    if (plant.resettable()) plant.reset();
    if (setup.tensegrity) setup.tensegrity->record_history(true);
    const auto t1 = std::chrono::steady_clock::now();
    res.trace = run_closed_loop(plant, gains, est, reference, cfg.inject ? std::optional<NoiseModel>(noise) : std::nullopt,
                                cfg.seed);
    res.run_seconds = elapsed(t1);

    res.cost = evaluate_cost(res.trace, weights);
    res.terminal_error = res.trace.e.back().norm();
    res.commanded = reference.back().norm();
    const auto decay = decaying_channels(res.trace);
    res.channels = static_cast<Index>(decay.size());
    res.channels_decaying = std::count(decay.begin(), decay.end(), true);

    write_trace_csv(res.trace, out / "trace.csv");
    write_errors_csv(res.trace, cfg.sample_time, out / "errors.csv");
    if (setup.tensegrity) write_tensegrity_outputs(*setup.tensegrity, *setup.morph, res.trace, cfg.sample_time, out);
    textio::write_file(out / "plot.gp", gnuplot_script(cfg, p, m, setup.tensegrity != nullptr));
    if (cfg.export_schedules) {
        write_gains(gains, out / "gains", cfg.rho);
        write_estimator(est, out / "estimator");
    }

    textio::write_manifest(out / "summary.txt",
                           {{"cost", num(res.cost)},
                            {"terminal_error_norm", num(res.terminal_error)},
                            {"commanded_norm", num(res.commanded)},
                            {"relative_terminal_error", num(res.commanded > 0 ? res.terminal_error / res.commanded : 0.0)},
                            {"channels", std::to_string(res.channels)},
                            {"channels_decaying", std::to_string(res.channels_decaying)},
                            {"max_increment_residual", num(max_increment_residual(res.trace, gains))},
                            {"steps", std::to_string(res.trace.steps())}});
    save_config_copy(cfg, out);
    auto man = base_manifest(cfg, "track");
    man["plant_id"] = plant.id();
    man["rho"] = num(cfg.rho);
    man["W_trace"] = num(noise.W.trace());
    man["V_trace"] = num(noise.V.trace());
    man["noise_injected"] = cfg.inject ? "true" : "false";
    man["markov_sha1"] = markov_sha;
    man["storage"] = cfg.storage == GainStorage::Full ? "full" : "leading";
    textio::write_manifest(out / "manifest.txt", man);

    log << "track: J = " << res.cost << ", |e_N| = " << res.terminal_error << " of |r_N| = " << res.commanded << ", "
        << res.channels_decaying << "/" << res.channels << " channels decaying\n";
    return res;
}

VerifyRow verify_plant(Index index, Index n, Index m, Index p, Index N, std::uint64_t seed, double perturb) {
    VerifyRow row{index, n, m, p, N, 0.0, 0.0, 0.0};
    const StateSpace sys = random_stable_system(n, m, p, seed);
    MarkovSequence mk = markov_from_model(sys, markov_max_lag(N));
    if (perturb > 0.0) {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::normal_distribution<double> gauss(0.0, perturb);
        for (Index i = 1; i <= mk.count(); ++i) {
            for (Matrix* blk : {&mk.H[static_cast<std::size_t>(i)], &mk.M[static_cast<std::size_t>(i)]})
                for (Index c = 0; c < blk->size(); ++c) blk->data()[c] += gauss(rng);
        }
    }
    mk = augment_markov(std::move(mk));

    const CostWeights weights = CostWeights::scaled_identity(p, m, 0.1);
    const NoiseModel noise = NoiseModel::scaled_identity(sys.disturbances(), p, 0.5, 0.1);

    const GainSchedule gains = synthesize_gains({N, {}, weights, mk}, GainStorage::Full);
    const BlockList Kmodel = oracle::model_gains(sys, weights, N);
    for (Index k = 0; k <= N; ++k)
        row.gain_deviation = std::max(row.gain_deviation, relative_deviation(gains.gain(k), Kmodel[static_cast<std::size_t>(k)]));

    const EstimatorSchedule est = build_estimator_schedule(mk, noise, N);
    const oracle::ModelEstimator em = oracle::model_estimator(sys, noise, N);
    for (Index k = 1; k <= N; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        row.estimator_deviation = std::max({row.estimator_deviation, relative_deviation(est.F(k), em.F[i]),
                                            relative_deviation(est.B(k), em.B[i])});
    }

    VectorList reference;
    for (Index k = 0; k <= N; ++k) reference.push_back(Vector::Constant(p, std::sin(0.3 * static_cast<double>(k)) + 1.0));
    const NoiseRealization real = NoiseRealization::sample(noise, N, seed + 1);
    LtiBlackBox plant(sys);
    const ClosedLoopTrace data = run_closed_loop(plant, gains, est, reference, &real);
    const ClosedLoopTrace model = oracle::model_closed_loop(sys, weights, noise, reference, &real);
    auto stack = [](const ClosedLoopTrace& t) {
        const Index m_ = t.u.front().size(), p_ = t.y.front().size();
        Matrix out(m_ + p_, t.steps());
        for (Index k = 0; k < t.steps(); ++k) {
            out.col(k).head(m_) = t.u[static_cast<std::size_t>(k)];
            out.col(k).tail(p_) = t.y[static_cast<std::size_t>(k)];
        }
        return out;
    };
    row.loop_deviation = relative_deviation(stack(data), stack(model));
    return row;
}

VerifyReport cmd_verify(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Job {
        Index n, m, p, N;
        std::uint64_t seed;
    };
    std::mt19937_64 rng(cfg.seed);
    auto draw = [&](Index hi) { return 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi)); };
    std::vector<Job> jobs;
    for (Index i = 0; i < cfg.verify_plants; ++i) {
        Job j{draw(cfg.verify_max_states), draw(cfg.verify_max_io), draw(cfg.verify_max_io), draw(cfg.verify_max_horizon),
              rng()};
        if (i == 0) j.N = 1; // boundary case always in the suite
        jobs.push_back(j);
    }

    VerifyReport rep;
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < jobs.size(); start += workers) {
        std::vector<std::future<VerifyRow>> batch;
        for (std::size_t i = start; i < std::min(jobs.size(), start + workers); ++i) {
            const Job j = jobs[i];
            batch.push_back(std::async(std::launch::async, verify_plant, static_cast<Index>(i), j.n, j.m, j.p, j.N, j.seed,
                                       cfg.verify_perturb));
        }
        for (auto& f : batch) rep.rows.push_back(f.get());
    }
    for (const auto& r : rep.rows) {
        rep.max_gain = std::max(rep.max_gain, r.gain_deviation);
        rep.max_estimator = std::max(rep.max_estimator, r.estimator_deviation);
        rep.max_loop = std::max(rep.max_loop, r.loop_deviation);
    }
    rep.passed = rep.max_gain <= cfg.verify_tolerance && rep.max_estimator <= cfg.verify_tolerance &&
                 rep.max_loop <= cfg.verify_loop_tolerance;
    rep.seconds = elapsed(t0);

    fs::create_directories(out);
    std::string csv = "plant,n,m,p,N,gain_deviation,estimator_deviation,loop_deviation\n";
    for (const auto& r : rep.rows)
        csv += std::to_string(r.index) + "," + std::to_string(r.n) + "," + std::to_string(r.m) + "," + std::to_string(r.p) +
               "," + std::to_string(r.N) + "," + num(r.gain_deviation) + "," + num(r.estimator_deviation) + "," +
               num(r.loop_deviation) + "\n";
    textio::write_file(out / "verify.csv", csv);
    save_config_copy(cfg, out);
    auto man = base_manifest(cfg, "verify");
    man["plants"] = std::to_string(cfg.verify_plants);
    man["perturb"] = num(cfg.verify_perturb);
    man["max_gain_deviation"] = num(rep.max_gain);
    man["max_estimator_deviation"] = num(rep.max_estimator);
    man["max_loop_deviation"] = num(rep.max_loop);
    man["passed"] = rep.passed ? "true" : "false";
    textio::write_manifest(out / "manifest.txt", man);

    log << "verify: " << rep.rows.size() << " plants\n"
        << "  max gain deviation      " << num(rep.max_gain) << " (tolerance " << num(cfg.verify_tolerance) << ")\n"
        << "  max estimator deviation " << num(rep.max_estimator) << " (tolerance " << num(cfg.verify_tolerance) << ")\n"
        << "  max closed-loop deviation " << num(rep.max_loop) << " (tolerance " << num(cfg.verify_loop_tolerance) << ")\n"
        << "  " << (rep.passed ? "PASSED" : "FAILED") << " in " << rep.seconds << " s\n";
    return rep;
}

} // namespace mtrack
