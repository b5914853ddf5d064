#pragma once

#include "mtrack/closed_loop.hpp"
#include "mtrack/config.hpp"
#include "mtrack/lti.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

namespace mtrack {

inline constexpr const char* kVersion = "0.1.0";

/// The plant a config describes, plus whatever is needed to build its references.
struct PlantSetup {
    std::unique_ptr<BlackBox> plant;
    std::optional<StateSpace> model;                    // kind = lti
    std::optional<tensegrity::FemModel> fem;            // kind = tensegrity
    std::optional<airfoil::MorphTarget> morph;          // kind = tensegrity
    tensegrity::TensegrityPlant* tensegrity = nullptr;  // alias of plant when it is one
};

PlantSetup make_plant(const ExperimentConfig& cfg);

/// r_0..r_N for the configured reference kind.
VectorList make_reference(const ExperimentConfig& cfg, const PlantSetup& setup);

/// The estimator reads Markov blocks up to lag N+1.
inline Index markov_max_lag(Index N) { return N + 1; }

// Every command writes manifest.txt and a copy of the config into `out`.

struct IdentifyResult {
    MarkovSequence markov;
    double seconds = 0.0;
};
IdentifyResult cmd_identify(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

struct TrackResult {
    ClosedLoopTrace trace;
    double cost = 0.0;
    double terminal_error = 0.0;   // |e_N|
    double commanded = 0.0;        // |r_N|
    Index channels = 0;
    Index channels_decaying = 0;   // max |e| over the last 10% below max over the first 10%
    double synthesis_seconds = 0.0;
    double run_seconds = 0.0;
};
TrackResult cmd_track(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Per-channel check on an error trace: max over the last 10% of steps below the max
/// over the first 10%.
std::vector<bool> decaying_channels(const ClosedLoopTrace& trace);

struct VerifyRow {
    Index index = 0;
    Index n = 0, m = 0, p = 0, N = 0;
    double gain_deviation = 0.0;
    double estimator_deviation = 0.0;
    double loop_deviation = 0.0;
};

struct VerifyReport {
    std::vector<VerifyRow> rows;
    double max_gain = 0.0;
    double max_estimator = 0.0;
    double max_loop = 0.0;
    bool passed = false;
    double seconds = 0.0;
};

/// Data-based gains, estimator and closed loop against the model route on random
/// stable plants. Plants are drawn from cfg.seed; work fans out over threads and rows
/// come back in plant order.
VerifyReport cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// One plant of the verify suite; exposed for tests.
VerifyRow verify_plant(Index index, Index n, Index m, Index p, Index N, std::uint64_t seed, double perturb);

} // namespace mtrack
