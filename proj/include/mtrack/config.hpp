#pragma once

#include "mtrack/airfoil.hpp"
#include "mtrack/estimator.hpp"
#include "mtrack/tensegrity.hpp"
#include "mtrack/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mtrack {

enum class PlantKind { Lti, Tensegrity };
enum class IdentMethod { Impulse, WhiteNoise };
enum class ReferenceKind { Zero, Constant, Morph, File };

// INI layout, one section per block below. Paths are resolved against the config file's
// directory. Unknown keys are rejected so typos do not silently fall back to defaults.
struct ExperimentConfig {
    std::filesystem::path source; // config file, empty for built-in defaults
    std::string text;             // raw config text, hashed into every manifest

    // [plant]
    PlantKind plant = PlantKind::Tensegrity;
    std::filesystem::path model;  // state-space file for kind = lti
    bool separate_disturbance = false;
    double sample_time = 0.01;
    double max_dt = 1e-4;

    // [tensegrity]
    airfoil::AirfoilSpec airfoil;
    tensegrity::Materials materials;
    Index taut_samples = 20; // morph shapes the prestress must keep taut, 0 for none

    // [horizon]
    Index N = 100;

    // [weights]
    double rho = 2.0;
    double q_scale = 1.0;
    double s_scale = 1.0;
    std::filesystem::path Q_file, S_file, R_file, T_file; // optional full-matrix overrides
    GainStorage storage = GainStorage::LeadingBlockRow;

    // [noise]
    double w = 1e-6;
    double v = 1e-8;
    std::filesystem::path W_file, V_file;
    bool inject = false; // draw w_k, v_k during the closed-loop run
    CovarianceForm form = CovarianceForm::Information;

    // [identify]
    IdentMethod method = IdentMethod::Impulse;
    double amplitude = 1e-4;
    bool symmetric = true;
    Index samples = 100000; // white-noise record length
    std::filesystem::path markov; // existing bundle for track; identified afresh when empty

    // [reference]
    ReferenceKind reference = ReferenceKind::Morph;
    double constant = 1.0;
    double morph_step = 0.04363323129985824; // pi / 72
    std::filesystem::path reference_file;    // (N+1) x p CSV

    // [run]
    std::uint64_t seed = 1;
    bool export_schedules = false;

    // [verify]
    Index verify_plants = 50;
    Index verify_max_states = 6;
    Index verify_max_io = 3;
    Index verify_max_horizon = 20;
    double verify_tolerance = 1e-8;
    double verify_loop_tolerance = 1e-6;
    double verify_perturb = 0.0;

    /// Cross-checks that do not need the plant built (ranges, files present).
    void validate() const;

    /// git-style blob hash of the config text.
    std::string hash() const;

    std::filesystem::path resolve(const std::filesystem::path& p) const;

    CostWeights weights(Index p, Index m) const;
    NoiseModel noise(Index m_disturbance, Index p) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& source = {});

std::string to_string(PlantKind k);
std::string to_string(IdentMethod k);
std::string to_string(ReferenceKind k);

} // namespace mtrack
