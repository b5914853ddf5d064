#include "mtrack/config.hpp"

#include "mtrack/textio.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>

namespace mtrack {

namespace {

using boost::property_tree::ptree;

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        return textio::parse_double(trim(v));
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

Index to_index(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != static_cast<double>(static_cast<long long>(d))) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return static_cast<Index>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
    const std::string s = lower(trim(v));
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

template <class E>
E to_enum(const std::string& key, const std::string& v, const std::map<std::string, E>& names) {
    const auto it = names.find(lower(trim(v)));
    if (it == names.end()) {
        std::string allowed;
        for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : ", ") + n;
        throw ConfigError(key + ": '" + v + "' is not one of " + allowed);
    }
    return it->second;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

#define NUM(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }
#define IDX(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_index(k, v); }
#define FLAG(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); }
#define PATH(field) [](ExperimentConfig& c, const std::string&, const std::string& v) { c.field = trim(v); }

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"plant.kind",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.plant = to_enum<PlantKind>(k, v, {{"lti", PlantKind::Lti}, {"tensegrity", PlantKind::Tensegrity}});
         }},
        {"plant.model", PATH(model)},
        {"plant.separate_disturbance", FLAG(separate_disturbance)},
        {"plant.sample_time", NUM(sample_time)},
        {"plant.max_dt", NUM(max_dt)},

        {"tensegrity.naca", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.airfoil.code = trim(v); }},
        {"tensegrity.chord", NUM(airfoil.chord)},
        {"tensegrity.rigid_extent", NUM(airfoil.rigid_extent)},
        {"tensegrity.mu", NUM(airfoil.mu)},
        {"tensegrity.error_bound", NUM(airfoil.error_bound)},
        {"tensegrity.bar_youngs_modulus", NUM(materials.bar.youngs_modulus)},
        {"tensegrity.bar_area", NUM(materials.bar.area)},
        {"tensegrity.bar_density", NUM(materials.bar.density)},
        {"tensegrity.string_youngs_modulus", NUM(materials.string.youngs_modulus)},
        {"tensegrity.string_area", NUM(materials.string.area)},
        {"tensegrity.string_density", NUM(materials.string.density)},
        {"tensegrity.gravity", NUM(materials.gravity)},
        {"tensegrity.min_string_force_density", NUM(materials.min_string_force_density)},
        {"tensegrity.rayleigh_alpha", NUM(materials.rayleigh_alpha)},
        {"tensegrity.rayleigh_beta", NUM(materials.rayleigh_beta)},
        {"tensegrity.taut_samples", IDX(taut_samples)},

        {"horizon.n", IDX(N)},

        {"weights.rho", NUM(rho)},
        {"weights.q", NUM(q_scale)},
        {"weights.s", NUM(s_scale)},
        {"weights.q_file", PATH(Q_file)},
        {"weights.s_file", PATH(S_file)},
        {"weights.r_file", PATH(R_file)},
        {"weights.t_file", PATH(T_file)},
        {"weights.storage",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.storage = to_enum<GainStorage>(k, v, {{"full", GainStorage::Full}, {"leading", GainStorage::LeadingBlockRow}});
         }},

        {"noise.w", NUM(w)},
        {"noise.v", NUM(v)},
        {"noise.w_file", PATH(W_file)},
        {"noise.v_file", PATH(V_file)},
        {"noise.inject", FLAG(inject)},
        {"noise.form",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.form = to_enum<CovarianceForm>(k, v, {{"information", CovarianceForm::Information},
                                                     {"printed", CovarianceForm::Printed}});
         }},

        {"identify.method",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.method = to_enum<IdentMethod>(k, v, {{"impulse", IdentMethod::Impulse}, {"whitenoise", IdentMethod::WhiteNoise}});
         }},
        {"identify.amplitude", NUM(amplitude)},
        {"identify.symmetric", FLAG(symmetric)},
        {"identify.samples", IDX(samples)},
        {"identify.markov", PATH(markov)},

        {"reference.kind",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.reference = to_enum<ReferenceKind>(k, v, {{"zero", ReferenceKind::Zero},
                                                         {"constant", ReferenceKind::Constant},
                                                         {"morph", ReferenceKind::Morph},
                                                         {"file", ReferenceKind::File}});
         }},
        {"reference.value", NUM(constant)},
        {"reference.morph_step", NUM(morph_step)},
        {"reference.file", PATH(reference_file)},

        {"run.seed",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             const Index s = to_index(k, v);
             if (s < 0) throw ConfigError(k + ": seed must be non-negative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"run.export_schedules", FLAG(export_schedules)},

        {"verify.plants", IDX(verify_plants)},
        {"verify.max_states", IDX(verify_max_states)},
        {"verify.max_io", IDX(verify_max_io)},
        {"verify.max_horizon", IDX(verify_max_horizon)},
        {"verify.tolerance", NUM(verify_tolerance)},
        {"verify.loop_tolerance", NUM(verify_loop_tolerance)},
        {"verify.perturb", NUM(verify_perturb)},
    };
    return table;
}

#undef NUM
#undef IDX
#undef FLAG
#undef PATH

Matrix load_square(const std::filesystem::path& path, Index n, const std::string& what) {
    const Matrix M = textio::read_matrix_csv(path);
    require_shape(M, n, n, what + " (" + path.string() + ")");
    return M;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& source) {
    ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config " + source.string() + ": " + e.message() + " at line " + std::to_string(e.line()));
    }
    ExperimentConfig cfg;
    cfg.source = source;
    cfg.text = text;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body) {
            const std::string full = lower(section) + "." + lower(key);
            const auto it = setters().find(full);
            if (it == setters().end()) throw ConfigError("config: unknown key [" + section + "] " + key);
            it->second(cfg, "[" + section + "] " + key, value.data());
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse_config(textio::read_file(path), path);
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
    if (p.empty() || p.is_absolute() || source.empty()) return p;
    return source.parent_path() / p;
}

void ExperimentConfig::validate() const {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    auto file_exists = [&](const std::filesystem::path& p, const std::string& what) {
        if (!p.empty()) need(std::filesystem::exists(resolve(p)), what + " not found: " + resolve(p).string());
    };
    need(N >= 1, "horizon N must be >= 1");
    need(rho > 0.0, "weights.rho must be positive");
    need(q_scale >= 0.0 && s_scale >= 0.0, "weights q and s must be non-negative");
    need(w >= 0.0 && v > 0.0, "noise: need w >= 0 and v > 0");
    need(amplitude > 0.0, "identify.amplitude must be positive");
    need(samples > N + 1, "identify.samples must exceed the horizon");
    need(sample_time > 0.0 && max_dt > 0.0, "plant sample_time and max_dt must be positive");
    need(verify_plants >= 1 && verify_max_states >= 1 && verify_max_io >= 1 && verify_max_horizon >= 1,
         "verify sizes must be >= 1");
    need(verify_tolerance > 0.0 && verify_loop_tolerance > 0.0 && verify_perturb >= 0.0, "verify tolerances");

    if (plant == PlantKind::Lti) {
        need(!model.empty(), "plant.model is required for kind = lti");
        file_exists(model, "plant.model");
        need(reference != ReferenceKind::Morph, "reference.kind = morph needs the tensegrity plant");
    } else {
        airfoil.validate();
        const auto& m = materials;
        for (const auto* mm : {&m.bar, &m.string})
            need(mm->youngs_modulus > 0.0 && mm->area > 0.0 && mm->density > 0.0, "member properties must be positive");
        need(m.min_string_force_density >= 0.0, "min_string_force_density must be non-negative");
        need(m.rayleigh_alpha >= 0.0 && m.rayleigh_beta >= 0.0, "Rayleigh coefficients must be non-negative");
        need(taut_samples >= 0, "tensegrity.taut_samples must be non-negative");
    }
    need(reference != ReferenceKind::File || !reference_file.empty(), "reference.kind = file needs reference.file");
    for (const auto& [p, what] : {std::pair{Q_file, "weights.q_file"}, {S_file, "weights.s_file"}, {R_file, "weights.r_file"},
                                  {T_file, "weights.t_file"}, {W_file, "noise.w_file"}, {V_file, "noise.v_file"},
                                  {reference_file, "reference.file"}})
        file_exists(p, what);
    if (!markov.empty()) file_exists(markov / "manifest.txt", "identify.markov bundle");
}

std::string ExperimentConfig::hash() const { return textio::git_blob_sha1(text); }

CostWeights ExperimentConfig::weights(Index p, Index m) const {
    CostWeights cw = CostWeights::scaled_identity(p, m, rho, q_scale, s_scale);
    if (!Q_file.empty()) cw.Q = load_square(resolve(Q_file), p, "Q");
    if (!S_file.empty()) cw.S = load_square(resolve(S_file), p, "S");
    if (!R_file.empty()) cw.R = load_square(resolve(R_file), m, "R");
    if (!T_file.empty()) cw.T = load_square(resolve(T_file), m, "T");
    cw.validate();
    return cw;
}

NoiseModel ExperimentConfig::noise(Index m_disturbance, Index p) const {
    NoiseModel nm = NoiseModel::scaled_identity(m_disturbance, p, w, v);
    if (!W_file.empty()) nm.W = load_square(resolve(W_file), m_disturbance, "W");
    if (!V_file.empty()) nm.V = load_square(resolve(V_file), p, "V");
    nm.validate();
    return nm;
}

std::string to_string(PlantKind k) { return k == PlantKind::Lti ? "lti" : "tensegrity"; }
std::string to_string(IdentMethod k) { return k == IdentMethod::Impulse ? "impulse" : "whitenoise"; }
std::string to_string(ReferenceKind k) {
    switch (k) {
    case ReferenceKind::Zero: return "zero";
    case ReferenceKind::Constant: return "constant";
    case ReferenceKind::Morph: return "morph";
    case ReferenceKind::File: return "file";
    }
    return "?";
}

} // namespace mtrack
