// mtrack: identify / track / verify from one INI config.
#include "mtrack/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace mtrack;

namespace {

ExperimentConfig configure(const std::string& path, const std::optional<std::uint64_t>& seed) {
    ExperimentConfig cfg = path.empty() ? parse_config("") : load_config(path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-horizon reference tracking from Markov data"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config, out = "out";
    std::optional<std::uint64_t> seed;
    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config, "INI file; built-in defaults when omitted")->check(CLI::ExistingFile);
        sub->add_option("-o,--out", out, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "override run.seed");
    };
    auto* identify = app.add_subcommand("identify", "black-box Markov parameter estimation");
    auto* track = app.add_subcommand("track", "synthesize gains and estimator, run the closed loop");
    auto* verify = app.add_subcommand("verify", "data route against the model route on random plants");
    for (auto* s : {identify, track, verify}) common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    ExperimentConfig cfg;
    try {
        cfg = configure(config, seed);
    } catch (const Error& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 1;
    }

    try {
        if (identify->parsed()) {
            cmd_identify(cfg, out, std::cout);
        } else if (track->parsed()) {
            const TrackResult r = cmd_track(cfg, out, std::cout);
            std::cout << "cost " << r.cost << "  terminal |e_N| " << r.terminal_error << " of |r_N| " << r.commanded
                      << "\n";
        } else {
            const VerifyReport rep = cmd_verify(cfg, out, std::cout);
            return rep.passed ? 0 : 2;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 1;
    } catch (const DimensionError& e) {
        std::cerr << "dimension mismatch: " << e.what() << "\n";
        return 1;
    } catch (const InstabilityError& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
