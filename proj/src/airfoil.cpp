#include "mtrack/airfoil.hpp"

#include "mtrack/textio.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mtrack::airfoil {

using tensegrity::NodeMatrix;
using tensegrity::TensegrityTopology;

NacaProfile NacaProfile::from_code(const std::string& code, double chord) {
    if (code.size() != 4 || !std::all_of(code.begin(), code.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw ConfigError("NACA code must be four digits, got '" + code + "'");
    if (!(chord > 0.0)) throw ConfigError("chord must be positive");
    NacaProfile p;
    p.max_camber = (code[0] - '0') / 100.0;
    p.camber_pos = (code[1] - '0') / 10.0;
    p.thickness = std::stoi(code.substr(2)) / 100.0;
    p.chord = chord;
    if (p.thickness <= 0.0) throw ConfigError("NACA " + code + " has zero thickness");
    if (p.max_camber > 0.0 && p.camber_pos <= 0.0) throw ConfigError("NACA " + code + ": camber without a camber position");
    return p;
}

double NacaProfile::camber(double s) const {
    const double x = s / chord, m = max_camber, pp = camber_pos;
    if (m == 0.0) return 0.0;
    if (x < pp) return chord * m / (pp * pp) * (2.0 * pp * x - x * x);
    return chord * m / ((1.0 - pp) * (1.0 - pp)) * ((1.0 - 2.0 * pp) + 2.0 * pp * x - x * x);
}

double NacaProfile::camber_slope(double s) const {
    const double x = s / chord, m = max_camber, pp = camber_pos;
    if (m == 0.0) return 0.0;
    if (x < pp) return 2.0 * m / (pp * pp) * (pp - x);
    return 2.0 * m / ((1.0 - pp) * (1.0 - pp)) * (pp - x);
}

double NacaProfile::half_thickness(double s) const {
    const double x = std::clamp(s / chord, 0.0, 1.0);
    // -0.1036 closes the trailing edge
    return 5.0 * thickness * chord *
           (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x - 0.1036 * x * x * x * x);
}

Point NacaProfile::upper(double s) const {
    const double th = std::atan(camber_slope(s)), yt = half_thickness(s);
    return {s - yt * std::sin(th), camber(s) + yt * std::cos(th)};
}

Point NacaProfile::lower(double s) const {
    const double th = std::atan(camber_slope(s)), yt = half_thickness(s);
    return {s + yt * std::sin(th), camber(s) - yt * std::cos(th)};
}

void AirfoilSpec::validate() const {
    (void)NacaProfile::from_code(code, chord);
    if (!(rigid_extent > 0.0 && rigid_extent < chord)) throw ConfigError("rigid extent must lie in (0, chord)");
    if (!(mu > 0.0 && mu < 1.0)) throw ConfigError("mu must lie in (0, 1)");
    if (!(error_bound > 0.0)) throw ConfigError("error bound must be positive");
}

namespace {

Point surface_at(const NacaProfile& p, Surface s, double t) { return s == Surface::Upper ? p.upper(t) : p.lower(t); }

} // namespace

double segment_deviation(const NacaProfile& profile, Surface surface, double a, double b) {
    if (!(b > a)) throw DimensionError("segment_deviation: empty interval");
    const Point A = surface_at(profile, surface, a), B = surface_at(profile, surface, b);
    const Point d = B - A;
    const double len = d.norm();
    auto dist = [&](double t) {
        const Point r = surface_at(profile, surface, t) - A;
        if (len == 0.0) return r.norm();
        const double along = std::clamp(r.dot(d) / (len * len), 0.0, 1.0);
        return (r - along * d).norm();
    };

    constexpr int samples = 256;
    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i <= samples; ++i) {
        const double v = dist(a + (b - a) * i / samples);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    // golden-section polish on the bracketing cells
    double lo = a + (b - a) * std::max(best - 1, 0) / samples;
    double hi = a + (b - a) * std::min(best + 1, samples) / samples;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), e = lo + gr * (hi - lo);
    double fc = dist(c), fe = dist(e);
    for (int it = 0; it < 80 && hi - lo > 1e-15 * profile.chord; ++it) {
        if (fc > fe) {
            hi = e;
            e = c;
            fe = fc;
            c = hi - gr * (hi - lo);
            fc = dist(c);
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + gr * (hi - lo);
            fe = dist(e);
        }
    }
    return std::max({best_val, fc, fe});
}

SurfaceNodes surface_points(const AirfoilSpec& spec) {
    spec.validate();
    const NacaProfile profile = NacaProfile::from_code(spec.code, spec.chord);
    auto fits = [&](double a, double b) {
        return segment_deviation(profile, Surface::Upper, a, b) <= spec.error_bound &&
               segment_deviation(profile, Surface::Lower, a, b) <= spec.error_bound;
    };

    SurfaceNodes out;
    double a = spec.rigid_extent;
    out.stations.push_back(a);
    while (a < spec.chord) {
        double next = spec.chord;
        if (!fits(a, spec.chord)) {
            double lo = a, hi = spec.chord;
            for (int it = 0; it < 64; ++it) {
                const double mid = 0.5 * (lo + hi);
                (fits(a, mid) ? lo : hi) = mid;
            }
            if (!(lo > a)) throw NumericalError("surface_points: no admissible segment past " + std::to_string(a));
            next = lo;
        }
        out.stations.push_back(next);
        a = next;
    }
    if (out.segments() < 2)
        throw ConfigError("error bound " + std::to_string(spec.error_bound) + " is too loose: fewer than 2 segments");
    for (double s : out.stations) {
        out.upper.push_back(profile.upper(s));
        out.lower.push_back(profile.lower(s));
    }
    return out;
}

NodeMatrix initial_nodes(const AirfoilSpec& spec, const SurfaceNodes& surfaces) {
    const Index q = surfaces.segments();
    NodeMatrix n = NodeMatrix::Zero(3, 3 * q + 1);
    auto put = [&](Index col, const Point& p) {
        n(0, col) = p.x();
        n(2, col) = p.y();
    };
    for (Index j = 0; j < q; ++j) {
        const auto js = static_cast<std::size_t>(j);
        put(j, spec.mu * surfaces.lower[js] + (1.0 - spec.mu) * surfaces.upper[js]);
        put(q + 1 + j, surfaces.lower[js]);
        put(2 * q + 1 + j, surfaces.upper[js]);
    }
    put(q, surfaces.upper.back()); // closed trailing edge
    return n;
}

TensegrityTopology initial_configuration(const AirfoilSpec& spec) {
    const SurfaceNodes surfaces = surface_points(spec);
    return TensegrityTopology::airfoil(surfaces.segments(), initial_nodes(spec, surfaces));
}

MorphSpec MorphSpec::linear(Index q, double step) {
    MorphSpec m;
    for (Index j = 1; j <= q; ++j) m.theta.push_back(static_cast<double>(j) * step);
    return m;
}

namespace {

Eigen::Vector3d rotate(const Eigen::Vector3d& v, double th) {
    const double c = std::cos(th), s = std::sin(th);
    return {c * v.x() + s * v.z(), v.y(), -s * v.x() + c * v.z()};
}

} // namespace

MorphTarget morph_target(const TensegrityTopology& topology, const MorphSpec& morph) {
    const Index q = topology.q;
    if (static_cast<Index>(morph.theta.size()) != q)
        throw DimensionError("morph_target: expected " + std::to_string(q) + " angles, got " +
                             std::to_string(morph.theta.size()));
    const NodeMatrix& n0 = topology.nodes;
    NodeMatrix n = n0;
    for (Index j = 1; j <= q; ++j) {
        const double th = morph.theta[static_cast<std::size_t>(j - 1)];
        n.col(j) = n.col(j - 1) + rotate(n0.col(j) - n0.col(j - 1), th);
        if (j < q) {
            n.col(q + 1 + j) = n.col(j) + rotate(n0.col(q + 1 + j) - n0.col(j), th);
            n.col(2 * q + 1 + j) = n.col(j) + rotate(n0.col(2 * q + 1 + j) - n0.col(j), th);
        }
    }
    return {n, topology.free_coordinates(n) - topology.free_coordinates(n0)};
}

std::vector<NodeMatrix> morph_path(const TensegrityTopology& topology, const MorphSpec& morph, Index samples) {
    if (samples < 1) throw DimensionError("morph_path: need at least one sample");
    std::vector<NodeMatrix> out;
    for (Index i = 1; i <= samples; ++i) {
        MorphSpec part = morph;
        for (double& th : part.theta) th *= static_cast<double>(i) / static_cast<double>(samples);
        out.push_back(morph_target(topology, part).nodes);
    }
    return out;
}

std::vector<double> spine_rotations(const TensegrityTopology& topology, const NodeMatrix& moved) {
    std::vector<double> out;
    for (Index j = 1; j <= topology.q; ++j) {
        const Eigen::Vector3d v = topology.nodes.col(j) - topology.nodes.col(j - 1);
        const Eigen::Vector3d w = moved.col(j) - moved.col(j - 1);
        // counter-clockwise angle in the x-z plane, negated to match the morph convention
        out.push_back(-std::atan2(v.x() * w.z() - v.z() * w.x(), v.x() * w.x() + v.z() * w.z()));
    }
    return out;
}

VectorList reference_trajectory(const Vector& displacement, Index N) {
    if (N < 1) throw DimensionError("reference_trajectory: horizon must be >= 1");
    VectorList r;
    for (Index k = 0; k <= N; ++k) r.push_back((static_cast<double>(k) / static_cast<double>(N)) * displacement);
    return r;
}

void write_nodes_csv(const std::filesystem::path& path, const NodeMatrix& nodes) {
    std::ostringstream os;
    os << "node,x,y,z\n";
    for (Index i = 0; i < nodes.cols(); ++i)
        os << i << ',' << textio::format_double(nodes(0, i)) << ',' << textio::format_double(nodes(1, i)) << ','
           << textio::format_double(nodes(2, i)) << '\n';
    textio::write_file(path, os.str());
}

} // namespace mtrack::airfoil
