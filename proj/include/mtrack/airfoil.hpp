#pragma once

#include "mtrack/tensegrity.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mtrack::airfoil {

using Point = Eigen::Vector2d; // (x, z)

// NACA 4-digit section, closed trailing edge. Surfaces are parametrised by the
// camber-line abscissa s in [0, chord]; thickness is laid off normal to the camber line.
struct NacaProfile {
    double max_camber = 0.0; // fraction of chord
    double camber_pos = 0.0; // fraction of chord
    double thickness = 0.0;  // fraction of chord
    double chord = 1.0;

    static NacaProfile from_code(const std::string& code, double chord);

    double camber(double s) const;
    double camber_slope(double s) const;
    double half_thickness(double s) const;
    Point upper(double s) const;
    Point lower(double s) const;
};

enum class Surface { Upper, Lower };

struct AirfoilSpec {
    std::string code = "2412";
    double chord = 1.0;
    double rigid_extent = 0.3;
    double mu = 1.0 / 3.0; // weight of the lower surface in the spine nodes
    double error_bound = 1e-3;

    void validate() const;
};

/// Max distance between the curve on [a, b] and the straight segment joining its ends.
double segment_deviation(const NacaProfile& profile, Surface surface, double a, double b);

struct SurfaceNodes {
    std::vector<double> stations; // shared parameter values, rigid_extent .. chord
    std::vector<Point> upper;
    std::vector<Point> lower;

    Index segments() const { return static_cast<Index>(stations.size()) - 1; }
};

/// Greedy farthest-advance segmentation from the rigid extent to the trailing edge.
/// Both surfaces share stations; each segment on either surface deviates by <= the bound.
SurfaceNodes surface_points(const AirfoilSpec& spec);

tensegrity::NodeMatrix initial_nodes(const AirfoilSpec& spec, const SurfaceNodes& surfaces);
tensegrity::TensegrityTopology initial_configuration(const AirfoilSpec& spec);

struct MorphSpec {
    std::vector<double> theta; // absolute rotation of spine bar j, radians; positive moves the tail down

    /// theta_j = j * step for j = 1..q
    static MorphSpec linear(Index q, double step);
};

struct MorphTarget {
    tensegrity::NodeMatrix nodes;
    Vector displacement; // free-node (x, z) offsets, same ordering as the plant output
};

/// Rotates spine bar j about its inboard node by theta_j, chained from the root. The two
/// vertical bars at spine node j turn with the spine bar ending there. Self-intersection
/// of the morphed shape is not checked.
MorphTarget morph_target(const tensegrity::TensegrityTopology& topology, const MorphSpec& morph);

/// Intermediate shapes at fractions 1/samples .. 1 of every angle.
std::vector<tensegrity::NodeMatrix> morph_path(const tensegrity::TensegrityTopology& topology, const MorphSpec& morph,
                                               Index samples);

/// Rotation of every spine bar between two node matrices (atan2 round trip).
std::vector<double> spine_rotations(const tensegrity::TensegrityTopology& topology,
                                    const tensegrity::NodeMatrix& moved);

/// r_k = (k / N) * displacement for k = 0..N.
VectorList reference_trajectory(const Vector& displacement, Index N);

/// One row per node: index, x, y, z.
void write_nodes_csv(const std::filesystem::path& path, const tensegrity::NodeMatrix& nodes);

} // namespace mtrack::airfoil
