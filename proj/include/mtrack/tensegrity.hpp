#pragma once

#include "mtrack/blackbox.hpp"
#include "mtrack/common.hpp"

#include <vector>

namespace mtrack::tensegrity {

using NodeMatrix = Eigen::Matrix3Xd; // columns are nodes (x, y, z)

/// Start/end node of one member, 0-based.
struct MemberIndex {
    Index start;
    Index end;
};

// Airfoil index tables for complexity q. Node numbering (0-based here):
//   0 .. q-1      spine nodes between the surfaces
//   q             trailing edge
//   q+1 .. 2q     nodes on the surface weighted by mu
//   2q+1 .. 3q    nodes on the surface weighted by 1-mu
std::vector<MemberIndex> bar_index_table(Index q);    // 3q rows
std::vector<MemberIndex> string_index_table(Index q); // 6q-4 rows

/// Signed incidence matrix: row j has -1 at the start node and +1 at the end node.
Matrix incidence_from_pairs(const std::vector<MemberIndex>& pairs, Index node_count);

struct Connectivity {
    Matrix Cb; // 3q x (3q+1)
    Matrix Cs; // (6q-4) x (3q+1)
};

Connectivity build_connectivity(Index q);

struct TensegrityTopology {
    Index q = 0;
    NodeMatrix nodes;               // 3 x (3q+1), metres
    Matrix Cb, Cs;                  // bar / string incidence
    std::vector<Index> fixed_nodes; // held in place; the rest are free in the x-z plane

    /// Topology for complexity q with the root spine node and its two surface nodes fixed.
    static TensegrityTopology airfoil(Index q, NodeMatrix nodes);

    Index node_count() const { return nodes.cols(); }
    Index bar_count() const { return Cb.rows(); }
    Index string_count() const { return Cs.rows(); }
    Index member_count() const { return bar_count() + string_count(); }

    Matrix connectivity() const; // [Cb; Cs]
    std::vector<MemberIndex> members() const;
    std::vector<Index> free_nodes() const;
    bool is_fixed(Index node) const;

    NodeMatrix bar_vectors() const { return nodes * Cb.transpose(); }
    NodeMatrix string_vectors() const { return nodes * Cs.transpose(); }

    /// Planar (x, z) coordinates of the free nodes, stacked node by node.
    Vector free_coordinates(const NodeMatrix& n) const;
};

struct MemberMaterial {
    double youngs_modulus; // Pa
    double area;           // m^2
    double density;        // kg/m^3
};

/// Member and structural parameters. None of these come from measured hardware; the
/// defaults are chosen so the structure is prestress-stable and the fastest mode stays
/// well inside the explicit integrator's stability region at dt = 1e-4 s.
struct Materials {
    MemberMaterial bar{2.0e9, 1.0e-6, 2.0e5};
    MemberMaterial string{5.0e8, 1.0e-6, 1.0e4};
    double gravity = 9.81;                    // m/s^2
    double min_string_force_density = 100.0;  // N/m, lower bound in the prestress solve
    double rayleigh_alpha = 0.1;              // 1/s
    double rayleigh_beta = 1e-4;              // s
};

/// Mass/stiffness assembly on the full 3*nn coordinate vector (node-major x, y, z).
Matrix mass_matrix(const Matrix& C, const Vector& member_mass);        // (1/6)(|C|'m|C| + diag(|C|'m|C|)) (x) I3
Matrix stiffness_matrix(const Matrix& C, const Vector& force_density); // (C' diag(x) C) (x) I3
Vector gravity_vector(const Matrix& C, const Vector& member_mass, double g); // (g/2)(|C|'m) (x) [0 0 1]'

struct FemModel {
    TensegrityTopology topology;
    Materials materials;
    Vector EA;            // per member, bars first
    Vector mass;          // per member
    Vector rest_length;   // per member at the prestressed rest configuration
    Vector prestress;     // force densities at rest (N/m), tension positive
    Matrix M;             // 3nn x 3nn
    Matrix K0;            // force-density stiffness at rest, 3nn x 3nn
    Vector g;             // 3nn

    // Planar reduction: (x, z) of each free node.
    std::vector<Index> free_dofs; // indices into the 3nn vector
    std::vector<Index> node_dof;  // first planar DOF of each node, -1 when fixed
    Matrix M_free;
    Matrix D_free;       // alpha M_free + beta K_tangent_free(rest)
    Matrix M_free_inv;
    Vector g_free;
    double length_scale = 1.0; // chordwise extent, used for the divergence check

    Index string_offset() const { return topology.bar_count(); }
    Index dof_count() const { return static_cast<Index>(free_dofs.size()); }
};

/// Assembles M, K, g and solves the prestress: the minimum-norm force-density vector
/// in equilibrium with gravity whose string entries are >= min_string_force_density.
/// Rest lengths follow from the force-density law.
///
/// Each configuration in `keep_taut` adds the same floor on the string force densities
/// that would hold that shape in equilibrium with the bar rest lengths unchanged, so a
/// planned shape change never asks a string to push.
FemModel assemble_fem(const TensegrityTopology& topology, const Materials& materials,
                      const std::vector<NodeMatrix>& keep_taut = {});

/// x_j = EA_j (l_j - l0_j) / (l0_j l_j); strings carry nothing when l_j < l0_j.
Vector force_densities(const FemModel& model, const NodeMatrix& nodes, const Vector& rest_length);

/// Tangent stiffness on the free planar DOFs at a configuration.
Matrix tangent_stiffness(const FemModel& model, const NodeMatrix& nodes, const Vector& rest_length);

/// Residual of the static equilibrium K n + g on the free planar DOFs.
Vector equilibrium_residual(const FemModel& model, const NodeMatrix& nodes, const Vector& rest_length);

struct DynamicState {
    Vector position; // free planar DOFs
    Vector velocity;
};

DynamicState rest_state(const FemModel& model);
NodeMatrix node_matrix(const FemModel& model, const Vector& position);

/// Rest lengths with the string increments u applied.
Vector actuated_rest_length(const FemModel& model, const Vector& string_increments);

Vector acceleration(const FemModel& model, const DynamicState& state, const Vector& rest_length);

/// One classical RK4 step of M n'' + D n' + K(n) n = -g with rest lengths held.
/// Throws InstabilityError when a node leaves a box of 10x the chordwise extent.
DynamicState step_dynamics(const FemModel& model, const DynamicState& state, const Vector& string_increments,
                           double dt);

/// Kinetic + elastic + gravitational energy.
double total_energy(const FemModel& model, const DynamicState& state, const Vector& rest_length);

/// The structure as a black box: inputs are string rest-length increments, outputs
/// are free-node (x, z) displacements from rest, sampled before each step's input acts.
class TensegrityPlant final : public BlackBox {
public:
    TensegrityPlant(FemModel model, double sample_time = 0.01, double max_dt = 1e-4);

    Index input_dim() const override { return model_.topology.string_count(); }
    Index output_dim() const override { return model_.dof_count(); }

    Vector step(const Vector& u) override;

    bool resettable() const override { return true; }
    void reset() override;
    std::string id() const override { return "tensegrity"; }

    const FemModel& model() const { return model_; }
    const DynamicState& state() const { return state_; }
    double sample_time() const { return sample_time_; }
    Index substeps() const { return substeps_; }

    /// Node matrices and string lengths recorded at each sampling instant.
    void record_history(bool on) { record_ = on; }
    const std::vector<NodeMatrix>& node_history() const { return nodes_; }

private:
    FemModel model_;
    double sample_time_;
    Index substeps_;
    DynamicState state_;
    Vector rest_output_;
    bool record_ = false;
    std::vector<NodeMatrix> nodes_;
};

TensegrityPlant as_blackbox(const FemModel& model, double sample_time = 0.01, double max_dt = 1e-4);

} // namespace mtrack::tensegrity
