#include "mtrack/tensegrity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mtrack::tensegrity {

namespace {

void require_complexity(Index q) {
    if (q < 2) throw DimensionError("tensegrity complexity q must be >= 2, got " + std::to_string(q));
}

// Kronecker product with I3 (node-major x, y, z).
Matrix kron_i3(const Matrix& a) {
    Matrix out = Matrix::Zero(3 * a.rows(), 3 * a.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            for (Index d = 0; d < 3; ++d) out(3 * i + d, 3 * j + d) = a(i, j);
    return out;
}

// Pairs in the 1-based numbering of the index tables, shifted to 0-based on output.
MemberIndex pair(Index a, Index b) { return {a - 1, b - 1}; }

// Planar equilibrium matrix: column j holds the unit-force-density contribution of
// member j to the free (x, z) DOFs, so that A x = g_free at equilibrium.
Matrix equilibrium_matrix(const TensegrityTopology& topo, const NodeMatrix& nodes, const std::vector<Index>& dof_of_node) {
    const auto members = topo.members();
    const auto free = topo.free_nodes();
    Matrix A = Matrix::Zero(2 * static_cast<Index>(free.size()), static_cast<Index>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j) {
        const auto [a, b] = members[j];
        const Eigen::Vector3d d = nodes.col(b) - nodes.col(a);
        const auto col = static_cast<Index>(j);
        if (dof_of_node[static_cast<std::size_t>(a)] >= 0) {
            A(dof_of_node[static_cast<std::size_t>(a)], col) += d.x();
            A(dof_of_node[static_cast<std::size_t>(a)] + 1, col) += d.z();
        }
        if (dof_of_node[static_cast<std::size_t>(b)] >= 0) {
            A(dof_of_node[static_cast<std::size_t>(b)], col) -= d.x();
            A(dof_of_node[static_cast<std::size_t>(b)] + 1, col) -= d.z();
        }
    }
    return A;
}

// Lawson-Hanson active-set NNLS: min |E u - f| subject to u >= 0.
Vector nnls(const Matrix& E, const Vector& f) {
    const Index n = E.cols();
    Vector u = Vector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * E.cwiseAbs().colwise().sum().maxCoeff() *
                       static_cast<double>(std::max(E.rows(), n));

    auto solve_passive = [&]() {
        std::vector<Index> idx;
        for (Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Matrix Ep(E.rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) Ep.col(static_cast<Index>(c)) = E.col(idx[c]);
        const Vector zp = Ep.colPivHouseholderQr().solve(f);
        Vector z = Vector::Zero(n);
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Index>(c));
        return z;
    };

    for (Index outer = 0; outer < 3 * n + 10; ++outer) {
        const Vector w = E.transpose() * (f - E * u);
        Index t = -1;
        double best = tol;
        for (Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
                best = w(j);
                t = j;
            }
        if (t < 0) return u;
        passive[static_cast<std::size_t>(t)] = true;

        for (Index inner = 0; inner < 3 * n + 10; ++inner) {
            const Vector z = solve_passive();
            double alpha = 1.0;
            bool clipped = false;
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    alpha = std::min(alpha, u(j) / (u(j) - z(j)));
                    clipped = true;
                }
            if (!clipped) {
                u = z;
                break;
            }
            u += alpha * (z - u);
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && u(j) <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    u(j) = 0.0;
                }
        }
    }
    throw NumericalError("nnls: iteration limit reached");
}

// min 1/2 |x|^2  s.t.  A x = b,  G x >= h.
// Equalities are eliminated with the SVD of A; what is left is a least-distance
// program in the null space, solved through NNLS.
Vector min_norm_polyhedral(const Matrix& A, const Vector& b, const Matrix& G, const Vector& h) {
    const Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double cut = 1e-12 * std::max(1.0, svd.singularValues()(0));
    Index rank = 0;
    while (rank < svd.singularValues().size() && svd.singularValues()(rank) > cut) ++rank;
    if (rank < A.rows()) throw NumericalError("prestress: equilibrium matrix is rank deficient; structure is a mechanism");

    const Matrix& V = svd.matrixV();
    const Vector sb = (svd.matrixU().transpose() * b).head(rank).cwiseQuotient(svd.singularValues().head(rank));
    const Vector x0 = V.leftCols(rank) * sb;
    const Matrix Nb = V.rightCols(A.cols() - rank);

    const Matrix Gz = G * Nb;
    const Vector hz = h - G * x0;
    if (Gz.cols() == 0 || (hz.array() <= 0.0).all()) {
        if ((hz.array() > 1e-9 * std::max(1.0, h.cwiseAbs().maxCoeff())).any())
            throw NumericalError("prestress: no force-density vector meets the string bounds in equilibrium");
        return x0;
    }
    Matrix E(Gz.cols() + 1, Gz.rows());
    E << Gz.transpose(), hz.transpose();
    Vector f = Vector::Zero(E.rows());
    f(f.size() - 1) = 1.0;
    const Vector r = E * nnls(E, f) - f;
    if (r.norm() < 1e-12 || -r(r.size() - 1) < 1e-12)
        throw NumericalError("prestress: no force-density vector meets the string bounds in equilibrium");
    const Vector z = r.head(Gz.cols()) / -r(r.size() - 1);
    return x0 + Nb * z;
}

} // namespace

std::vector<MemberIndex> bar_index_table(Index q) {
    require_complexity(q);
    std::vector<MemberIndex> out;
    for (Index i = 1; i <= q; ++i) out.push_back(pair(i, i + 1));
    for (Index i = q + 1; i <= 2 * q; ++i) out.push_back(pair(i - q, i + 1));
    for (Index i = 2 * q + 1; i <= 3 * q; ++i) out.push_back(pair(i - 2 * q, i + 1));
    return out;
}

std::vector<MemberIndex> string_index_table(Index q) {
    require_complexity(q);
    std::vector<MemberIndex> out;
    for (Index i = 1; i <= q - 1; ++i) out.push_back(pair(i + 1 + q, i + 2 + q));
    for (Index i = 2; i <= q; ++i) out.push_back(pair(q + i, i));
    for (Index i = 1; i <= q - 1; ++i) out.push_back(pair(i, q + 2 + i));
    for (Index i = 1; i <= q - 1; ++i) out.push_back(pair(i, 2 * q + 2 + i));
    for (Index i = 2; i <= q; ++i) out.push_back(pair(2 * q + i, i));
    for (Index i = 1; i <= q - 1; ++i) out.push_back(pair(i + 1 + 2 * q, i + 2 + 2 * q));
    out.push_back(pair(2 * q + 1, q + 1));
    out.push_back(pair(3 * q + 1, q + 1));
    return out;
}

Matrix incidence_from_pairs(const std::vector<MemberIndex>& pairs, Index node_count) {
    Matrix C = Matrix::Zero(static_cast<Index>(pairs.size()), node_count);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const auto [a, b] = pairs[j];
        if (a < 0 || b < 0 || a >= node_count || b >= node_count || a == b)
            throw DimensionError("incidence_from_pairs: bad member " + std::to_string(j));
        C(static_cast<Index>(j), a) = -1.0;
        C(static_cast<Index>(j), b) = 1.0;
    }
    return C;
}

Connectivity build_connectivity(Index q) {
    const Index nn = 3 * q + 1;
    return {incidence_from_pairs(bar_index_table(q), nn), incidence_from_pairs(string_index_table(q), nn)};
}

TensegrityTopology TensegrityTopology::airfoil(Index q, NodeMatrix nodes) {
    auto conn = build_connectivity(q);
    if (nodes.cols() != 3 * q + 1)
        throw DimensionError("airfoil topology: expected " + std::to_string(3 * q + 1) + " nodes, got " + std::to_string(nodes.cols()));
    // Spine root and the two surface nodes above/below it sit on the rigid segment.
    return {q, std::move(nodes), std::move(conn.Cb), std::move(conn.Cs), {0, q + 1, 2 * q + 1}};
}

Matrix TensegrityTopology::connectivity() const {
    Matrix C(member_count(), node_count());
    C << Cb, Cs;
    return C;
}

std::vector<MemberIndex> TensegrityTopology::members() const {
    const Matrix C = connectivity();
    std::vector<MemberIndex> out;
    for (Index j = 0; j < C.rows(); ++j) {
        Index start = -1, end = -1;
        for (Index i = 0; i < C.cols(); ++i) {
            if (C(j, i) == -1.0) start = i;
            else if (C(j, i) == 1.0) end = i;
        }
        if (start < 0 || end < 0) throw DimensionError("connectivity row " + std::to_string(j) + " is not a member");
        out.push_back({start, end});
    }
    return out;
}

bool TensegrityTopology::is_fixed(Index node) const {
    return std::find(fixed_nodes.begin(), fixed_nodes.end(), node) != fixed_nodes.end();
}

std::vector<Index> TensegrityTopology::free_nodes() const {
    std::vector<Index> out;
    for (Index i = 0; i < node_count(); ++i)
        if (!is_fixed(i)) out.push_back(i);
    return out;
}

Vector TensegrityTopology::free_coordinates(const NodeMatrix& n) const {
    const auto free = free_nodes();
    Vector out(2 * static_cast<Index>(free.size()));
    for (std::size_t i = 0; i < free.size(); ++i) {
        out(2 * static_cast<Index>(i)) = n(0, free[i]);
        out(2 * static_cast<Index>(i) + 1) = n(2, free[i]);
    }
    return out;
}

Matrix mass_matrix(const Matrix& C, const Vector& member_mass) {
    require_length(member_mass, C.rows(), "mass_matrix: member masses");
    const Matrix absC = C.cwiseAbs();
    const Matrix core = absC.transpose() * member_mass.asDiagonal() * absC;
    const Matrix nodal = (core + Matrix(core.diagonal().asDiagonal())) / 6.0;
    return kron_i3(nodal);
}

Matrix stiffness_matrix(const Matrix& C, const Vector& force_density) {
    require_length(force_density, C.rows(), "stiffness_matrix: force densities");
    return kron_i3(C.transpose() * force_density.asDiagonal() * C);
}

Vector gravity_vector(const Matrix& C, const Vector& member_mass, double g) {
    require_length(member_mass, C.rows(), "gravity_vector: member masses");
    const Vector nodal = 0.5 * g * (C.cwiseAbs().transpose() * member_mass);
    Vector out = Vector::Zero(3 * nodal.size());
    for (Index i = 0; i < nodal.size(); ++i) out(3 * i + 2) = nodal(i);
    return out;
}

namespace {

Eigen::Vector3d node_position(const FemModel& model, const Vector& position, Index node) {
    Eigen::Vector3d p = model.topology.nodes.col(node);
    const Index d = model.node_dof[static_cast<std::size_t>(node)];
    if (d >= 0) {
        p.x() = position(d);
        p.z() = position(d + 1);
    }
    return p;
}

double member_force_density(const FemModel& model, Index j, double l, double l0) {
    if (j >= model.string_offset() && l < l0) return 0.0;
    return model.EA(j) * (l - l0) / (l0 * l);
}

// Member forces acting on the free planar DOFs (tension pulls the ends together).
void internal_forces(const FemModel& model, const std::vector<MemberIndex>& members, const Vector& position,
                     const Vector& rest_length, Vector& out) {
    out.setZero(model.dof_count());
    for (std::size_t j = 0; j < members.size(); ++j) {
        const auto [a, b] = members[j];
        const Eigen::Vector3d d = node_position(model, position, b) - node_position(model, position, a);
        const double l = d.norm();
        const double x = member_force_density(model, static_cast<Index>(j), l, rest_length(static_cast<Index>(j)));
        if (x == 0.0) continue;
        const Index da = model.node_dof[static_cast<std::size_t>(a)], db = model.node_dof[static_cast<std::size_t>(b)];
        if (da >= 0) {
            out(da) += x * d.x();
            out(da + 1) += x * d.z();
        }
        if (db >= 0) {
            out(db) -= x * d.x();
            out(db + 1) -= x * d.z();
        }
    }
}

void check_rest_length(const Vector& l0, const char* who) {
    for (Index j = 0; j < l0.size(); ++j)
        if (!(l0(j) > 0.0)) throw NumericalError(std::string(who) + ": non-positive rest length on member " + std::to_string(j));
}

} // namespace

FemModel assemble_fem(const TensegrityTopology& topology, const Materials& materials,
                      const std::vector<NodeMatrix>& keep_taut) {
    FemModel model;
    model.topology = topology;
    model.materials = materials;
    const auto members = topology.members();
    const Index nm = topology.member_count(), nb = topology.bar_count();
    const Matrix C = topology.connectivity();

    Vector length(nm);
    for (Index j = 0; j < nm; ++j) {
        const auto [a, b] = members[static_cast<std::size_t>(j)];
        length(j) = (topology.nodes.col(b) - topology.nodes.col(a)).norm();
        if (!(length(j) > 0.0)) throw DimensionError("assemble_fem: member " + std::to_string(j) + " has zero length");
    }
    model.EA.resize(nm);
    model.mass.resize(nm);
    for (Index j = 0; j < nm; ++j) {
        const MemberMaterial& mat = j < nb ? materials.bar : materials.string;
        model.EA(j) = mat.youngs_modulus * mat.area;
        model.mass(j) = mat.density * mat.area * length(j);
    }
    model.M = mass_matrix(C, model.mass);
    model.g = gravity_vector(C, model.mass, materials.gravity);

    model.node_dof.assign(static_cast<std::size_t>(topology.node_count()), -1);
    for (Index i : topology.free_nodes()) {
        model.node_dof[static_cast<std::size_t>(i)] = static_cast<Index>(model.free_dofs.size());
        model.free_dofs.push_back(3 * i);
        model.free_dofs.push_back(3 * i + 2);
    }
    const Index nf = model.dof_count();
    model.g_free.resize(nf);
    model.M_free.resize(nf, nf);
    for (Index r = 0; r < nf; ++r) {
        model.g_free(r) = model.g(model.free_dofs[static_cast<std::size_t>(r)]);
        for (Index c = 0; c < nf; ++c)
            model.M_free(r, c) = model.M(model.free_dofs[static_cast<std::size_t>(r)], model.free_dofs[static_cast<std::size_t>(c)]);
    }

    const Index ns = nm - nb;
    const double floor = materials.min_string_force_density;
    Matrix G = Matrix::Zero(ns * (1 + static_cast<Index>(keep_taut.size())), nm);
    Vector h = Vector::Constant(G.rows(), floor);
    G.block(0, nb, ns, ns).setIdentity();
    for (std::size_t c = 0; c < keep_taut.size(); ++c) {
        const NodeMatrix& nc = keep_taut[c];
        if (nc.cols() != topology.node_count()) throw DimensionError("assemble_fem: keep-taut configuration has wrong node count");
        // Bars keep their rest lengths, so their force densities shift by a known amount;
        // the strings then follow uniquely from equilibrium.
        const Matrix Ac = equilibrium_matrix(topology, nc, model.node_dof);
        Vector shift = Vector::Zero(nb);
        for (Index j = 0; j < nb; ++j) {
            const auto [a, b] = members[static_cast<std::size_t>(j)];
            const double lc = (nc.col(b) - nc.col(a)).norm();
            shift(j) = model.EA(j) * (lc - length(j)) / (length(j) * lc);
        }
        const Matrix As = Ac.rightCols(ns), Ab = Ac.leftCols(nb);
        if (As.rows() != As.cols()) throw DimensionError("assemble_fem: keep-taut needs as many strings as free DOFs");
        const Eigen::FullPivLU<Matrix> lu(As);
        if (!lu.isInvertible()) throw NumericalError("assemble_fem: strings do not determine equilibrium at a keep-taut configuration");
        const auto rows = static_cast<Index>(ns * (1 + static_cast<Index>(c)));
        G.block(rows, 0, ns, nb) = -lu.solve(Ab);
        h.segment(rows, ns) -= lu.solve(model.g_free - Ab * shift);
    }
    const Matrix A = equilibrium_matrix(topology, topology.nodes, model.node_dof);
    model.prestress = min_norm_polyhedral(A, model.g_free, G, h);

    model.rest_length = (model.EA.array() * length.array() / (model.EA.array() + model.prestress.array() * length.array())).matrix();
    check_rest_length(model.rest_length, "assemble_fem");
    model.K0 = stiffness_matrix(C, model.prestress);

    Eigen::LLT<Matrix> llt(model.M_free);
    if (llt.info() != Eigen::Success) throw NumericalError("assemble_fem: free mass matrix is not positive definite");
    model.M_free_inv = llt.solve(Matrix::Identity(nf, nf));
    model.D_free = materials.rayleigh_alpha * model.M_free +
                   materials.rayleigh_beta * tangent_stiffness(model, topology.nodes, model.rest_length);

    model.length_scale = std::max(topology.nodes.row(0).maxCoeff() - topology.nodes.row(0).minCoeff(), 1e-12);
    return model;
}

Vector force_densities(const FemModel& model, const NodeMatrix& nodes, const Vector& rest_length) {
    require_length(rest_length, model.topology.member_count(), "force_densities: rest lengths");
    const auto members = model.topology.members();
    Vector x(static_cast<Index>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j) {
        const double l = (nodes.col(members[j].end) - nodes.col(members[j].start)).norm();
        x(static_cast<Index>(j)) = member_force_density(model, static_cast<Index>(j), l, rest_length(static_cast<Index>(j)));
    }
    return x;
}

Matrix tangent_stiffness(const FemModel& model, const NodeMatrix& nodes, const Vector& rest_length) {
    require_length(rest_length, model.topology.member_count(), "tangent_stiffness: rest lengths");
    const auto members = model.topology.members();
    const Index nn = model.topology.node_count();
    Matrix K = Matrix::Zero(3 * nn, 3 * nn);
    for (std::size_t j = 0; j < members.size(); ++j) {
        const auto [a, b] = members[j];
        const Eigen::Vector3d d = nodes.col(b) - nodes.col(a);
        const double l = d.norm();
        const auto jj = static_cast<Index>(j);
        const double x = member_force_density(model, jj, l, rest_length(jj));
        if (jj >= model.string_offset() && l < rest_length(jj)) continue; // slack
        const Eigen::Vector3d e = d / l;
        const Eigen::Matrix3d ee = e * e.transpose();
        const Eigen::Matrix3d k = x * (Eigen::Matrix3d::Identity() - ee) + (model.EA(jj) / rest_length(jj)) * ee;
        K.block<3, 3>(3 * a, 3 * a) += k;
        K.block<3, 3>(3 * b, 3 * b) += k;
        K.block<3, 3>(3 * a, 3 * b) -= k;
        K.block<3, 3>(3 * b, 3 * a) -= k;
    }
    const Index nf = model.dof_count();
    Matrix out(nf, nf);
    for (Index r = 0; r < nf; ++r)
        for (Index c = 0; c < nf; ++c)
            out(r, c) = K(model.free_dofs[static_cast<std::size_t>(r)], model.free_dofs[static_cast<std::size_t>(c)]);
    return out;
}

Vector equilibrium_residual(const FemModel& model, const NodeMatrix& nodes, const Vector& rest_length) {
    require_length(rest_length, model.topology.member_count(), "equilibrium_residual: rest lengths");
    Vector f;
    internal_forces(model, model.topology.members(), model.topology.free_coordinates(nodes), rest_length, f);
    return model.g_free - f;
}

DynamicState rest_state(const FemModel& model) {
    return {model.topology.free_coordinates(model.topology.nodes), Vector::Zero(model.dof_count())};
}

NodeMatrix node_matrix(const FemModel& model, const Vector& position) {
    require_length(position, model.dof_count(), "node_matrix: position");
    NodeMatrix n = model.topology.nodes;
    for (Index i = 0; i < n.cols(); ++i) n.col(i) = node_position(model, position, i);
    return n;
}

Vector actuated_rest_length(const FemModel& model, const Vector& string_increments) {
    require_length(string_increments, model.topology.string_count(), "actuated_rest_length: string increments");
    Vector l0 = model.rest_length;
    l0.tail(string_increments.size()) += string_increments;
    check_rest_length(l0, "actuated_rest_length");
    return l0;
}

Vector acceleration(const FemModel& model, const DynamicState& state, const Vector& rest_length) {
    Vector f;
    internal_forces(model, model.topology.members(), state.position, rest_length, f);
    return model.M_free_inv * (f - model.g_free - model.D_free * state.velocity);
}

namespace {

struct Integrator {
    const FemModel& model;
    std::vector<MemberIndex> members;
    Vector f, k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v, x, v;

    explicit Integrator(const FemModel& m) : model(m), members(m.topology.members()) {}

    void accel(const Vector& pos, const Vector& vel, const Vector& l0, Vector& out) {
        internal_forces(model, members, pos, l0, f);
        f -= model.g_free;
        f.noalias() -= model.D_free * vel;
        out.noalias() = model.M_free_inv * f;
    }

    void step(DynamicState& s, const Vector& l0, double dt) {
        k1x = s.velocity;
        accel(s.position, s.velocity, l0, k1v);
        x = s.position + 0.5 * dt * k1x;
        v = s.velocity + 0.5 * dt * k1v;
        k2x = v;
        accel(x, v, l0, k2v);
        x = s.position + 0.5 * dt * k2x;
        v = s.velocity + 0.5 * dt * k2v;
        k3x = v;
        accel(x, v, l0, k3v);
        x = s.position + dt * k3x;
        v = s.velocity + dt * k3v;
        k4x = v;
        accel(x, v, l0, k4v);
        s.position += (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        s.velocity += (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }

    void check(const DynamicState& s) const {
        const double bound = 10.0 * model.length_scale;
        if (!s.position.allFinite() || !s.velocity.allFinite() || s.position.cwiseAbs().maxCoeff() > bound)
            throw InstabilityError("tensegrity: node left the admissible region");
    }
};

} // namespace

DynamicState step_dynamics(const FemModel& model, const DynamicState& state, const Vector& string_increments,
                           double dt) {
    if (!(dt > 0.0)) throw DimensionError("step_dynamics: dt must be positive");
    const Vector l0 = actuated_rest_length(model, string_increments);
    Integrator integ(model);
    DynamicState out = state;
    integ.step(out, l0, dt);
    integ.check(out);
    return out;
}

double total_energy(const FemModel& model, const DynamicState& state, const Vector& rest_length) {
    const double kinetic = 0.5 * state.velocity.dot(model.M_free * state.velocity);
    const auto members = model.topology.members();
    double elastic = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
        const auto jj = static_cast<Index>(j);
        const double l = (node_position(model, state.position, members[j].end) -
                          node_position(model, state.position, members[j].start)).norm();
        const double l0 = rest_length(jj);
        if (jj >= model.string_offset() && l < l0) continue;
        elastic += 0.5 * model.EA(jj) * (l - l0) * (l - l0) / l0;
    }
    return kinetic + elastic + model.g_free.dot(state.position);
}

TensegrityPlant::TensegrityPlant(FemModel model, double sample_time, double max_dt)
    : model_(std::move(model)), sample_time_(sample_time) {
    if (!(sample_time > 0.0) || !(max_dt > 0.0)) throw DimensionError("TensegrityPlant: sample time and dt must be positive");
    substeps_ = static_cast<Index>(std::ceil(sample_time / max_dt - 1e-9));
    reset();
}

void TensegrityPlant::reset() {
    state_ = rest_state(model_);
    rest_output_ = state_.position;
    nodes_.clear();
}

Vector TensegrityPlant::step(const Vector& u) {
    require_length(u, input_dim(), "TensegrityPlant::step: input");
    const Vector y = state_.position - rest_output_;
    if (record_) nodes_.push_back(node_matrix(model_, state_.position));
    const Vector l0 = actuated_rest_length(model_, u);
    Integrator integ(model_);
    const double dt = sample_time_ / static_cast<double>(substeps_);
    for (Index s = 0; s < substeps_; ++s) integ.step(state_, l0, dt);
    integ.check(state_);
    return y;
}

TensegrityPlant as_blackbox(const FemModel& model, double sample_time, double max_dt) {
    return TensegrityPlant(model, sample_time, max_dt);
}

} // namespace mtrack::tensegrity
