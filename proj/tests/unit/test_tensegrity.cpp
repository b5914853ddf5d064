#include "helpers.hpp"

#include "mtrack/airfoil.hpp"
#include "mtrack/identification.hpp"
#include "mtrack/tensegrity.hpp"

#include <cmath>

using namespace mtrack;
using namespace mtrack::tensegrity;

namespace {

const FemModel& default_model() {
    static const FemModel model = [] {
        const auto topo = airfoil::initial_configuration({});
        return assemble_fem(topo, {}, airfoil::morph_path(topo, airfoil::MorphSpec::linear(topo.q, M_PI / 72), 20));
    }();
    return model;
}

DynamicState kicked(const FemModel& model, std::uint64_t seed) {
    DynamicState s = rest_state(model);
    s.velocity = 1e-3 * testing::random_matrix(s.velocity.size(), 1, seed);
    return s;
}

} // namespace

TEST_CASE("member counts follow the complexity") {
    for (Index q = 2; q <= 7; ++q) {
        const Connectivity c = build_connectivity(q);
        CHECK(c.Cb.rows() == 3 * q);
        CHECK(c.Cs.rows() == 6 * q - 4);
        CHECK(c.Cb.cols() == 3 * q + 1);
        for (Index j = 0; j < c.Cs.rows(); ++j) {
            CHECK(c.Cs.row(j).sum() == 0.0);
            CHECK(c.Cs.row(j).cwiseAbs().sum() == 2.0);
        }
    }
    CHECK_THROWS(build_connectivity(1));
}

TEST_CASE("string table for q = 2") {
    // 0-based (start, end) written out from the index rules
    const std::pair<Index, Index> expect[] = {{3, 4}, {3, 1}, {0, 4}, {0, 6}, {5, 1}, {5, 6}, {4, 2}, {6, 2}};
    const auto s = string_index_table(2);
    REQUIRE(s.size() == 8);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(s[j].start == expect[j].first);
        CHECK(s[j].end == expect[j].second);
    }
    const auto b = bar_index_table(2);
    REQUIRE(b.size() == 6);
    CHECK(b[0].start == 0);
    CHECK(b[0].end == 1);
    CHECK(b[1].end == 2);
}

TEST_CASE("consistent mass of a single rod") {
    Matrix C(1, 2);
    C << -1, 1;
    const Matrix M = mass_matrix(C, Vector::Constant(1, 6.0));
    Matrix expect = Matrix::Zero(6, 6);
    for (int d = 0; d < 3; ++d) {
        expect(d, d) = expect(3 + d, 3 + d) = 2.0;
        expect(d, 3 + d) = expect(3 + d, d) = 1.0;
    }
    CHECK(M == expect);
    const Vector g = gravity_vector(C, Vector::Constant(1, 2.0), 10.0);
    CHECK(g == (Vector(6) << 0, 0, 10, 0, 0, 10).finished());
    const Matrix K = stiffness_matrix(C, Vector::Constant(1, 3.0));
    CHECK(K(0, 0) == 3.0);
    CHECK(K(0, 3) == -3.0);
    CHECK(K(2, 5) == -3.0);
    CHECK(K(0, 1) == 0.0);
}

TEST_CASE("prestress is in equilibrium with taut strings") {
    const FemModel& m = default_model();
    const NodeMatrix& n = m.topology.nodes;
    CHECK(equilibrium_residual(m, n, m.rest_length).norm() < 1e-9);
    const Vector x = force_densities(m, n, m.rest_length);
    CHECK(testing::rel_err(x, m.prestress) < 1e-9);
    for (Index j = m.string_offset(); j < x.size(); ++j) CHECK(x(j) >= m.materials.min_string_force_density * (1 - 1e-9));
    CHECK(m.rest_length.minCoeff() > 0.0);
}

TEST_CASE("upper surface lies above lower surface and above the spine") {
    const NodeMatrix& n = default_model().topology.nodes;
    const Index q = default_model().topology.q;
    for (Index j = 0; j < q; ++j) {
        CHECK(n(2, 2 * q + 1 + j) > n(2, j));
        CHECK(n(2, j) > n(2, q + 1 + j));
    }
}

TEST_CASE("prestress keeps strings taut along the morph path") {
    const FemModel& m = default_model();
    const auto topo = m.topology;
    const Index nb = topo.bar_count(), ns = topo.string_count();
    // the solve samples 20 shapes; 5 of them are checked tightly, 7 (mostly off-sample) loosely
    for (const auto& [samples, slack] : {std::pair{Index{5}, 1e-6}, std::pair{Index{7}, 1e-3}})
    for (const NodeMatrix& nc : airfoil::morph_path(topo, airfoil::MorphSpec::linear(topo.q, M_PI / 72), samples)) {
        // bar force densities from the force law at the new shape, strings from nodal balance
        const Vector xb = force_densities(m, nc, m.rest_length).head(nb);
        Matrix A = Matrix::Zero(m.dof_count(), topo.member_count());
        const auto members = topo.members();
        for (Index j = 0; j < topo.member_count(); ++j) {
            const auto [a, b] = members[static_cast<std::size_t>(j)];
            const Eigen::Vector3d d = nc.col(b) - nc.col(a);
            for (auto [node, sign] : {std::pair{a, 1.0}, std::pair{b, -1.0}}) {
                const Index r = m.node_dof[static_cast<std::size_t>(node)];
                if (r < 0) continue;
                A(r, j) += sign * d.x();
                A(r + 1, j) += sign * d.z();
            }
        }
        const Vector xs = A.rightCols(ns).fullPivLu().solve(m.g_free - A.leftCols(nb) * xb);
        CHECK(xs.minCoeff() > m.materials.min_string_force_density * (1 - slack));
    }
}

TEST_CASE("a plant at rest stays at rest") {
    TensegrityPlant plant(default_model());
    Vector y;
    for (int k = 0; k < 20; ++k) y = plant.step(Vector::Zero(plant.input_dim()));
    CHECK(y.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(plant.input_dim() == 26);
    CHECK(plant.output_dim() == 26);
    CHECK(plant.substeps() == 100);
}

TEST_CASE("undamped motion conserves energy") {
    FemModel m = default_model();
    m.D_free.setZero();
    const Vector l0 = m.rest_length;
    const double rest = total_energy(m, rest_state(m), l0);
    DynamicState s = kicked(m, 3);
    const double e0 = total_energy(m, s, l0) - rest;
    REQUIRE(e0 > 0.0);
    for (int i = 0; i < 2000; ++i) s = step_dynamics(m, s, Vector::Zero(26), 1e-5);
    CHECK(std::abs(total_energy(m, s, l0) - rest - e0) < 1e-5 * e0);
}

TEST_CASE("damped motion loses energy") {
    const FemModel& m = default_model();
    const Vector l0 = m.rest_length;
    const double rest = total_energy(m, rest_state(m), l0);
    DynamicState s = kicked(m, 4);
    double prev = total_energy(m, s, l0) - rest;
    const double first = prev;
    for (int block = 0; block < 20; ++block) {
        for (int i = 0; i < 100; ++i) s = step_dynamics(m, s, Vector::Zero(26), 1e-4);
        const double e = total_energy(m, s, l0) - rest;
        CHECK(e <= prev * (1 + 1e-9));
        prev = e;
    }
    CHECK(prev < 0.9 * first);
}

TEST_CASE("symmetric impulse error shrinks with the square of the amplitude") {
    TensegrityPlant plant(default_model());
    std::vector<MarkovSequence> s;
    for (double eps : {2e-4, 1e-4, 5e-5}) s.push_back(estimate_markov_impulse(plant, 4, {eps, true}));
    auto gap = [&](std::size_t a, std::size_t b) {
        double w = 0.0;
        for (std::size_t i = 1; i <= 4; ++i) w = std::max(w, testing::rel_err(s[a].H[i], s[b].H[i]));
        return w;
    };
    CHECK(s[0].H[0].isZero(0.0));
    CHECK(gap(1, 2) < 1e-3);
    CHECK(gap(0, 1) / gap(1, 2) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("rest lengths must stay positive under actuation") {
    const FemModel& m = default_model();
    Vector u = Vector::Zero(26);
    u(3) = -2.0 * m.rest_length(m.string_offset() + 3);
    CHECK_THROWS_AS(actuated_rest_length(m, u), NumericalError);
}

TEST_CASE("a runaway state is reported") {
    FemModel m = default_model();
    DynamicState s = rest_state(m);
    s.position(0) += 20.0 * m.length_scale;
    CHECK_THROWS_AS(step_dynamics(m, s, Vector::Zero(26), 1e-4), InstabilityError);
}
