#include "helpers.hpp"

#include "mtrack/airfoil.hpp"

#include <cmath>

using namespace mtrack;
using namespace mtrack::airfoil;

namespace {

// distance from p to the segment [a, b], sampled densely along the curve
double dense_deviation(const NacaProfile& prof, bool upper, double s0, double s1) {
    const Point a = upper ? prof.upper(s0) : prof.lower(s0);
    const Point b = upper ? prof.upper(s1) : prof.lower(s1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double s = s0 + (s1 - s0) * i / 999.0;
        const Point p = upper ? prof.upper(s) : prof.lower(s);
        const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
        worst = std::max(worst, (p - a - t * (b - a)).norm());
    }
    return worst;
}

} // namespace

TEST_CASE("NACA 2412 closed forms") {
    const NacaProfile p = NacaProfile::from_code("2412", 1.0);
    CHECK(p.max_camber == doctest::Approx(0.02));
    CHECK(p.camber_pos == doctest::Approx(0.4));
    CHECK(p.thickness == doctest::Approx(0.12));
    CHECK(p.camber(0.4) == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(p.camber_slope(0.4) == 0.0);
    CHECK(std::abs(p.half_thickness(1.0)) < 1e-15);
    CHECK(p.half_thickness(0.3) == doctest::Approx(0.6 * (0.2969 * std::sqrt(0.3) - 0.126 * 0.3 - 0.3516 * 0.09 +
                                                         0.2843 * 0.027 - 0.1036 * 0.0081)));
    CHECK((p.upper(1.0) - p.lower(1.0)).norm() < 1e-15);
    CHECK_THROWS_AS(NacaProfile::from_code("24x2", 1.0), ConfigError);
    CHECK_THROWS_AS(NacaProfile::from_code("2400", 1.0), ConfigError);
}

TEST_CASE("error-bound spacing on NACA 2412 gives q = 5") {
    const SurfaceNodes s = surface_points({});
    REQUIRE(s.segments() == 5);
    const double expect[] = {0.3, 0.414292, 0.567078, 0.739388, 0.915468, 1.0};
    for (std::size_t i = 0; i < 6; ++i) CHECK(s.stations[i] == doctest::Approx(expect[i]).epsilon(1e-6));
}

TEST_CASE("every segment meets the bound against dense sampling") {
    const AirfoilSpec spec;
    const NacaProfile prof = NacaProfile::from_code(spec.code, spec.chord);
    const SurfaceNodes s = surface_points(spec);
    for (Index i = 0; i < s.segments(); ++i)
        for (bool upper : {true, false}) {
            const auto a = s.stations[static_cast<std::size_t>(i)], b = s.stations[static_cast<std::size_t>(i + 1)];
            CHECK(dense_deviation(prof, upper, a, b) <= spec.error_bound * (1 + 1e-9));
        }
}

TEST_CASE("loose bounds are rejected") {
    AirfoilSpec spec;
    spec.error_bound = 0.5;
    CHECK_THROWS_AS(surface_points(spec), ConfigError);
    spec.error_bound = 1e-3;
    spec.mu = 1.5;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("spine nodes split the surfaces by mu") {
    const AirfoilSpec spec;
    const SurfaceNodes s = surface_points(spec);
    const auto n = initial_nodes(spec, s);
    CHECK(n.cols() == 16);
    CHECK(n.row(1).isZero(0.0));
    const Eigen::Vector3d expect = spec.mu * n.col(6) + (1 - spec.mu) * n.col(11);
    CHECK((n.col(0) - expect).norm() < 1e-15);
    CHECK((n.col(5) - n.col(15)).norm() > 0.0);
}

TEST_CASE("morph keeps every bar length and the root") {
    const auto topo = initial_configuration({});
    const MorphTarget t = morph_target(topo, MorphSpec::linear(topo.q, M_PI / 72));
    const Matrix before = topo.bar_vectors(), after = t.nodes * topo.Cb.transpose();
    for (Index j = 0; j < topo.bar_count(); ++j)
        CHECK(std::abs(after.col(j).norm() - before.col(j).norm()) < 1e-12);
    for (Index f : topo.fixed_nodes) CHECK(t.nodes.col(f) == topo.nodes.col(f));
    CHECK(t.displacement.size() == 26);
    const auto th = spine_rotations(topo, t.nodes);
    for (Index j = 0; j < topo.q; ++j) CHECK(th[static_cast<std::size_t>(j)] == doctest::Approx((j + 1) * M_PI / 72));
    // positive angles move the trailing edge down
    CHECK(t.nodes(2, topo.q) < topo.nodes(2, topo.q));
}

TEST_CASE("fixed nodes are the root triple") {
    const auto topo = initial_configuration({});
    CHECK(topo.fixed_nodes == std::vector<Index>{0, 6, 11});
    CHECK(topo.free_nodes().size() == 13);
}

TEST_CASE("reference ramps to the target") {
    const Vector d = Vector::LinSpaced(4, 1, 4);
    const VectorList r = reference_trajectory(d, 8);
    REQUIRE(r.size() == 9);
    CHECK(r[0].isZero(0.0));
    CHECK(r[8] == d);
    CHECK(r[4] == 0.5 * d);
    CHECK_THROWS(reference_trajectory(d, 0));
}

TEST_CASE("morph path ends at the target") {
    const auto topo = initial_configuration({});
    const auto m = MorphSpec::linear(topo.q, M_PI / 72);
    const auto path = morph_path(topo, m, 4);
    REQUIRE(path.size() == 4);
    CHECK((path.back() - morph_target(topo, m).nodes).norm() == 0.0);
}
