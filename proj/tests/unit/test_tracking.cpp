#include "helpers.hpp"

#include "mtrack/lti.hpp"
#include "mtrack/nested_cholesky.hpp"
#include "mtrack/oracle.hpp"
#include "mtrack/tracking.hpp"

using namespace mtrack;

namespace {

MarkovSequence scalar_markov(Index count) {
    return augment_markov(markov_from_model(StateSpace(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1)), count));
}

} // namespace

TEST_CASE("Hbar block placement for the scalar example") {
    const Matrix H = build_hbar(scalar_markov(2), 2, 0);
    Matrix expect(3, 3);
    expect << 0, 0, 0, 1, 0, 0, 1.5, 1, 0;
    CHECK(H == expect);
    const Matrix H1 = build_hbar(scalar_markov(2), 2, 1);
    Matrix e1(2, 2);
    e1 << 0, 0, 1, 0;
    CHECK(H1 == e1);
}

TEST_CASE("weight blocks put S and T last") {
    CostWeights w = CostWeights::scaled_identity(1, 1, 3.0, 2.0, 5.0);
    const auto [Q, R] = build_weight_blocks(w, 2, 0);
    CHECK(Q.diagonal() == Vector((Vector(3) << 2, 2, 5).finished()));
    CHECK(R.diagonal() == Vector((Vector(3) << 3, 3, 3).finished()));
}

TEST_CASE("scalar K_0 with N = 1 by hand") {
    // Hbar = [[0,0],[1,0]], Q = S = R = T = 1:
    // (Hbar'Hbar + I) = diag(2, 1), Hbar' = [[0,1],[0,0]]  ->  K_0 = [[0, 1/2], [0, 0]]
    TrackingProblem prob{1, {}, CostWeights::scaled_identity(1, 1, 1.0), scalar_markov(2)};
    const GainSchedule g = synthesize_gains(prob, GainStorage::Full);
    Matrix expect(2, 2);
    expect << 0, 0.5, 0, 0;
    CHECK(testing::rel_err(g.gain(0), expect) < 1e-15);
    CHECK(g.gain(1).rows() == 1);
    CHECK(g.gain(1)(0, 0) == 0.0);
}

TEST_CASE("data gains match the model route") {
    const StateSpace sys = random_stable_system(3, 2, 2, 4);
    const Index N = 10;
    const CostWeights w = CostWeights::scaled_identity(2, 2, 0.3, 1.0, 2.0);
    const GainSchedule g = synthesize_gains({N, {}, w, augment_markov(markov_from_model(sys, N + 1))});
    const BlockList ref = oracle::model_gains(sys, w, N);
    for (Index k = 0; k <= N; ++k) CHECK(testing::rel_err(g.gain(k), ref[static_cast<std::size_t>(k)]) < 1e-8);
}

TEST_CASE("leading-row storage keeps the applied rows of the full gains") {
    const StateSpace sys = random_stable_system(4, 2, 3, 8);
    const Index N = 7;
    TrackingProblem prob{N, {}, CostWeights::scaled_identity(3, 2, 0.1), augment_markov(markov_from_model(sys, N + 1))};
    const GainSchedule full = synthesize_gains(prob, GainStorage::Full);
    const GainSchedule lead = synthesize_gains(prob, GainStorage::LeadingBlockRow);
    for (Index k = 0; k <= N; ++k) {
        CHECK(lead.gain(k).rows() == 2);
        CHECK(testing::rel_err(lead.leading_rows(k), full.leading_rows(k)) < 1e-13);
    }
}

TEST_CASE("nested Cholesky solves every trailing system") {
    const Matrix X = testing::random_matrix(9, 9, 3);
    const Matrix G = X * X.transpose() + Matrix::Identity(9, 9);
    const NestedCholesky chol(G);
    for (Index s = 1; s <= 9; ++s) {
        const Matrix B = testing::random_matrix(s, 2, 100 + static_cast<std::uint64_t>(s));
        const Matrix sub = G.bottomRightCorner(s, s);
        CHECK(testing::rel_err(chol.solve_trailing(s, B), sub.llt().solve(B)) < 1e-12);
    }
    CHECK_THROWS_AS(NestedCholesky(-Matrix::Identity(3, 3)), NumericalError);
}

TEST_CASE("gain files round trip") {
    const StateSpace sys = random_stable_system(2, 1, 1, 2);
    const GainSchedule g =
        synthesize_gains({5, {}, CostWeights::scaled_identity(1, 1, 0.5), augment_markov(markov_from_model(sys, 6))});
    const auto dir = testing::scratch_dir("gains");
    write_gains(g, dir, 0.5);
    const GainSchedule back = read_gains(dir);
    CHECK(back.horizon() == 5);
    for (Index k = 0; k <= 5; ++k) CHECK(back.gain(k) == g.gain(k));
}

TEST_CASE("weights are validated") {
    CostWeights w = CostWeights::scaled_identity(2, 2, 1.0);
    w.R(0, 0) = 0.0;
    CHECK_THROWS(w.validate());
    w = CostWeights::scaled_identity(2, 2, 1.0);
    w.Q(0, 1) = 0.5;
    CHECK_THROWS(w.validate());
}

TEST_CASE("problems without augmentation are refused") {
    TrackingProblem prob{2, {}, CostWeights::scaled_identity(1, 1, 1.0), markov_from_model(StateSpace(Matrix::Ones(1, 1) * 0.5, Matrix::Ones(1, 1), Matrix::Ones(1, 1)), 3)};
    CHECK_THROWS(synthesize_gains(prob));
}
