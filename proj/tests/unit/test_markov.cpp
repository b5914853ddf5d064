#include "helpers.hpp"

#include "mtrack/blackbox.hpp"
#include "mtrack/lti.hpp"
#include "mtrack/markov.hpp"

#include <sstream>

using namespace mtrack;

namespace {

StateSpace scalar_plant() { return StateSpace(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1)); }

} // namespace

TEST_CASE("scalar impulse response by recursion") {
    SignalTrace in;
    for (int k = 0; k < 5; ++k) in.u.push_back(Vector::Constant(1, k == 0 ? 1.0 : 0.0));
    const SignalTrace out = simulate(scalar_plant(), Vector::Zero(1), in);
    const double expect[] = {0.0, 1.0, 0.5, 0.25, 0.125};
    for (int k = 0; k < 5; ++k) CHECK(out.y[static_cast<std::size_t>(k)](0) == expect[k]);
}

TEST_CASE("markov_from_model on the scalar plant") {
    const MarkovSequence seq = markov_from_model(scalar_plant(), 3);
    REQUIRE(seq.count() == 3);
    const double expect[] = {0.0, 1.0, 0.5, 0.25};
    for (int i = 0; i <= 3; ++i) {
        CHECK(seq.H[static_cast<std::size_t>(i)](0, 0) == expect[i]);
        CHECK(seq.M[static_cast<std::size_t>(i)](0, 0) == expect[i]);
    }
}

TEST_CASE("augmentation is a prefix sum and leaves M alone") {
    const MarkovSequence aug = augment_markov(markov_from_model(scalar_plant(), 3));
    const double expect[] = {0.0, 1.0, 1.5, 1.75};
    for (int i = 0; i <= 3; ++i) {
        CHECK(aug.H_hat[static_cast<std::size_t>(i)](0, 0) == expect[i]);
        CHECK(aug.M_hat[static_cast<std::size_t>(i)](0, 0) == aug.M[static_cast<std::size_t>(i)](0, 0));
    }
    const MarkovSequence twice = augment_markov(aug);
    CHECK(twice.H_hat[3](0, 0) == 1.75);
}

TEST_CASE("augmented prefix sums equal the augmented state-space impulse response") {
    const StateSpace sys = random_stable_system(4, 2, 3, 11);
    const MarkovSequence aug = augment_markov(markov_from_model(sys, 12));
    const AugmentedSystem a = augment(sys);
    Matrix Ap = Matrix::Identity(a.A_hat.rows(), a.A_hat.cols());
    CHECK(aug.H_hat[0].isZero(0.0));
    for (std::size_t i = 1; i <= 12; ++i) {
        CHECK(testing::rel_err(aug.H_hat[i], a.C_hat * Ap * a.B_hat) < 1e-12);
        CHECK(testing::rel_err(aug.M_hat[i], a.C_hat * Ap * a.D_hat) < 1e-12);
        Ap = a.A_hat * Ap;
    }
}

TEST_CASE("markov bundle round trip is exact and hashed") {
    const MarkovSequence seq = markov_from_model(random_stable_system(3, 2, 2, 5), 6);
    const auto dir = testing::scratch_dir("markov");
    write_markov(seq, dir);
    const MarkovSequence back = read_markov(dir);
    REQUIRE(back.count() == seq.count());
    for (std::size_t i = 0; i < seq.H.size(); ++i) {
        CHECK(back.H[i] == seq.H[i]);
        CHECK(back.M[i] == seq.M[i]);
    }
    CHECK(markov_content_hash(back) == markov_content_hash(seq));
    MarkovSequence other = seq;
    other.H[2](0, 0) += 1e-15;
    CHECK(markov_content_hash(other) != markov_content_hash(seq));
}

TEST_CASE("malformed sequences are rejected") {
    MarkovSequence seq = markov_from_model(scalar_plant(), 2);
    seq.M.pop_back();
    CHECK_THROWS_AS(seq.validate(), DimensionError);
    CHECK_THROWS_AS(require_markov_lags(markov_from_model(scalar_plant(), 2), 2, "test"), Error);
}

TEST_CASE("state-space text round trip") {
    const StateSpace sys = random_stable_system(3, 2, 2, 9);
    std::stringstream ss;
    write_state_space(ss, sys);
    const StateSpace back = read_state_space(ss);
    CHECK(back.A() == sys.A());
    CHECK(back.B() == sys.B());
    CHECK(back.C() == sys.C());
    CHECK(back.D() == sys.D());
}

TEST_CASE("random plants are stable") {
    for (std::uint64_t s = 0; s < 20; ++s) CHECK(random_stable_system(5, 2, 2, s).spectral_radius() <= 0.9 + 1e-12);
}

TEST_CASE("black box reads y before u acts") {
    LtiBlackBox box(scalar_plant());
    CHECK(box.step(Vector::Ones(1))(0) == 0.0);
    CHECK(box.step(Vector::Zero(1))(0) == 1.0);
    box.reset();
    CHECK(box.step(Vector::Zero(1))(0) == 0.0);
}
