#include "mtrack/blackbox.hpp"

namespace mtrack {

LtiBlackBox::LtiBlackBox(StateSpace sys, bool separate_disturbance_port)
    : sys_(std::move(sys)), separate_port_(separate_disturbance_port), x_(Vector::Zero(sys_.states())) {}

Vector LtiBlackBox::step(const Vector& u) {
    require_length(u, sys_.inputs(), "lti step: u");
    Vector y = sys_.C() * x_;
    x_ = sys_.A() * x_ + sys_.B() * u;
    return y;
}

Vector LtiBlackBox::step(const Vector& u, const Vector& w) {
    if (!separate_port_) return step(u + w);
    require_length(u, sys_.inputs(), "lti step: u");
    require_length(w, sys_.disturbances(), "lti step: w");
    Vector y = sys_.C() * x_;
    x_ = sys_.A() * x_ + sys_.B() * u + sys_.D() * w;
    return y;
}

} // namespace mtrack
