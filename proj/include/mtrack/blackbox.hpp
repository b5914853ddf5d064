#pragma once

#include "mtrack/common.hpp"
#include "mtrack/lti.hpp"

#include <string>

namespace mtrack {

/// A plant seen only through its sampled input/output interface.
///
/// step(u) returns y_k, sampled *before* u_k acts, then advances one sample with
/// u_k held. Disturbances either ride on the input channel (the default) or, when
/// has_disturbance_port() is true, enter through a separate port.
class BlackBox {
public:
    virtual ~BlackBox() = default;

    virtual Index input_dim() const = 0;
    virtual Index output_dim() const = 0;
    virtual Index disturbance_dim() const { return input_dim(); }
    virtual bool has_disturbance_port() const { return false; }

    virtual Vector step(const Vector& u) = 0;

    /// Step with an input disturbance. Without a dedicated port, w adds to u.
    virtual Vector step(const Vector& u, const Vector& w) {
        if (has_disturbance_port()) throw Error(id() + ": disturbance port declared but not implemented");
        return step(u + w);
    }

    virtual bool resettable() const { return false; }
    /// Returns the plant to rest (zero state). Throws NotResettableError by default.
    virtual void reset() { throw NotResettableError(id() + " cannot be reset; use the white-noise estimator"); }

    virtual std::string id() const = 0;
};

/// LTI plant behind the black-box interface; used as the synthetic plant and as oracle.
class LtiBlackBox final : public BlackBox {
public:
    /// With separate_disturbance_port the plant accepts w through D instead of B.
    explicit LtiBlackBox(StateSpace sys, bool separate_disturbance_port = false);

    Index input_dim() const override { return sys_.inputs(); }
    Index output_dim() const override { return sys_.outputs(); }
    Index disturbance_dim() const override { return sys_.disturbances(); }
    bool has_disturbance_port() const override { return separate_port_; }

    Vector step(const Vector& u) override;
    Vector step(const Vector& u, const Vector& w) override;

    bool resettable() const override { return true; }
    void reset() override { x_.setZero(); }

    std::string id() const override { return "lti"; }

    const StateSpace& system() const { return sys_; }
    const Vector& state() const { return x_; }

private:
    StateSpace sys_;
    bool separate_port_;
    Vector x_;
};

} // namespace mtrack
