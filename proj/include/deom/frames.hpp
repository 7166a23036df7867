#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "common.hpp"

namespace deom {

/// Antisymmetric generators of rotations about x, y, z. Contraction with an
/// angular velocity vector gives the cross-product matrix: (w . J) v = w x v.
inline std::array<Mat3, 3> so3_generators() {
    std::array<Mat3, 3> J;
    for (auto& m : J) m.setZero();
    J[0](1, 2) = -1; J[0](2, 1) = 1;
    J[1](0, 2) = 1;  J[1](2, 0) = -1;
    J[2](0, 1) = -1; J[2](1, 0) = 1;
    return J;
}

inline Mat3 cross_matrix(const Vec3& w) {
    Mat3 m;
    m <<    0, -w.z(),  w.y(),
         w.z(),     0, -w.x(),
        -w.y(),  w.x(),     0;
    return m;
}

/// Rodrigues form of exp(theta * cross_matrix(axis)) for a unit axis.
inline Mat3 rotation_axis_angle(const Vec3& axis, double theta) {
    const Mat3 K = cross_matrix(axis);
    return Mat3::Identity() + std::sin(theta) * K + (1.0 - std::cos(theta)) * (K * K);
}

struct RotationProfile {
    enum class Mode { none, constant_axis, general };
    Mode mode = Mode::none;
    Vec3 axis = Vec3::UnitZ();                 // constant_axis only, normalized on use
    double rate = 0.0;                         // constant_axis with fixed rate
    std::function<double(double)> rate_fn;     // constant_axis, overrides `rate`
    std::function<Vec3(double)> omega_fn;      // general: full angular velocity vector
    double step_scale = 1e-4;                  // stepper grid = step_scale * characteristic period
};

struct TranslationProfile {
    enum class Mode { none, boost, constant_accel, path };
    Mode mode = Mode::none;
    Vec3 velocity = Vec3::Zero();              // boost
    Vec3 accel = Vec3::Zero();                 // constant_accel, from rest at the origin
    std::function<Vec3(double)> position_fn;   // path
    std::function<Vec3(double)> velocity_fn;   // optional analytic derivatives of path
    std::function<Vec3(double)> accel_fn;
    double fd_step = 1e-6;                     // central-difference step when derivatives absent
};

struct TranslationState {
    Vec3 zeta = Vec3::Zero();
    Vec3 zeta_dot = Vec3::Zero();
    Vec3 zeta_ddot = Vec3::Zero();
};

inline TranslationState translation_state_at(const TranslationProfile& p, double t) {
    TranslationState s;
    switch (p.mode) {
    case TranslationProfile::Mode::none:
        break;
    case TranslationProfile::Mode::boost:
        s.zeta = p.velocity * t;
        s.zeta_dot = p.velocity;
        break;
    case TranslationProfile::Mode::constant_accel:
        s.zeta = 0.5 * t * t * p.accel;
        s.zeta_dot = t * p.accel;
        s.zeta_ddot = p.accel;
        break;
    case TranslationProfile::Mode::path: {
        require(static_cast<bool>(p.position_fn), "translation path requires a position callback");
        const double h = p.fd_step;
        s.zeta = p.position_fn(t);
        if (p.velocity_fn) {
            s.zeta_dot = p.velocity_fn(t);
        } else {
            s.zeta_dot = (p.position_fn(t + h) - p.position_fn(t - h)) / (2.0 * h);
        }
        if (p.accel_fn) {
            s.zeta_ddot = p.accel_fn(t);
        } else {
            s.zeta_ddot = (p.position_fn(t + h) - 2.0 * s.zeta + p.position_fn(t - h)) / (h * h);
        }
        break;
    }
    }
    return s;
}

/// Evaluates the lab-frame rotation R(t) with dR/dt = cross_matrix(w(t)) R,
/// R(0) = 1. Constant-axis profiles use the closed Rodrigues form with the
/// accumulated angle; general profiles are stepped with a fourth-order
/// commutator-free exponential integrator on a fixed grid. Grid results are
/// cached so monotone query sequences cost one incremental step each, and any
/// query time gives the same matrix regardless of query history.
class RotationEvaluator {
public:
    RotationEvaluator() = default;

    RotationEvaluator(RotationProfile profile, double t_horizon)
        : p_(std::move(profile)) {
        if (p_.mode == RotationProfile::Mode::none) return;
        if (p_.mode == RotationProfile::Mode::constant_axis) {
            require(p_.axis.norm() > 0, "rotation axis must be nonzero");
            p_.axis.normalize();
        } else {
            require(static_cast<bool>(p_.omega_fn), "general rotation requires an angular velocity callback");
        }
        double peak = 0.0;
        const int n_samples = 4096;
        const double horizon = std::max(t_horizon, 1e-300);
        for (int k = 0; k <= n_samples; ++k) {
            const double t = horizon * k / n_samples;
            peak = std::max(peak, rate_magnitude(t));
        }
        if (peak == 0.0) {
            static_rotation_ = true;
            return;
        }
        period_ = 2.0 * pi / peak;
        grid_h_ = p_.step_scale * period_;
        require(grid_h_ > 0, "rotation step scale must be positive");
    }

    double characteristic_period() const { return period_; }

    /// Integral of the rate over [0, t]; constant-axis profiles only.
    double accumulated_angle(double t) const {
        require(p_.mode == RotationProfile::Mode::constant_axis,
                "accumulated angle is defined for constant-axis rotation only");
        if (static_rotation_) return 0.0;
        return angle_at(t);
    }

    Mat3 at(double t) const {
        if (p_.mode == RotationProfile::Mode::none || static_rotation_ || t == 0.0)
            return Mat3::Identity();
        if (p_.mode == RotationProfile::Mode::constant_axis)
            return rotation_axis_angle(p_.axis, angle_at(t));
        return general_at(t);
    }

private:
    double rate_magnitude(double t) const {
        switch (p_.mode) {
        case RotationProfile::Mode::constant_axis:
            return std::abs(p_.rate_fn ? p_.rate_fn(t) : p_.rate);
        case RotationProfile::Mode::general:
            return p_.omega_fn(t).norm();
        default:
            return 0.0;
        }
    }

    // Accumulated angle for the constant-axis closed form: integral of the
    // rate over [0, t], composite Simpson on the fixed grid plus one partial
    // panel. With a constant rate this reduces to rate * t exactly.
    double angle_at(double t) const {
        if (!p_.rate_fn) return p_.rate * t;
        const auto k_target = static_cast<std::int64_t>(t / grid_h_);
        if (k_target < angle_cache_k_ || t < 0) {
            angle_cache_k_ = 0;
            angle_cache_ = 0.0;
        }
        while (angle_cache_k_ < k_target) {
            const double a = grid_h_ * static_cast<double>(angle_cache_k_);
            angle_cache_ += simpson(a, a + grid_h_);
            ++angle_cache_k_;
        }
        const double a = grid_h_ * static_cast<double>(k_target);
        return angle_cache_ + (t > a ? simpson(a, t) : 0.0);
    }

    double simpson(double a, double b) const {
        return (b - a) / 6.0 * (p_.rate_fn(a) + 4.0 * p_.rate_fn(0.5 * (a + b)) + p_.rate_fn(b));
    }

    // One commutator-free step over [t, t+h]: two Rodrigues factors built
    // from the angular velocity at the two Gauss points.
    Mat3 cf4_step(double t, double h) const {
        constexpr double rt3_6 = 0.28867513459481287;  // sqrt(3)/6
        const Vec3 w1 = p_.omega_fn(t + (0.5 - rt3_6) * h);
        const Vec3 w2 = p_.omega_fn(t + (0.5 + rt3_6) * h);
        const Vec3 u1 = h * ((0.25 + rt3_6) * w1 + (0.25 - rt3_6) * w2);
        const Vec3 u2 = h * ((0.25 - rt3_6) * w1 + (0.25 + rt3_6) * w2);
        return exp_cross(u2) * exp_cross(u1);
    }

    static Mat3 exp_cross(const Vec3& u) {
        const double theta = u.norm();
        if (theta == 0.0) return Mat3::Identity();
        return rotation_axis_angle(u / theta, theta);
    }

    Mat3 general_at(double t) const {
        require(t >= 0, "rotation evaluated at negative time");
        const auto k_target = static_cast<std::int64_t>(t / grid_h_);
        if (k_target < cache_k_) {
            cache_k_ = 0;
            cache_R_ = Mat3::Identity();
        }
        while (cache_k_ < k_target) {
            cache_R_ = cf4_step(grid_h_ * static_cast<double>(cache_k_), grid_h_) * cache_R_;
            ++cache_k_;
        }
        const double a = grid_h_ * static_cast<double>(k_target);
        if (t > a) return cf4_step(a, t - a) * cache_R_;
        return cache_R_;
    }

    RotationProfile p_;
    bool static_rotation_ = false;
    double period_ = 0.0;
    double grid_h_ = 0.0;
    mutable std::int64_t cache_k_ = 0;
    mutable Mat3 cache_R_ = Mat3::Identity();
    mutable std::int64_t angle_cache_k_ = 0;
    mutable double angle_cache_ = 0.0;
};

/// One-off evaluation; prefer holding a RotationEvaluator when querying many times.
inline Mat3 rotation_at(const RotationProfile& p, double t) {
    return RotationEvaluator(p, t).at(t);
}

/// Frame of the field the system couples to. A field at rest in the lab sees
/// the rotated momenta; a field carried along with the body reduces the
/// coupling back to the body-frame momenta. Custom supplies its own rotation
/// history (orthogonal matrices).
enum class FieldFrame { static_field, comoving, custom };

struct FieldFrameSpec {
    FieldFrame mode = FieldFrame::static_field;
    std::function<Mat3(double)> rotation_fn;  // custom only
};

struct FrameMotion {
    RotationProfile rotation;
    TranslationProfile translation;
};

/// Bundles the rotation and translation of one frame trajectory behind a
/// single time parameter.
class FrameEvaluator {
public:
    FrameEvaluator() : FrameEvaluator(FrameMotion{}, 1.0) {}

    FrameEvaluator(FrameMotion motion, double t_horizon)
        : motion_(std::move(motion)), rot_(motion_.rotation, t_horizon) {}

    Mat3 rotation(double t) const { return rot_.at(t); }

    TranslationState translation(double t) const {
        return translation_state_at(motion_.translation, t);
    }

    Vec3 angular_velocity(double t) const {
        switch (motion_.rotation.mode) {
        case RotationProfile::Mode::constant_axis: {
            const double w = motion_.rotation.rate_fn ? motion_.rotation.rate_fn(t)
                                                      : motion_.rotation.rate;
            return w * motion_.rotation.axis.normalized();
        }
        case RotationProfile::Mode::general:
            return motion_.rotation.omega_fn(t);
        default:
            return Vec3::Zero();
        }
    }

    const RotationProfile& rotation_profile() const { return motion_.rotation; }
    const TranslationProfile& translation_profile() const { return motion_.translation; }
    const RotationEvaluator& rotation_evaluator() const { return rot_; }

private:
    FrameMotion motion_;
    RotationEvaluator rot_;
};

} // namespace deom
