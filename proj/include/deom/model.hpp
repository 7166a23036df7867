#pragma once

#include <array>
#include <optional>
#include <string>

#include "common.hpp"
#include "frames.hpp"
#include "operators.hpp"

namespace deom {

inline const char* component_name(int i) {
    static const char* names[3] = {"x", "y", "z"};
    return names[i];
}

/// System content in the body-fixed frame. Operators that the configured
/// motion never touches may stay absent; assembly reports which one is
/// missing if the motion does need it.
struct SystemModel {
    Basis basis;
    double mass = 1.0;
    double charge = 0.0;
    Operator kinetic;    // body-frame kinetic term (ring: L_z^2 / 2 I_r)
    Operator potential;  // static body-frame potential
    std::array<std::optional<Operator>, 3> position_ops;
    std::array<std::optional<Operator>, 3> momentum_ops;
    std::array<std::optional<Operator>, 3> angular_momentum_ops;
    int oscillator_axis = 0;  // spatial component realized by a 1-d oscillator
};

inline SystemModel two_level_model(double omega0,
                                   const std::array<std::optional<Operator>, 3>& coupling,
                                   double charge = 1.0) {
    auto tl = two_level_basis();
    SystemModel m;
    m.basis = tl.basis;
    m.charge = charge;
    m.kinetic = 0.5 * omega0 * tl.sz;
    m.potential = {tl.basis, MatC::Zero(2, 2)};
    // A two-level system has no literal momentum; the configured coupling
    // operator stands in for e p / m so that the assembled coupling equals it
    // in the inertial static-field limit and still picks up frame mixing.
    for (int i = 0; i < 3; ++i) {
        if (!coupling[i]) continue;
        require(is_hermitian(*coupling[i], 1e-12), "two-level coupling operator must be Hermitian");
        if (charge != 0.0)
            m.momentum_ops[i] = (m.mass / charge) * (*coupling[i]);
    }
    return m;
}

inline SystemModel ring_model(int m_max, double moment_of_inertia, double radius,
                              double v_cos = 0.0, double v_sin = 0.0,
                              double mass = 1.0, double charge = 0.0) {
    require(moment_of_inertia > 0, "ring model requires a positive moment of inertia");
    require(radius > 0, "ring model requires a positive radius");
    auto r = ring_basis(m_max);
    SystemModel m;
    m.basis = r.basis;
    m.mass = mass;
    m.charge = charge;
    m.kinetic = (0.5 / moment_of_inertia) * (r.lz * r.lz);
    m.potential = v_cos * r.cos_theta + v_sin * r.sin_theta;
    m.position_ops[0] = radius * r.cos_theta;
    m.position_ops[1] = radius * r.sin_theta;
    // symmetrized tangential momenta of motion on the circle:
    // p_x = -(L_z sin + sin L_z)/(2 r), p_y = (L_z cos + cos L_z)/(2 r)
    m.momentum_ops[0] = (-0.5 / radius) * (r.lz * r.sin_theta + r.sin_theta * r.lz);
    m.momentum_ops[1] = (0.5 / radius) * (r.lz * r.cos_theta + r.cos_theta * r.lz);
    // the plane constraint makes the out-of-plane position and momentum
    // exactly zero, as opposed to unrepresentable
    Operator zero{r.basis, MatC::Zero(r.basis.dim, r.basis.dim)};
    m.position_ops[2] = zero;
    m.momentum_ops[2] = zero;
    m.angular_momentum_ops[2] = r.lz;
    return m;
}

inline SystemModel oscillator_model(int n_max, double mass, double omega0,
                                    int axis = 0, double charge = 0.0) {
    require(axis >= 0 && axis <= 2, "oscillator axis must be x, y or z");
    auto o = oscillator_basis(n_max, mass, omega0);
    SystemModel m;
    m.basis = o.basis;
    m.mass = mass;
    m.charge = charge;
    m.kinetic = {o.basis, o.p.mat * o.p.mat / (2.0 * mass)};
    m.potential = {o.basis, 0.5 * mass * omega0 * omega0 * o.x.mat * o.x.mat};
    m.position_ops[axis] = o.x;
    m.momentum_ops[axis] = o.p;
    m.oscillator_axis = axis;
    return m;
}

/// Body-frame Hamiltonian of the moving system: bare kinetic and potential
/// terms, the angular-velocity coupling to the rotated angular momentum, and
/// the acceleration drive through the rotated position.
inline Operator system_hamiltonian_at(const SystemModel& model, const FrameEvaluator& frame,
                                      double t) {
    Operator h = model.kinetic + model.potential;
    const Vec3 w = frame.angular_velocity(t);
    if (w.norm() > 0) {
        const Vec3 wb = frame.rotation(t).transpose() * w;
        for (int j = 0; j < 3; ++j) {
            if (std::abs(wb(j)) <= 1e-14 * w.norm()) continue;
            require(model.angular_momentum_ops[j].has_value(),
                    std::string("rotation requires the angular momentum operator for component ")
                        + component_name(j));
            h = h - wb(j) * (*model.angular_momentum_ops[j]);
        }
    }
    const TranslationState ts = frame.translation(t);
    if (ts.zeta_ddot.norm() > 0) {
        const Vec3 ab = frame.rotation(t).transpose() * ts.zeta_ddot;
        for (int j = 0; j < 3; ++j) {
            if (std::abs(ab(j)) <= 1e-14 * ts.zeta_ddot.norm()) continue;
            require(model.position_ops[j].has_value(),
                    std::string("acceleration drive requires the position operator for component ")
                        + component_name(j));
            h = h + (model.mass * ab(j)) * (*model.position_ops[j]);
        }
    }
    return h;
}

/// Field-coupling operators, one per spatial component: an operator part built
/// from the frame-mixed momenta and a real scalar drive part proportional to
/// the frame velocity. Components the motion never populates stay inactive.
struct CouplingSet {
    std::array<std::optional<Operator>, 3> op_part;
    Vec3 scalar_part = Vec3::Zero();

    bool active(int i) const { return op_part[i].has_value() || scalar_part(i) != 0.0; }
};

inline Mat3 field_rotation_at(const FieldFrameSpec& field, const FrameEvaluator& frame, double t) {
    switch (field.mode) {
    case FieldFrame::static_field:
        return Mat3::Identity();
    case FieldFrame::comoving:
        return frame.rotation(t);
    case FieldFrame::custom:
        require(static_cast<bool>(field.rotation_fn), "custom field frame requires a rotation callback");
        return field.rotation_fn(t);
    }
    return Mat3::Identity();
}

/// Momentum components the model does not carry contribute nothing here: an
/// absent operator means the system has no momentum content along that axis.
/// Frame motion that genuinely needs a missing generator is already rejected
/// when the Hamiltonian is assembled.
inline CouplingSet coupling_operators_at(const SystemModel& model, const FrameEvaluator& frame,
                                         const FieldFrameSpec& field, double t) {
    CouplingSet out;
    if (model.charge == 0.0) return out;
    const Mat3 rt = field_rotation_at(field, frame, t).transpose();
    const Mat3 mix = rt * frame.rotation(t);
    out.scalar_part = model.charge * (rt * frame.translation(t).zeta_dot);
    const double e_over_m = model.charge / model.mass;
    for (int i = 0; i < 3; ++i) {
        std::optional<Operator> q;
        for (int j = 0; j < 3; ++j) {
            if (std::abs(mix(i, j)) <= 1e-14 || !model.momentum_ops[j]) continue;
            Operator term = (e_over_m * mix(i, j)) * (*model.momentum_ops[j]);
            q = q ? (*q + term) : term;
        }
        if (q && q->mat.norm() == 0.0) q.reset();  // constrained-out component
        out.op_part[i] = std::move(q);
    }
    return out;
}

/// Operator plus scalar drive as one matrix.
inline Operator full_coupling_operator(const CouplingSet& set, const Basis& basis, int i) {
    Operator q{basis, MatC::Zero(basis.dim, basis.dim)};
    if (set.op_part[i]) q = *set.op_part[i];
    if (set.scalar_part(i) != 0.0)
        q.mat += set.scalar_part(i) * MatC::Identity(basis.dim, basis.dim);
    return q;
}

/// Frobenius residuals of the displacement and rotation conjugation
/// identities on the truncated basis, restricted to an interior block that
/// excludes `margin` edge states. Identities a basis cannot express are
/// reported empty.
struct TransformIdentityReport {
    std::optional<double> displaced_position;
    std::optional<double> displaced_momentum;
    std::optional<double> rotated_position;
    std::optional<double> rotated_angular_momentum;
    int interior_dim = 0;

    double worst() const {
        double w = 0.0;
        for (const auto& r : {displaced_position, displaced_momentum,
                              rotated_position, rotated_angular_momentum})
            if (r) w = std::max(w, *r);
        return w;
    }
};

namespace detail {

inline MatC exp_i_hermitian(const MatC& h) {
    Eigen::SelfAdjointEigenSolver<MatC> es(h);
    VecC phases(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k)
        phases(k) = std::exp(iu * es.eigenvalues()(k));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline double interior_norm(const MatC& m, int lo, int hi) {
    return m.block(lo, lo, hi - lo, hi - lo).norm();
}

} // namespace detail

inline TransformIdentityReport verify_transformation_identities(const SystemModel& model,
                                                                const FrameEvaluator& frame,
                                                                double t, int margin) {
    TransformIdentityReport rep;
    const int d = model.basis.dim;
    const TranslationState ts = frame.translation(t);

    if (model.basis.kind == Basis::Kind::oscillator) {
        require(margin >= 0 && margin < d, "interior margin out of range");
        const int lo = 0, hi = d - margin;
        rep.interior_dim = hi - lo;
        const int ax = model.oscillator_axis;
        require(model.position_ops[ax] && model.momentum_ops[ax],
                "transformation check requires position and momentum operators");
        const MatC& x = model.position_ops[ax]->mat;
        const MatC& p = model.momentum_ops[ax]->mat;
        const double zeta = ts.zeta(ax);
        const double zdot = ts.zeta_dot(ax);
        const MatC u2 = detail::exp_i_hermitian(-model.mass * zdot * x)
                      * detail::exp_i_hermitian(zeta * p);
        const MatC eye = MatC::Identity(d, d);
        rep.displaced_position = detail::interior_norm(u2 * x * u2.adjoint() - x - zeta * eye, lo, hi);
        rep.displaced_momentum = detail::interior_norm(
            u2 * p * u2.adjoint() - p - model.mass * zdot * eye, lo, hi);
        return rep;
    }

    if (model.basis.kind == Basis::Kind::ring) {
        require(frame.rotation_profile().mode != RotationProfile::Mode::general,
                "rotation identity check on the ring needs a constant-axis profile");
        const int lo = std::min(margin, (d - 1) / 2), hi = d - lo;
        rep.interior_dim = hi - lo;
        require(model.angular_momentum_ops[2].has_value(), "ring model must carry L_z");
        require(model.position_ops[0] && model.position_ops[1],
                "rotation identity check requires the in-plane position operators");
        double theta = 0.0;
        if (frame.rotation_profile().mode == RotationProfile::Mode::constant_axis) {
            const Vec3 axis = frame.rotation_profile().axis.normalized();
            require((axis - Vec3::UnitZ()).norm() < 1e-12 || (axis + Vec3::UnitZ()).norm() < 1e-12,
                    "ring rotation must be about the z axis");
            theta = frame.rotation_evaluator().accumulated_angle(t) * (axis.z() > 0 ? 1.0 : -1.0);
        }
        const MatC& lz = model.angular_momentum_ops[2]->mat;
        const MatC u1 = detail::exp_i_hermitian(theta * lz.real());
        const Mat3 r = frame.rotation(t);
        double acc = 0.0;
        for (int i = 0; i < 2; ++i) {
            const MatC& ri = model.position_ops[i]->mat;
            MatC expect = r(i, 0) * model.position_ops[0]->mat
                        + r(i, 1) * model.position_ops[1]->mat;
            MatC resid = u1 * ri * u1.adjoint() - expect;
            const double v = detail::interior_norm(resid, lo, hi);
            acc = std::max(acc, v);
        }
        rep.rotated_position = acc;
        rep.rotated_angular_momentum = detail::interior_norm(
            u1 * lz * u1.adjoint() - lz, lo, hi);
        return rep;
    }

    throw ConfigError("transformation identities are defined for ring and oscillator bases");
}

} // namespace deom
