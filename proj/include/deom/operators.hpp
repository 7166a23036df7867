#pragma once

#include <numeric>
#include <vector>

#include "common.hpp"

namespace deom {

struct Basis {
    enum class Kind { two_level, ring, oscillator };
    Kind kind = Kind::two_level;
    int dim = 0;
    std::vector<int> labels;  // ring: m = -m_max..m_max; oscillator: n = 0..n_max
    bool operator==(const Basis&) const = default;
};

struct Operator {
    Basis basis;
    MatC mat;
};

inline void check_same_basis(const Operator& a, const Operator& b) {
    require(a.basis == b.basis, "operator basis mismatch");
}

inline Operator operator+(const Operator& a, const Operator& b) {
    check_same_basis(a, b);
    return {a.basis, a.mat + b.mat};
}

inline Operator operator-(const Operator& a, const Operator& b) {
    check_same_basis(a, b);
    return {a.basis, a.mat - b.mat};
}

inline Operator operator*(cplx s, const Operator& a) { return {a.basis, s * a.mat}; }
inline Operator operator*(double s, const Operator& a) { return {a.basis, s * a.mat}; }

inline Operator operator*(const Operator& a, const Operator& b) {
    check_same_basis(a, b);
    return {a.basis, a.mat * b.mat};
}

inline Operator adjoint(const Operator& a) { return {a.basis, a.mat.adjoint()}; }

inline Operator commutator(const Operator& a, const Operator& b) {
    check_same_basis(a, b);
    return {a.basis, a.mat * b.mat - b.mat * a.mat};
}

inline cplx trace(const Operator& a) { return a.mat.trace(); }

inline cplx expectation(const Operator& a, const Operator& rho) {
    check_same_basis(a, rho);
    return (a.mat * rho.mat).trace();
}

inline bool is_hermitian(const Operator& a, double tol = 1e-12) {
    return (a.mat - a.mat.adjoint()).norm() <= tol;
}

struct TwoLevelOperators {
    Basis basis;
    Operator identity, sx, sy, sz;
};

inline TwoLevelOperators two_level_basis() {
    Basis b{Basis::Kind::two_level, 2, {0, 1}};
    TwoLevelOperators r{b, {b, MatC::Identity(2, 2)}, {b, MatC::Zero(2, 2)},
                        {b, MatC::Zero(2, 2)}, {b, MatC::Zero(2, 2)}};
    r.sx.mat << 0, 1, 1, 0;
    r.sy.mat << 0, -iu, iu, 0;
    r.sz.mat << 1, 0, 0, -1;
    return r;
}

struct RingOperators {
    Basis basis;
    Operator identity, lz, cos_theta, sin_theta;
};

/// Angular-momentum representation on m = -m_max..m_max. The ladder
/// raising m by one unit has unit matrix elements, which fixes
/// (cos)_{m,m+1} = (cos)_{m+1,m} = 1/2 and (sin)_{m,m+1} = i/2,
/// (sin)_{m+1,m} = -i/2; with these both exact identities
/// [L_z, cos] = i sin and [L_z, sin] = -i cos hold on the truncated basis.
inline RingOperators ring_basis(int m_max) {
    require(m_max >= 1, "ring basis requires m_max >= 1");
    const int d = 2 * m_max + 1;
    Basis b{Basis::Kind::ring, d, {}};
    b.labels.resize(d);
    std::iota(b.labels.begin(), b.labels.end(), -m_max);
    RingOperators r{b, {b, MatC::Identity(d, d)}, {b, MatC::Zero(d, d)},
                    {b, MatC::Zero(d, d)}, {b, MatC::Zero(d, d)}};
    for (int k = 0; k < d; ++k) r.lz.mat(k, k) = b.labels[k];
    for (int k = 0; k + 1 < d; ++k) {
        r.cos_theta.mat(k, k + 1) = 0.5;
        r.cos_theta.mat(k + 1, k) = 0.5;
        r.sin_theta.mat(k, k + 1) = 0.5 * iu;
        r.sin_theta.mat(k + 1, k) = -0.5 * iu;
    }
    return r;
}

struct OscillatorOperators {
    Basis basis;
    Operator identity, x, p, h0;
};

/// Truncated ladder realization: x and p have the standard normalization, and
/// h0 = p^2/2m + m w0^2 x^2/2 evaluated with the truncated matrices. That
/// combination is diagonal with the exact spectrum w0 (n + 1/2) for every
/// n < n_max; only the top state feels the cutoff.
inline OscillatorOperators oscillator_basis(int n_max, double mass, double omega0) {
    require(n_max >= 2, "oscillator basis requires n_max >= 2");
    require(mass > 0 && omega0 > 0, "oscillator basis requires positive mass and frequency");
    const int d = n_max + 1;
    Basis b{Basis::Kind::oscillator, d, {}};
    b.labels.resize(d);
    std::iota(b.labels.begin(), b.labels.end(), 0);
    MatC a = MatC::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const MatC ad = a.adjoint();
    OscillatorOperators r{b, {b, MatC::Identity(d, d)}, {b, MatC()}, {b, MatC()}, {b, MatC()}};
    r.x.mat = (a + ad) / std::sqrt(2.0 * mass * omega0);
    r.p.mat = iu * std::sqrt(0.5 * mass * omega0) * (ad - a);
    r.h0.mat = r.p.mat * r.p.mat / (2.0 * mass)
             + 0.5 * mass * omega0 * omega0 * r.x.mat * r.x.mat;
    return r;
}

/// exp(-iHt) rho exp(+iHt) through the eigendecomposition of H.
inline Operator unitary_propagate(const Operator& h, const Operator& rho, double t) {
    check_same_basis(h, rho);
    require(is_hermitian(h, 1e-12), "unitary propagation requires a Hermitian generator");
    Eigen::SelfAdjointEigenSolver<MatC> es(h.mat);
    const auto& v = es.eigenvectors();
    VecC phases(h.basis.dim);
    for (int k = 0; k < h.basis.dim; ++k)
        phases(k) = std::exp(-iu * es.eigenvalues()(k) * t);
    const MatC u = v * phases.asDiagonal() * v.adjoint();
    return {rho.basis, u * rho.mat * u.adjoint()};
}

} // namespace deom
