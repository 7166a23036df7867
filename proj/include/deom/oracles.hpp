#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bath_expansion.hpp"
#include "common.hpp"
#include "frames.hpp"
#include "model.hpp"
#include "operators.hpp"
#include "quadrature.hpp"

namespace deom {

/// Reference trajectory for validation runs.  Matrix-valued references fill
/// `states`, scalar ones (dephasing coherence) fill `values`.
struct OracleResult {
    std::string name;
    std::vector<double> times;
    std::vector<MatC> states;
    std::vector<cplx> values;
    double tolerance = 0.0;
};

/// Unitary reference for a decoupled system, independent of the hierarchy
/// machinery.  A Hamiltonian that is constant over the grid (checked at probe
/// times) is propagated exactly through one eigendecomposition; otherwise a
/// second-order midpoint product formula marches with the given step.
inline OracleResult closed_system_oracle(const SystemModel& model, const FrameEvaluator& frame,
                                         const MatC& rho0, const std::vector<double>& t_grid,
                                         double step = 1e-4, double tolerance = 1e-8) {
    require(!t_grid.empty(), "oracle needs a nonempty time grid");
    require(t_grid.front() >= 0.0, "oracle grid must start at or after t = 0");
    require(std::is_sorted(t_grid.begin(), t_grid.end()), "oracle grid must be ascending");
    require(step > 0.0, "product-formula step must be positive");
    const int d = model.basis.dim;
    require(rho0.rows() == d && rho0.cols() == d, "initial state dimension mismatch");

    OracleResult out;
    out.name = "closed_system";
    out.times = t_grid;
    out.tolerance = tolerance;

    const double t_end = t_grid.back();
    const MatC h0 = system_hamiltonian_at(model, frame, 0.0).mat;
    bool constant = true;
    for (double frac : {0.37, 0.81, 1.0}) {
        const MatC ht = system_hamiltonian_at(model, frame, frac * t_end).mat;
        if ((ht - h0).norm() > 1e-13 * std::max(1.0, h0.norm())) constant = false;
    }

    if (constant) {
        const Operator h{model.basis, h0};
        for (double t : t_grid)
            out.states.push_back(unitary_propagate(h, {model.basis, rho0}, t).mat);
        return out;
    }

    MatC u = MatC::Identity(d, d);
    double t_prev = 0.0;
    for (double t : t_grid) {
        const double span = t - t_prev;
        if (span > 0.0) {
            const int n = std::max<int>(1, int(std::ceil(span / step)));
            const double h = span / n;
            for (int j = 0; j < n; ++j) {
                const double tm = t_prev + (j + 0.5) * h;
                const MatC hm = system_hamiltonian_at(model, frame, tm).mat;
                u = detail::exp_i_hermitian(-h * hm) * u;
            }
        }
        out.states.push_back(u * rho0 * u.adjoint());
        t_prev = t;
    }
    return out;
}

/// Dephasing exponent -ln|coherence decay| for a commuting coupling:
///   Gamma(t) = 4 int_0^t ds (t - s) Re C(s).
/// With C(s) = sum_k eta_k e^{-gamma_k s} the integral is elementary,
///   Gamma(t) = 4 Re sum_k eta_k (gamma_k t - 1 + e^{-gamma_k t}) / gamma_k^2.
inline double dephasing_exponent(const BathExpansion& ex, double t) {
    require(ex.n_components() == 1, "pure dephasing oracle requires a scalar bath");
    cplx acc{0.0, 0.0};
    for (int k = 0; k < ex.n_exponents(); ++k) {
        const cplx g = ex.exponents[k];
        require(std::abs(g) > 0.0, "dephasing exponent needs nonzero decay rates");
        acc += ex.coefficients[k](0, 0) * (g * t - 1.0 + std::exp(-g * t)) / (g * g);
    }
    return 4.0 * acc.real();
}

/// Same exponent by adaptive quadrature over an arbitrary kernel C(s).
template <class F>
double dephasing_exponent_fn(F&& c, double t, double abs_tol = 1e-10) {
    if (t == 0.0) return 0.0;
    require(t > 0.0, "dephasing exponent is defined for t >= 0");
    const auto g = [&](double s) { return (t - s) * cplx(c(s)).real(); };
    const auto r = adaptive_gk15(g, 0.0, t, abs_tol);
    return 4.0 * r.value.real();
}

/// Coherence reference rho01(t) = rho01(0) e^{-i omega0 t} e^{-Gamma(t)} for
/// H_S = omega0 sz / 2 with coupling Q = sz under H_SE = -Q A.  Exact for
/// this commuting model: the cumulant expansion terminates at second order.
inline OracleResult pure_dephasing_oracle(double omega0, cplx rho01_0, const BathExpansion& ex,
                                          const std::vector<double>& t_grid,
                                          double tolerance = 1e-6) {
    OracleResult out;
    out.name = "pure_dephasing";
    out.times = t_grid;
    out.tolerance = tolerance;
    for (double t : t_grid) {
        require(t >= 0.0, "dephasing oracle grid must be nonnegative");
        out.values.push_back(rho01_0 * std::exp(-iu * omega0 * t - dephasing_exponent(ex, t)));
    }
    return out;
}

/// e^{-beta H} / Z through the eigendecomposition, shifted by the ground
/// energy so arbitrarily large beta stays finite.
inline MatC gibbs_oracle(const MatC& h, double beta) {
    require((h - h.adjoint()).norm() <= 1e-12 * std::max(1.0, h.norm()),
            "Gibbs state requires a Hermitian Hamiltonian");
    require(beta >= 0.0, "Gibbs state requires beta >= 0");
    Eigen::SelfAdjointEigenSolver<MatC> es(h);
    const auto& e = es.eigenvalues();
    const double e0 = e.minCoeff();
    Eigen::VectorXd w(e.size());
    for (Eigen::Index k = 0; k < e.size(); ++k) w(k) = std::exp(-beta * (e(k) - e0));
    w /= w.sum();
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

inline Operator gibbs_oracle(const Operator& h, double beta) {
    return {h.basis, gibbs_oracle(h.mat, beta)};
}

} // namespace deom
