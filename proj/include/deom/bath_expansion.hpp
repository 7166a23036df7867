#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "quadrature.hpp"
#include "spectral_density.hpp"

namespace deom {

namespace detail {

/// 1/(1 - e^{-x}) with overflow guards on both sides.
inline double f_bose_real(double x) {
    if (x > 36.0) return 1.0;
    if (x < -36.0) return -std::exp(x);
    return 1.0 / (1.0 - std::exp(-x));
}

inline cplx f_bose(cplx z) {
    if (z.real() > 50.0) return 1.0 + std::exp(-z);
    if (z.real() < -50.0) return -std::exp(z);
    return 1.0 / (1.0 - std::exp(-z));
}

} // namespace detail

/// Poles xi_j and weights eta_j of the Pade approximant of the Bose function,
/// f(x) ~ 1/x + 1/2 + sum_j 2 eta_j x / (x^2 + xi_j^2).  The poles are the
/// inverse positive eigenvalues of a symmetric tridiagonal matrix built from
/// the continued-fraction coefficients of f; the weights follow from the
/// approximant's zeros, obtained the same way one size down.
struct PadeBosePoles {
    std::vector<double> xi;
    std::vector<double> eta;
};

inline PadeBosePoles pade_bose_poles(int n) {
    require(n >= 1, "Pade decomposition needs at least one pole");
    auto positive_inverse = [](int size, int shift) {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(size, size);
        for (int m = 1; m < size; ++m) {
            const double b = 1.0 / std::sqrt(double(2 * m + shift) * double(2 * m + shift + 2));
            t(m - 1, m) = b;
            t(m, m - 1) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        std::vector<double> out;
        for (int k = 0; k < size; ++k)
            if (es.eigenvalues()(k) > 1e-14) out.push_back(2.0 / es.eigenvalues()(k));
        std::sort(out.begin(), out.end());
        return out;
    };
    PadeBosePoles p;
    p.xi = positive_inverse(2 * n, 1);
    const std::vector<double> zeta = n > 1 ? positive_inverse(2 * n - 1, 3)
                                           : std::vector<double>{};
    p.eta.resize(n);
    for (int j = 0; j < n; ++j) {
        double prod = 1.0;
        for (int k = 0; k + 1 < n; ++k) {
            const double num = zeta[k] * zeta[k] - p.xi[j] * p.xi[j];
            const double den = (k == j ? p.xi[n - 1] * p.xi[n - 1] : p.xi[k] * p.xi[k])
                             - p.xi[j] * p.xi[j];
            prod *= num / den;
        }
        p.eta[j] = 0.5 * n * (2 * n + 3) * prod;
    }
    return p;
}

/// Exponential expansion of the bath correlation matrix,
/// C_ij(t) = sum_k eta_k(i,j) exp(-gamma_k t) for t >= 0.
///
/// Exponents come in two groups: poles of the spectral density in the lower
/// half plane (complex ones stored as adjacent conjugate pairs) and poles of
/// the Bose function on the imaginary axis (real exponents).  conjugate_map
/// gives for each exponent the index carrying its complex conjugate, so
/// gamma_{map[k]} == conj(gamma_k) bit for bit.
struct BathExpansion {
    double beta = 0.0;
    std::vector<int> components;      // active spatial components, ascending
    std::vector<cplx> exponents;      // gamma_k, Re > 0
    std::vector<int> conjugate_map;   // k -> kbar
    std::vector<MatC> coefficients;   // per exponent, indexed by active component
    std::string method;               // "matsubara" or "pade"
    int n_bose = 0;                   // Bose terms requested

    int n_exponents() const { return int(exponents.size()); }
    int n_components() const { return int(components.size()); }

    int component_slot(int spatial) const {
        for (int a = 0; a < n_components(); ++a)
            if (components[a] == spatial) return a;
        throw ConfigError("spatial component " + std::to_string(spatial)
                          + " is not active in this bath expansion");
    }

    /// Reconstructed C_ij(t) for spatial components i, j and t >= 0.
    cplx correlation(int i, int j, double t) const {
        const int a = component_slot(i), b = component_slot(j);
        cplx c{0.0, 0.0};
        for (int k = 0; k < n_exponents(); ++k)
            c += coefficients[k](a, b) * std::exp(-exponents[k] * t);
        return c;
    }

    cplx correlation(double t) const {
        require(n_components() == 1, "scalar correlation needs a single-component bath");
        return correlation(components[0], components[0], t);
    }
};

namespace detail {

inline std::string density_family_name(const ScalarDensity& s) {
    if (std::holds_alternative<DrudeDensity>(s)) return "drude";
    if (std::holds_alternative<OhmicExpDensity>(s)) return "ohmic_exponential";
    if (std::holds_alternative<LorentzianDensity>(s)) return "lorentzian_mode";
    if (std::holds_alternative<DiscreteModesDensity>(s)) return "discrete_modes";
    return "custom";
}

struct JPoleTerm {
    cplx exponent;
    cplx eta;
    bool paired;  // true when this and the next term form a conjugate pair
};

/// Residue terms of (1/pi) Int dw J(w) f(beta w) e^{-iwt} from the poles of J
/// in the lower half plane.  Coefficient per pole p with residue r:
/// -2i r f(beta p), decaying with exponent i p.  The Bose factor is kept
/// exact here, so these terms are independent of how the Bose poles are
/// treated.
inline std::vector<JPoleTerm> j_pole_terms(const ScalarDensity& s, double beta) {
    std::vector<JPoleTerm> out;
    if (const auto* d = std::get_if<DrudeDensity>(&s)) {
        const cplx p{0.0, -d->gamma_c};
        const cplx eta = -2.0 * iu * (d->lambda * d->gamma_c) * f_bose(beta * p);
        out.push_back({cplx{d->gamma_c, 0.0}, eta, false});
    } else if (const auto* l = std::get_if<LorentzianDensity>(&s)) {
        require(l->omega0 > 0.5 * l->gamma,
                "lorentzian_mode expansion requires omega0 > gamma/2 (underdamped)");
        const double wr = std::sqrt(l->omega0 * l->omega0 - 0.25 * l->gamma * l->gamma);
        const double amp = l->lambda * l->omega0 * l->omega0 / wr;
        const cplx e_plus{0.5 * l->gamma, wr};
        const cplx eta_plus = amp * f_bose(beta * cplx{wr, -0.5 * l->gamma});
        const cplx eta_minus = -amp * f_bose(beta * cplx{-wr, -0.5 * l->gamma});
        out.push_back({e_plus, eta_plus, true});
        out.push_back({std::conj(e_plus), eta_minus, true});
    } else {
        throw ConfigError("spectral density family '" + density_family_name(s)
                          + "' has no exponential expansion; supported families are "
                            "drude and lorentzian_mode (approximate other shapes by "
                            "sums of these)");
    }
    for (const auto& term : out)
        require(std::isfinite(term.eta.real()) && std::isfinite(term.eta.imag()),
                "bath expansion coefficient is not finite; a Bose pole sits on a "
                "spectral-density pole");
    return out;
}

/// J evaluated on the negative imaginary axis, J(-i nu), where the Bose poles
/// live.  Only the families with exponential expansions are supported.
inline cplx density_on_imag_axis(const ScalarDensity& s, double nu) {
    if (const auto* d = std::get_if<DrudeDensity>(&s)) {
        return cplx{0.0, -2.0 * d->lambda * d->gamma_c * nu
                             / (d->gamma_c * d->gamma_c - nu * nu)};
    }
    if (const auto* l = std::get_if<LorentzianDensity>(&s)) {
        const double w2 = l->omega0 * l->omega0;
        const double den = (nu * nu + w2) * (nu * nu + w2) - l->gamma * l->gamma * nu * nu;
        return cplx{0.0, -2.0 * l->lambda * l->gamma * w2 * nu / den};
    }
    throw ConfigError("spectral density family '" + density_family_name(s)
                      + "' has no exponential expansion; supported families are "
                        "drude and lorentzian_mode");
}

inline BathExpansion build_expansion(const MatrixDensity& m, double beta, int k_bose,
                                     bool pade) {
    require(beta > 0.0, "bath expansion requires beta > 0");
    require(k_bose >= 0, "bath expansion requires a nonnegative Bose term count");
    BathExpansion ex;
    ex.beta = beta;
    ex.method = pade ? "pade" : "matsubara";
    ex.n_bose = k_bose;
    ex.components = m.active_components();
    require(!ex.components.empty(), "matrix spectral density has no active components");
    const int nc = ex.n_components();

    std::map<std::pair<double, double>, int> slot_of;
    auto slot = [&](cplx g) {
        const auto key = std::make_pair(g.real(), g.imag());
        auto it = slot_of.find(key);
        if (it != slot_of.end()) return it->second;
        const int k = ex.n_exponents();
        ex.exponents.push_back(g);
        ex.conjugate_map.push_back(k);  // provisional self map
        ex.coefficients.push_back(MatC::Zero(nc, nc));
        slot_of.emplace(key, k);
        return k;
    };

    // Spectral-density poles, walking the active entries in row-major order.
    // Identical exponents from different entries share one slot.
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b) {
            const auto& e = m.entry(ex.components[a], ex.components[b]);
            if (!e) continue;
            const auto terms = j_pole_terms(*e, beta);
            int prev = -1;
            for (const auto& term : terms) {
                const int k = slot(term.exponent);
                ex.coefficients[k](a, b) += term.eta;
                if (term.paired && prev >= 0) {
                    ex.conjugate_map[prev] = k;
                    ex.conjugate_map[k] = prev;
                    prev = -1;
                } else if (term.paired) {
                    prev = k;
                }
            }
        }
    }

    // Bose poles on the imaginary axis: nu_n = 2 pi n / beta with unit weight
    // for the Matsubara series, nu_j = xi_j / beta with weight eta_j for the
    // Pade approximant.  Exponents are real, so each maps to itself.
    std::vector<std::pair<double, double>> bose;  // (nu, weight)
    if (pade && k_bose > 0) {
        const PadeBosePoles p = pade_bose_poles(k_bose);
        for (int j = 0; j < k_bose; ++j) bose.emplace_back(p.xi[j] / beta, p.eta[j]);
    } else {
        for (int n = 1; n <= k_bose; ++n) bose.emplace_back(2.0 * pi * n / beta, 1.0);
    }
    for (const auto& [nu, weight] : bose) {
        const int k = slot(cplx{nu, 0.0});
        for (int a = 0; a < nc; ++a) {
            for (int b = 0; b < nc; ++b) {
                const auto& e = m.entry(ex.components[a], ex.components[b]);
                if (!e) continue;
                const cplx eta = -2.0 * iu / beta * weight * density_on_imag_axis(*e, nu);
                require(std::isfinite(eta.real()) && std::isfinite(eta.imag()),
                        "bath expansion coefficient is not finite; a Bose pole sits "
                        "on a spectral-density pole");
                ex.coefficients[k](a, b) += eta;
            }
        }
    }
    return ex;
}

} // namespace detail

inline BathExpansion matsubara_expansion(const MatrixDensity& m, double beta, int k_bose) {
    return detail::build_expansion(m, beta, k_bose, false);
}

inline BathExpansion pade_expansion(const MatrixDensity& m, double beta, int k_bose) {
    return detail::build_expansion(m, beta, k_bose, true);
}

inline BathExpansion matsubara_expansion(const ScalarDensity& s, double beta, int k_bose) {
    return matsubara_expansion(MatrixDensity::isotropic(s, {true, false, false}), beta, k_bose);
}

inline BathExpansion pade_expansion(const ScalarDensity& s, double beta, int k_bose) {
    return pade_expansion(MatrixDensity::isotropic(s, {true, false, false}), beta, k_bose);
}

/// C_ij(t) = (1/pi) Int dw J_ij(w) e^{-iwt} / (1 - e^{-beta w}) by direct
/// quadrature, the reference every expansion is judged against.  The Bose
/// kernel is split as (f - H) + H with H the unit step: the first factor
/// decays on both sides and is integrated adaptively over [-cutoff, cutoff]
/// (the integrand's w = 0 point is removable and the Gauss-Kronrod nodes
/// never sample interval ends), and the step part Int_0^inf J e^{-iwt} is a
/// finite head plus an accelerated oscillatory tail.  At t = 0 the tail has
/// nothing to damp it, so it is dropped and its magnitude is added to the
/// reported error instead; densities with slowly decaying tails genuinely do
/// not converge there.
struct CorrelationValue {
    cplx value{0.0, 0.0};
    double error = 0.0;
};

inline CorrelationValue correlation_fdt(const MatrixDensity& m, int i, int j, double beta,
                                        double t) {
    require(beta > 0.0, "correlation function requires beta > 0");
    const double cutoff = std::max(50.0 / beta, 50.0 * m.scale());
    const double quad_tol = 1e-10;
    auto jf = [&](double w) { return m.eval(i, j, w); };

    auto thermal = [&](double w) -> cplx {
        if (w == 0.0) {
            const double h = 1e-6 * m.scale();
            return (jf(h) - jf(-h)) / (2.0 * h * beta);
        }
        const double step = w > 0.0 ? 1.0 : 0.0;
        return jf(w) * (detail::f_bose_real(beta * w) - step) * std::exp(-iu * w * t);
    };
    const QuadResult th_neg = adaptive_gk15(thermal, -cutoff, 0.0, quad_tol);
    const QuadResult th_pos = adaptive_gk15(thermal, 0.0, cutoff, quad_tol);

    auto head_f = [&](double w) { return jf(w) * std::exp(-iu * w * t); };
    const QuadResult head = adaptive_gk15(head_f, 0.0, cutoff, quad_tol);

    cplx total = th_neg.value + th_pos.value + head.value;
    double err = th_neg.error + th_pos.error + head.error;
    if (t != 0.0) {
        const QuadResult tail = oscillatory_tail(jf, cutoff, t);
        total += tail.value;
        err += tail.error;
    } else {
        auto mag = [&](double w) { return std::abs(jf(w)); };
        const QuadResult bound = adaptive_gk15(mag, cutoff, 100.0 * cutoff, 1e-8);
        err += std::abs(bound.value.real()) + bound.error;
    }
    return {total / pi, err / pi};
}

inline CorrelationValue correlation_fdt(const ScalarDensity& s, double beta, double t) {
    return correlation_fdt(MatrixDensity::isotropic(s, {true, false, false}), 0, 0, beta, t);
}

/// Deviation of the reconstructed expansion from the quadrature reference on
/// a time window.  The visible samples are n_samples points with the left
/// endpoint excluded; the declared bound additionally sweeps a geometric
/// refinement toward the left endpoint (where truncation error peaks) and is
/// inflated so it holds anywhere in the window, not just at the samples.
struct FitSample {
    int i = 0, j = 0;
    double t = 0.0;
    cplx model{0.0, 0.0};
    cplx reference{0.0, 0.0};
    double quad_error = 0.0;
};

struct BathFitReport {
    double window_lo = 0.0;
    double window_hi = 0.0;
    int samples_per_pair = 0;
    double max_abs_dev = 0.0;
    double mean_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    double declared_bound = 0.0;
    std::vector<FitSample> samples;
};

inline BathFitReport fit_report(const BathExpansion& ex, const MatrixDensity& m,
                                double window_lo = 0.0, double window_hi = 0.0,
                                int n_samples = 20) {
    require(n_samples >= 1, "fit report needs at least one sample");
    if (window_hi <= window_lo) {
        double rate = 0.0;
        for (const cplx& g : ex.exponents)
            rate = rate <= 0.0 ? g.real() : std::min(rate, g.real());
        require(rate > 0.0, "fit window cannot be derived from an empty expansion");
        window_hi = window_lo + 5.0 / rate;
    }
    BathFitReport rep;
    rep.window_lo = window_lo;
    rep.window_hi = window_hi;
    rep.samples_per_pair = n_samples;

    double sweep_max = 0.0;
    double mean_sum = 0.0;
    int mean_count = 0;
    for (int a = 0; a < ex.n_components(); ++a) {
        for (int b = 0; b < ex.n_components(); ++b) {
            const int i = ex.components[a], j = ex.components[b];
            auto probe = [&](double t, bool visible) {
                const CorrelationValue ref = correlation_fdt(m, i, j, ex.beta, t);
                const cplx model = ex.correlation(i, j, t);
                const double dev = std::abs(model - ref.value);
                sweep_max = std::max(sweep_max, dev);
                if (!visible) return;
                rep.samples.push_back({i, j, t, model, ref.value, ref.error});
                rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
                mean_sum += dev;
                ++mean_count;
                if (std::abs(ref.value) > 1e-12)
                    rep.max_rel_dev = std::max(rep.max_rel_dev, dev / std::abs(ref.value));
            };
            for (int k = 1; k <= n_samples; ++k)
                probe(window_lo + k * (window_hi - window_lo) / n_samples, true);
            for (int p = 1; p <= 24; ++p)
                probe(window_lo + (window_hi - window_lo) * std::pow(0.5, p), false);
        }
    }
    rep.mean_abs_dev = mean_count > 0 ? mean_sum / mean_count : 0.0;
    rep.declared_bound = 1.5 * sweep_max + 1e-13;
    return rep;
}

} // namespace deom
