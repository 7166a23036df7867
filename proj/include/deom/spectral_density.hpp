#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "common.hpp"

namespace deom {

/// J(w) = 2 lambda gamma_c w / (w^2 + gamma_c^2); lambda is the
/// reorganization energy (1/pi) Int J/w dw.
struct DrudeDensity {
    double lambda = 0.0;
    double gamma_c = 1.0;
};

/// J(w) = pi lambda (w/gamma_c) exp(-|w|/gamma_c), normalized so lambda is
/// again the reorganization energy.
struct OhmicExpDensity {
    double lambda = 0.0;
    double gamma_c = 1.0;
};

/// Underdamped mode: J(w) = 2 lambda gamma w0^2 w / ((w^2 - w0^2)^2 + gamma^2 w^2).
struct LorentzianDensity {
    double lambda = 0.0;
    double gamma = 0.1;
    double omega0 = 1.0;
};

/// Discrete modes broadened to Lorentzian lines of half-width `width`
/// (default 1e-2 of the mode frequency when left unset):
/// J(w) = sum_k g2_k width_k [((w-w_k)^2 + width_k^2)^-1 - ((w+w_k)^2 + width_k^2)^-1].
struct DiscreteModesDensity {
    struct Mode {
        double omega = 1.0;
        double g2 = 0.0;
        double width = 0.0;  // 0 means the 1e-2 w default
    };
    std::vector<Mode> modes;

    double mode_width(std::size_t k) const {
        return modes[k].width > 0 ? modes[k].width : 1e-2 * modes[k].omega;
    }
};

/// Arbitrary complex-valued entry for hand-built composites (tests and
/// off-diagonal couplings). `scale` hints the frequency extent for quadrature.
struct CustomDensity {
    std::function<cplx(double)> fn;
    double scale = 1.0;
};

using ScalarDensity =
    std::variant<DrudeDensity, OhmicExpDensity, LorentzianDensity, DiscreteModesDensity,
                 CustomDensity>;

inline cplx eval_spectral_density(const ScalarDensity& spec, double w) {
    return std::visit(
        [w](const auto& s) -> cplx {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DrudeDensity>) {
                return 2.0 * s.lambda * s.gamma_c * w / (w * w + s.gamma_c * s.gamma_c);
            } else if constexpr (std::is_same_v<T, OhmicExpDensity>) {
                return pi * s.lambda * (w / s.gamma_c) * std::exp(-std::abs(w) / s.gamma_c);
            } else if constexpr (std::is_same_v<T, LorentzianDensity>) {
                const double d = w * w - s.omega0 * s.omega0;
                return 2.0 * s.lambda * s.gamma * s.omega0 * s.omega0 * w
                     / (d * d + s.gamma * s.gamma * w * w);
            } else if constexpr (std::is_same_v<T, DiscreteModesDensity>) {
                double v = 0.0;
                for (std::size_t k = 0; k < s.modes.size(); ++k) {
                    const double wd = s.mode_width(k);
                    const double dm = w - s.modes[k].omega;
                    const double dp = w + s.modes[k].omega;
                    v += s.modes[k].g2 * wd * (1.0 / (dm * dm + wd * wd) - 1.0 / (dp * dp + wd * wd));
                }
                return v;
            } else {
                return s.fn(w);
            }
        },
        spec);
}

/// Frequency extent used to place quadrature cutoffs.
inline double density_scale(const ScalarDensity& spec) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DrudeDensity>) return s.gamma_c;
            else if constexpr (std::is_same_v<T, OhmicExpDensity>) return s.gamma_c;
            else if constexpr (std::is_same_v<T, LorentzianDensity>) return s.omega0 + s.gamma;
            else if constexpr (std::is_same_v<T, DiscreteModesDensity>) {
                double v = 1.0;
                for (std::size_t k = 0; k < s.modes.size(); ++k)
                    v = std::max(v, s.modes[k].omega + s.mode_width(k));
                return v;
            } else {
                return s.scale;
            }
        },
        spec);
}

/// 3x3 matrix of scalar entries over the spatial components. Entries never
/// set are zero. `isotropic` fills the diagonal of the active components
/// with one shared scalar density.
struct MatrixDensity {
    std::array<std::optional<ScalarDensity>, 9> entries;
    std::array<bool, 3> components{false, false, false};

    static MatrixDensity isotropic(ScalarDensity j, std::array<bool, 3> comps) {
        MatrixDensity m;
        m.components = comps;
        for (int i = 0; i < 3; ++i)
            if (comps[i]) m.entries[4 * i] = j;
        return m;
    }

    const std::optional<ScalarDensity>& entry(int i, int j) const { return entries[3 * i + j]; }
    std::optional<ScalarDensity>& entry(int i, int j) { return entries[3 * i + j]; }

    cplx eval(int i, int j, double w) const {
        const auto& e = entry(i, j);
        return e ? eval_spectral_density(*e, w) : cplx{0.0, 0.0};
    }

    double scale() const {
        double v = 1.0;
        for (const auto& e : entries)
            if (e) v = std::max(v, density_scale(*e));
        return v;
    }

    std::vector<int> active_components() const {
        std::vector<int> out;
        for (int i = 0; i < 3; ++i)
            if (components[i]) out.push_back(i);
        return out;
    }
};

struct SymmetryViolation {
    int i = 0, j = 0;
    double omega = 0.0;
    double magnitude = 0.0;
    std::string relation;
};

struct SymmetryReport {
    double max_violation = 0.0;
    double max_positivity_violation = 0.0;
    std::vector<SymmetryViolation> violations;  // capped, worst kept first

    bool passed(double tol = 1e-12) const {
        return max_violation <= tol && max_positivity_violation <= tol;
    }
};

namespace detail {

inline void record_violation(SymmetryReport& rep, int i, int j, double w, double mag,
                             const char* relation) {
    rep.max_violation = std::max(rep.max_violation, mag);
    if (rep.violations.size() < 16)
        rep.violations.push_back({i, j, w, mag, relation});
}

} // namespace detail

/// Pointwise checks of the reality structure on a frequency grid: conjugation
/// maps +w to -w with a sign, the matrix is Hermitian at every w, diagonal
/// entries are nonnegative on the positive axis, and off-diagonal entries are
/// bounded by the diagonal ones.
inline SymmetryReport validate_symmetry(const MatrixDensity& m, const std::vector<double>& grid,
                                        double tol = 1e-12) {
    require(!grid.empty(), "symmetry validation needs a nonempty grid");
    SymmetryReport rep;
    const auto comps = m.active_components();
    for (double w : grid) {
        for (int i : comps) {
            for (int j : comps) {
                const cplx jw = m.eval(i, j, w);
                const double odd = std::abs(std::conj(jw) + m.eval(i, j, -w));
                if (odd > tol) detail::record_violation(rep, i, j, w, odd, "conj J(w) = -J(-w)");
                const double herm = std::abs(std::conj(jw) - m.eval(j, i, w));
                if (herm > tol) detail::record_violation(rep, i, j, w, herm, "conj J_ij(w) = J_ji(w)");
            }
            if (w != 0.0) {
                const cplx jd = m.eval(i, i, w);
                if (std::abs(jd.imag()) > tol)
                    detail::record_violation(rep, i, i, w, std::abs(jd.imag()), "diagonal real");
                const double pos = jd.real() / w;
                rep.max_positivity_violation = std::max(rep.max_positivity_violation, -pos);
            }
            for (int j : comps) {
                if (j == i) continue;
                const double cross = std::norm(m.eval(i, j, w))
                                   - m.eval(i, i, w).real() * m.eval(j, j, w).real();
                rep.max_positivity_violation = std::max(rep.max_positivity_violation, cross);
            }
        }
    }
    return rep;
}

inline SymmetryReport validate_symmetry(const ScalarDensity& spec, const std::vector<double>& grid,
                                        double tol = 1e-12) {
    return validate_symmetry(MatrixDensity::isotropic(spec, {true, false, false}), grid, tol);
}

} // namespace deom
