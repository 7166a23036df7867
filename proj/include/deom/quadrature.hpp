#pragma once

#include <cmath>
#include <vector>

#include "common.hpp"

namespace deom {

struct QuadResult {
    cplx value{0.0, 0.0};
    double error = 0.0;
};

namespace detail {

// 15-point Kronrod rule with the embedded 7-point Gauss rule for the error
// estimate. Nodes and weights from the standard tables.
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
};
inline constexpr double gk_weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
inline constexpr double gauss_weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

} // namespace detail

template <typename F>
QuadResult gk15(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    cplx kronrod{0.0, 0.0};
    cplx gauss{0.0, 0.0};
    for (int k = 0; k < 8; ++k) {
        const double x = detail::gk_nodes[k];
        const cplx fsum = (k == 7) ? f(mid) : f(mid - half * x) + f(mid + half * x);
        kronrod += detail::gk_weights[k] * fsum;
        if (k % 2 == 1) gauss += detail::gauss_weights[k / 2] * fsum;  // embedded rule
    }
    QuadResult r;
    r.value = half * kronrod;
    r.error = std::abs(half * (kronrod - gauss));
    return r;
}

template <typename F>
QuadResult adaptive_gk15(F&& f, double a, double b, double abs_tol, int max_depth = 28) {
    QuadResult whole = gk15(f, a, b);
    if (whole.error <= abs_tol || max_depth <= 0) return whole;
    const double mid = 0.5 * (a + b);
    QuadResult left = adaptive_gk15(f, a, mid, 0.5 * abs_tol, max_depth - 1);
    QuadResult right = adaptive_gk15(f, mid, b, 0.5 * abs_tol, max_depth - 1);
    return {left.value + right.value, left.error + right.error};
}

/// Integral of amp(w) exp(-i w t) over [w0, inf) for slowly decaying
/// amplitudes: half-period panels are summed with repeated averaging of the
/// partial sums, which converges the alternating panel series long before
/// the amplitude itself has decayed.
template <typename F>
QuadResult oscillatory_tail(F&& amp, double w0, double t, int n_panels = 40) {
    require(t != 0.0, "oscillatory tail needs a nonzero time");
    const double h = pi / std::abs(t);
    std::vector<cplx> partial(n_panels);
    double panel_err = 0.0;
    cplx run{0.0, 0.0};
    for (int k = 0; k < n_panels; ++k) {
        const double a = w0 + k * h;
        auto g = [&](double w) { return amp(w) * std::exp(-iu * w * t); };
        QuadResult p = adaptive_gk15(g, a, a + h, 1e-14, 10);
        run += p.value;
        panel_err += p.error;
        partial[k] = run;
    }
    cplx prev = partial.back();
    std::vector<cplx> row = partial;
    while (row.size() > 1) {
        prev = row.back();
        for (std::size_t k = 0; k + 1 < row.size(); ++k)
            row[k] = 0.5 * (row[k] + row[k + 1]);
        row.pop_back();
    }
    QuadResult r;
    r.value = row[0];
    r.error = panel_err + std::abs(row[0] - prev);
    return r;
}

} // namespace deom
