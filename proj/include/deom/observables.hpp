#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hierarchy.hpp"

namespace deom {

/// One requested output column. Hybrid system-bath quantities come from the
/// first hierarchy tier: the singly-occupied DDOs are the dissipaton moments
/// of the correlated total state, so no separate bath propagation is needed.
struct ObservableSpec {
    enum class Kind { population, coherence, expectation, coupling_energy, dissipaton_moment };
    Kind kind = Kind::population;
    int i = 0;
    int j = 0;
    std::string name;
    Operator op;  // expectation payload

    static ObservableSpec population(int i) {
        ObservableSpec s;
        s.kind = Kind::population;
        s.i = i;
        s.name = "population_" + std::to_string(i);
        return s;
    }

    static ObservableSpec coherence(int i, int j) {
        ObservableSpec s;
        s.kind = Kind::coherence;
        s.i = i;
        s.j = j;
        s.name = "coherence_" + std::to_string(i) + "_" + std::to_string(j);
        return s;
    }

    static ObservableSpec expectation(std::string name, Operator op) {
        ObservableSpec s;
        s.kind = Kind::expectation;
        s.name = std::move(name);
        s.op = std::move(op);
        return s;
    }

    static ObservableSpec coupling_energy() {
        ObservableSpec s;
        s.kind = Kind::coupling_energy;
        s.name = "coupling_energy";
        return s;
    }

    /// component is the spatial index, exponent the expansion pole index.
    static ObservableSpec dissipaton_moment(int component, int exponent) {
        ObservableSpec s;
        s.kind = Kind::dissipaton_moment;
        s.i = component;
        s.j = exponent;
        s.name = std::string("moment_") + component_name(component) + "_"
               + std::to_string(exponent);
        return s;
    }
};

inline Operator reduced_density(const Hierarchy& h, const HierarchyState& s) {
    return {h.model().basis, h.reduced(s)};
}

namespace detail {

/// Slot of the singly-occupied index for the label coupling (component,
/// exponent); -1 when the catalog has no first tier.
inline int moment_slot(const Hierarchy& h, int component, int exponent) {
    int label = -1;
    for (int a = 0; a < h.n_modes(); ++a)
        if (h.mode_component(a) == component && h.mode_exponent(a) == exponent) label = a;
    require(label >= 0, std::string("no hierarchy label couples component ")
                            + component_name(component) + " with exponent "
                            + std::to_string(exponent));
    if (h.options().depth < 1) return -1;
    std::vector<int> idx(h.n_modes(), 0);
    idx[label] = 1;
    return h.catalog().find(idx);
}

} // namespace detail

/// tr_S of the singly-occupied DDO: the expectation of one dissipaton over
/// the correlated total state.
inline cplx dissipaton_moment(const Hierarchy& h, const HierarchyState& s, int component,
                              int exponent) {
    const int slot = detail::moment_slot(h, component, exponent);
    if (slot < 0) return cplx{0.0, 0.0};
    return h.ado(s, slot).trace();
}

/// Interaction energy -sum_{i kappa} tr_S[Q_i(t) rho^(1)_{(i,kappa)}].  The
/// result is real for Hermitian couplings and conjugate-closed expansions;
/// the imaginary residual is a propagation diagnostic.
inline cplx coupling_energy_full(const Hierarchy& h, const HierarchyState& s, double t) {
    cplx acc{0.0, 0.0};
    if (h.n_modes() == 0 || h.options().depth < 1) return acc;
    const CouplingSet set = coupling_operators_at(h.model(), h.frame(), h.field_frame(), t);
    std::vector<int> idx(h.n_modes(), 0);
    for (int a = 0; a < h.n_modes(); ++a) {
        idx.assign(h.n_modes(), 0);
        idx[a] = 1;
        const int slot = h.catalog().find(idx);
        if (slot < 0) continue;
        const MatC q = full_coupling_operator(set, h.model().basis, h.mode_component(a)).mat;
        acc += (q * h.ado(s, slot)).trace();
    }
    return -acc;
}

inline double coupling_energy(const Hierarchy& h, const HierarchyState& s, double t,
                              double* imag_residual = nullptr) {
    const cplx e = coupling_energy_full(h, s, t);
    if (imag_residual) *imag_residual = std::abs(e.imag());
    return e.real();
}

inline cplx evaluate_observable(const Hierarchy& h, const HierarchyState& s,
                                const ObservableSpec& spec) {
    const int d = h.dim();
    switch (spec.kind) {
    case ObservableSpec::Kind::population:
        require(spec.i >= 0 && spec.i < d, "population index outside the basis");
        return h.reduced(s)(spec.i, spec.i);
    case ObservableSpec::Kind::coherence:
        require(spec.i >= 0 && spec.i < d && spec.j >= 0 && spec.j < d,
                "coherence indices outside the basis");
        return h.reduced(s)(spec.i, spec.j);
    case ObservableSpec::Kind::expectation:
        require(spec.op.mat.rows() == d && spec.op.mat.cols() == d,
                "expectation operator dimension mismatch");
        return (spec.op.mat * h.reduced(s)).trace();
    case ObservableSpec::Kind::coupling_energy:
        return coupling_energy_full(h, s, s.t);
    case ObservableSpec::Kind::dissipaton_moment:
        return dissipaton_moment(h, s, spec.i, spec.j);
    }
    throw ConfigError("unknown observable kind");
}

struct TimeSeries {
    std::vector<std::string> names;
    std::vector<double> times;
    std::vector<std::vector<cplx>> rows;
};

inline void append_row(TimeSeries& ts, const Hierarchy& h, const HierarchyState& s,
                       const std::vector<ObservableSpec>& specs) {
    if (ts.names.empty())
        for (const auto& spec : specs) ts.names.push_back(spec.name);
    ts.times.push_back(s.t);
    std::vector<cplx> row;
    row.reserve(specs.size());
    for (const auto& spec : specs) row.push_back(evaluate_observable(h, s, spec));
    ts.rows.push_back(std::move(row));
}

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_header(const TimeSeries& ts) {
    std::string h = "t";
    for (const auto& n : ts.names) h += "," + n + ".re," + n + ".im";
    h += "\n";
    return h;
}

inline std::string csv_row(const TimeSeries& ts, std::size_t r) {
    std::string line = format_g17(ts.times[r]);
    for (const cplx& v : ts.rows[r]) {
        line += ',';
        line += format_g17(v.real());
        line += ',';
        line += format_g17(v.imag());
    }
    line += '\n';
    return line;
}

/// Header `t,<name>.re,<name>.im,...`, one row per snapshot, every value
/// printed with 17 significant digits so doubles round-trip losslessly.
inline void write_csv(std::ostream& os, const TimeSeries& ts) {
    os << csv_header(ts);
    for (std::size_t r = 0; r < ts.rows.size(); ++r) os << csv_row(ts, r);
}

} // namespace deom
