#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bath_expansion.hpp"
#include "common.hpp"
#include "frames.hpp"
#include "model.hpp"

namespace deom {

/// All occupation multi-indices with sum <= depth over n_modes labels, in
/// graded lexicographic order: ascending tier, lexicographic within a tier.
inline std::vector<std::vector<int>> enumerate_indices(int n_modes, int depth) {
    require(n_modes >= 1, "index enumeration needs at least one mode");
    require(depth >= 0, "truncation depth must be nonnegative");
    std::vector<std::vector<int>> out;
    std::vector<int> idx(n_modes, 0);
    std::function<void(int, int)> fill = [&](int pos, int remaining) {
        if (pos == n_modes - 1) {
            idx[pos] = remaining;
            out.push_back(idx);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            idx[pos] = v;
            fill(pos + 1, remaining - v);
        }
    };
    for (int t = 0; t <= depth; ++t) fill(0, t);
    return out;
}

/// C(n_modes + depth, depth) without integer overflow.
inline double catalog_size_estimate(int n_modes, int depth) {
    double v = 1.0;
    for (int k = 1; k <= depth; ++k) v *= double(n_modes + k) / double(k);
    return v;
}

struct HierarchyCatalog {
    int n_modes = 0;
    int depth = 0;
    std::vector<std::vector<int>> indices;  // slot -> occupation multi-index
    std::vector<int> tier;                  // slot -> sum of occupations
    std::vector<int> up, dn;                // [slot * n_modes + a]; -1 when absent
    std::map<std::vector<int>, int> slot_of;

    int slot_count() const { return int(indices.size()); }

    int find(const std::vector<int>& idx) const {
        auto it = slot_of.find(idx);
        return it == slot_of.end() ? -1 : it->second;
    }
};

inline HierarchyCatalog build_catalog(int n_modes, int depth) {
    HierarchyCatalog c;
    c.n_modes = n_modes;
    c.depth = depth;
    if (n_modes == 0) {  // closed system: a single tier-0 slot
        c.indices.push_back({});
        c.tier.push_back(0);
        c.slot_of.emplace(std::vector<int>{}, 0);
        return c;
    }
    c.indices = enumerate_indices(n_modes, depth);
    const int n = c.slot_count();
    c.tier.resize(n);
    c.up.assign(std::size_t(n) * n_modes, -1);
    c.dn.assign(std::size_t(n) * n_modes, -1);
    for (int s = 0; s < n; ++s) {
        c.slot_of.emplace(c.indices[s], s);
        int sum = 0;
        for (int v : c.indices[s]) sum += v;
        c.tier[s] = sum;
    }
    std::vector<int> probe;
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < n_modes; ++a) {
            probe = c.indices[s];
            if (c.tier[s] < depth) {
                ++probe[a];
                c.up[std::size_t(s) * n_modes + a] = c.find(probe);
                --probe[a];
            }
            if (probe[a] > 0) {
                --probe[a];
                c.dn[std::size_t(s) * n_modes + a] = c.find(probe);
            }
        }
    }
    return c;
}

struct HierarchyOptions {
    int depth = 4;
    bool rescale = true;
    double filter_tol = 0.0;        // 0 disables slot filtering
    double divergence_bound = 1e6;  // largest tolerated matrix entry
    double memory_budget_mb = 4096.0;
};

/// Flat hierarchy state: slot-major column-major d x d blocks.  Time is
/// derived as t_base + steps * dt so that a resumed propagation replays the
/// exact stage times of the uninterrupted one.
struct HierarchyState {
    int dim = 0;
    bool scaled = false;
    double t_base = 0.0;
    std::int64_t steps = 0;
    double dt = 0.0;
    double t = 0.0;
    std::vector<cplx> data;
    std::vector<std::uint8_t> below;  // filter history: slot norm under tol at the
                                      // previous step boundary

    cplx* block(int s) { return data.data() + std::size_t(s) * dim * dim; }
    const cplx* block(int s) const { return data.data() + std::size_t(s) * dim * dim; }
};

namespace detail {

inline void mul2(const cplx* a, const cplx* b, cplx* c) {
    c[0] = a[0] * b[0] + a[2] * b[1];
    c[1] = a[1] * b[0] + a[3] * b[1];
    c[2] = a[0] * b[2] + a[2] * b[3];
    c[3] = a[1] * b[2] + a[3] * b[3];
}

struct StageOperators {
    MatC h;
    std::vector<MatC> qcomp;  // tier-up operator per active bath component
    std::vector<MatC> b;      // per mode: sum_j eta_k(c,j) Q_j
    std::vector<MatC> bb;     // per mode: sum_j conj(eta_kbar(c,j)) Q_j
    std::vector<cplx> h2, q2, b2, bb2;  // flat copies driving the d = 2 kernel
};

} // namespace detail

/// The hierarchy engine: catalog, per-mode coupling data, the equations of
/// motion, and fixed-step propagation.
///
/// Dissipaton labels pair an active bath component with an expansion
/// exponent; labels whose coefficient rows vanish identically (an exponent
/// belonging entirely to other components) are dropped, since their DDOs stay
/// zero.  With H_SE = -sum_i Q_i(t) A_i(t), each DDO obeys
///   d/dt rho_n = -i[H_S(t), rho_n] - (sum_a n_a gamma_a) rho_n
///                + i sum_a  f_up(n_a) [Q_{i(a)}(t), rho_{n+a}]
///                + i sum_a  f_dn(n_a) (B_a(t) rho_{n-a} - rho_{n-a} Bbar_a(t)),
/// with B_a = sum_j eta_{i(a) j kappa(a)} Q_j and Bbar_a the conjugate-pole
/// partner sum_j conj(eta_{i(a) j kbar(a)}) Q_j.  Unscaled, f_up = 1 and
/// f_dn = n_a; with scaling the DDOs carry (n_a! |s_a|^{n_a})^{-1/2} and the
/// factors become sqrt((n_a + 1) s_a) and sqrt(n_a / s_a), where s_a is the
/// modulus of the diagonal coefficient.
class Hierarchy {
  public:
    Hierarchy(SystemModel model, FrameEvaluator frame, FieldFrameSpec field,
              BathExpansion expansion, HierarchyOptions options)
        : model_(std::move(model)),
          frame_(std::move(frame)),
          field_(std::move(field)),
          expansion_(std::move(expansion)),
          options_(options),
          dim_(model_.basis.dim) {
        require(options_.depth >= 0, "hierarchy depth must be nonnegative");
        build_modes();
        check_budget();
        catalog_ = build_catalog(int(mode_component_.size()), options_.depth);
        build_tables();
        static_frame_ =
            frame_.rotation_profile().mode == RotationProfile::Mode::none
            && (frame_.translation_profile().mode == TranslationProfile::Mode::none
                || frame_.translation_profile().mode == TranslationProfile::Mode::boost)
            && field_.mode != FieldFrame::custom;
        if (static_frame_) {
            static_ops_.emplace();
            fill_stage_operators(0.0, *static_ops_);
        }
    }

    /// Closed-system engine: no bath, single tier-0 slot.
    Hierarchy(SystemModel model, FrameEvaluator frame, HierarchyOptions options)
        : Hierarchy(std::move(model), std::move(frame), FieldFrameSpec{},
                    BathExpansion{}, options) {}

    const HierarchyCatalog& catalog() const { return catalog_; }
    const BathExpansion& expansion() const { return expansion_; }
    const SystemModel& model() const { return model_; }
    const FrameEvaluator& frame() const { return frame_; }
    const FieldFrameSpec& field_frame() const { return field_; }
    const HierarchyOptions& options() const { return options_; }
    int dim() const { return dim_; }
    int n_modes() const { return int(mode_component_.size()); }
    const std::vector<std::string>& warnings() const { return warnings_; }

    int mode_component(int a) const { return expansion_.components[mode_component_[a]]; }
    int mode_exponent(int a) const { return mode_exponent_[a]; }
    cplx mode_exponent_value(int a) const { return expansion_.exponents[mode_exponent_[a]]; }
    int conj_mode(int a) const { return mode_conj_[a]; }

    /// Slot holding the occupation index with every label swapped for its
    /// conjugate partner.
    int conj_slot(int s) const { return conj_slot_[s]; }

    HierarchyState initial_state(const MatC& rho0) const {
        require(rho0.rows() == dim_ && rho0.cols() == dim_,
                "initial state dimension does not match the system basis");
        require((rho0 - rho0.adjoint()).norm() <= 1e-10,
                "initial state must be Hermitian to 1e-10");
        require(std::abs(rho0.trace() - cplx{1.0, 0.0}) <= 1e-10,
                "initial state must have unit trace to 1e-10");
        Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (rho0 + rho0.adjoint()));
        require(es.eigenvalues().minCoeff() >= -1e-10,
                "initial state must be positive semidefinite to 1e-10");
        HierarchyState s;
        s.dim = dim_;
        s.scaled = options_.rescale;
        s.data.assign(std::size_t(catalog_.slot_count()) * dim_ * dim_, cplx{0.0, 0.0});
        Eigen::Map<MatC>(s.block(0), dim_, dim_) = rho0;
        return s;
    }

    /// Full equations of motion at time t, no filtering.
    void rhs(const HierarchyState& s, double t, std::vector<cplx>& dy) const {
        require(int(s.data.size()) == catalog_.slot_count() * dim_ * dim_,
                "state size does not match the catalog");
        require(s.scaled == options_.rescale,
                "state scaling flag does not match the engine options");
        dy.resize(s.data.size());
        const detail::StageOperators& ops = stage(t);
        rhs_core(s.data, ops, dy, nullptr);
    }

    /// One RK4 step of size dt.  Throws DivergenceError when any matrix entry
    /// leaves the configured bound.
    void step(HierarchyState& s, double dt) {
        require(dt > 0.0, "propagation requires dt > 0");
        require(s.scaled == options_.rescale,
                "state scaling flag does not match the engine options");
        if (s.dt != dt) {  // new segment: rebase the step counter
            s.t_base = s.t;
            s.steps = 0;
            s.dt = dt;
        }
        const std::size_t n = s.data.size();
        k_.resize(n);
        acc_.resize(n);
        ytmp_.resize(n);

        const std::vector<std::uint8_t>* filt = nullptr;
        if (options_.filter_tol > 0.0) {
            update_filter(s);
            filt = &filtered_;
        }

        const double t0 = s.t_base + double(s.steps) * dt;
        const double tm = t0 + 0.5 * dt;
        const detail::StageOperators& ops0 = stage(t0);
        rhs_core(s.data, ops0, k_, filt);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] = k_[i];
            ytmp_[i] = s.data[i] + 0.5 * dt * k_[i];
        }
        const detail::StageOperators& opsm = stage(tm);
        rhs_core(ytmp_, opsm, k_, filt);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] += 2.0 * k_[i];
            ytmp_[i] = s.data[i] + 0.5 * dt * k_[i];
        }
        rhs_core(ytmp_, opsm, k_, filt);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] += 2.0 * k_[i];
            ytmp_[i] = s.data[i] + dt * k_[i];
        }
        const detail::StageOperators& ops1 = stage(t0 + dt);
        rhs_core(ytmp_, ops1, k_, filt);
        const double w = dt / 6.0;
        for (std::size_t i = 0; i < n; ++i) s.data[i] += w * (acc_[i] + k_[i]);

        s.steps += 1;
        s.t = s.t_base + double(s.steps) * dt;
        check_divergence(s);
    }

    /// Fixed-step propagation to t_end (within dt).  The observer fires at
    /// every step boundary whose global step count is a multiple of stride,
    /// including the starting one.
    void propagate(HierarchyState& s, double t_end, double dt, int stride = 1,
                   const std::function<void(const HierarchyState&)>& observer = {}) {
        require(dt > 0.0, "propagation requires dt > 0");
        require(stride >= 1, "snapshot stride must be at least 1");
        const double span = t_end - s.t;
        require(span >= -0.5 * dt, "propagation target lies before the current time");
        const std::int64_t n_steps = std::llround(span / dt);
        warn_stability(dt);
        for (std::int64_t k = 0;; ++k) {
            if (observer && s.steps % stride == 0) observer(s);
            if (k == n_steps) break;
            step(s, dt);
        }
    }

    /// Representation change: forward multiplies each DDO by
    /// prod_a (n_a! |s_a|^{n_a})^{-1/2}, inverse undoes it.  Tier 0 is
    /// untouched either way.
    void rescale_state(HierarchyState& s, bool forward) const {
        require(s.scaled != forward, forward ? "state is already scaled"
                                             : "state is not scaled");
        for (int slot = 0; slot < catalog_.slot_count(); ++slot) {
            const double f = forward ? 1.0 / slot_scale_[slot] : slot_scale_[slot];
            if (f == 1.0) continue;
            cplx* p = s.block(slot);
            for (int k = 0; k < dim_ * dim_; ++k) p[k] *= f;
        }
        s.scaled = forward;
    }

    /// Physical (unscaled) DDO for one slot.
    MatC ado(const HierarchyState& s, int slot) const {
        MatC m = Eigen::Map<const MatC>(s.block(slot), dim_, dim_);
        if (s.scaled) m *= slot_scale_[slot];
        return m;
    }

    MatC reduced(const HierarchyState& s) const { return ado(s, 0); }

    double slot_scale(int slot) const { return slot_scale_[slot]; }

  private:
    SystemModel model_;
    FrameEvaluator frame_;
    FieldFrameSpec field_;
    BathExpansion expansion_;
    HierarchyOptions options_;
    int dim_ = 0;
    HierarchyCatalog catalog_;
    bool static_frame_ = false;

    std::vector<int> mode_component_;  // active-component slot per label
    std::vector<int> mode_exponent_;   // expansion exponent per label
    std::vector<int> mode_conj_;       // label carrying the conjugate exponent
    std::vector<double> mode_scale_;   // |diagonal coefficient|, 1 when disabled

    std::vector<cplx> decay_;          // per slot: sum_a n_a gamma_a
    std::vector<double> fup_, fdn_;    // per slot and label, flattened
    std::vector<double> slot_scale_;   // sqrt(prod_a n_a! |s_a|^{n_a})
    std::vector<int> conj_slot_;

    std::vector<std::string> warnings_;
    bool stability_warned_ = false;

    mutable detail::StageOperators scratch_ops_;
    std::optional<detail::StageOperators> static_ops_;
    std::vector<cplx> k_, acc_, ytmp_;
    std::vector<std::uint8_t> filtered_, below_now_;

    void build_modes() {
        const int nc = expansion_.n_components();
        for (int k = 0; k < expansion_.n_exponents(); ++k) {
            for (int c = 0; c < nc; ++c) {
                const int kb = expansion_.conjugate_map[k];
                const bool live = expansion_.coefficients[k].row(c).cwiseAbs().maxCoeff() > 0.0
                                || expansion_.coefficients[kb].row(c).cwiseAbs().maxCoeff() > 0.0;
                if (!live) continue;
                mode_component_.push_back(c);
                mode_exponent_.push_back(k);
            }
        }
        const int m = int(mode_component_.size());
        mode_conj_.assign(m, -1);
        mode_scale_.assign(m, 1.0);
        for (int a = 0; a < m; ++a) {
            const int kb = expansion_.conjugate_map[mode_exponent_[a]];
            for (int b = 0; b < m; ++b)
                if (mode_component_[b] == mode_component_[a] && mode_exponent_[b] == kb)
                    mode_conj_[a] = b;
            require(mode_conj_[a] >= 0, "expansion is not closed under conjugation");
            const double s =
                std::abs(expansion_.coefficients[mode_exponent_[a]](mode_component_[a],
                                                                    mode_component_[a]));
            if (options_.rescale && s == 0.0)
                warnings_.push_back("scaling disabled for label " + std::to_string(a)
                                    + ": zero-modulus diagonal coefficient");
            mode_scale_[a] = s > 0.0 ? s : 1.0;
        }
    }

    void check_budget() {
        const int m = int(mode_component_.size());
        const double slots = catalog_size_estimate(m, options_.depth);
        const double block = 16.0 * dim_ * dim_;
        // state + derivative + accumulator + staging + checkpoint/observable copies
        const double bytes = slots * (block * 6.0 + m * 28.0 + 96.0);
        const double budget = options_.memory_budget_mb * 1048576.0;
        if (bytes > budget || slots > 2e9) {
            throw BudgetError(
                "hierarchy would need " + std::to_string(std::llround(slots)) + " slots ("
                + std::to_string(bytes / 1048576.0) + " MiB) but the budget is "
                + std::to_string(options_.memory_budget_mb)
                + " MiB; lower the depth or raise memory_budget_mb");
        }
    }

    void build_tables() {
        const int n = catalog_.slot_count();
        const int m = n_modes();
        decay_.assign(n, cplx{0.0, 0.0});
        slot_scale_.assign(n, 1.0);
        fup_.assign(std::size_t(n) * std::max(m, 1), 0.0);
        fdn_.assign(std::size_t(n) * std::max(m, 1), 0.0);
        conj_slot_.assign(n, 0);
        std::vector<int> probe;
        for (int s = 0; s < n; ++s) {
            double scale2 = 1.0;
            for (int a = 0; a < m; ++a) {
                const int na = catalog_.indices[s][a];
                decay_[s] += double(na) * expansion_.exponents[mode_exponent_[a]];
                for (int k = 1; k <= na; ++k) scale2 *= double(k) * mode_scale_[a];
                if (options_.rescale) {
                    fup_[std::size_t(s) * m + a] = std::sqrt(double(na + 1) * mode_scale_[a]);
                    fdn_[std::size_t(s) * m + a] = std::sqrt(double(na) / mode_scale_[a]);
                } else {
                    fup_[std::size_t(s) * m + a] = 1.0;
                    fdn_[std::size_t(s) * m + a] = double(na);
                }
            }
            slot_scale_[s] = std::sqrt(scale2);
            if (m > 0) {
                probe.assign(m, 0);
                for (int a = 0; a < m; ++a) probe[mode_conj_[a]] = catalog_.indices[s][a];
                conj_slot_[s] = catalog_.find(probe);
            }
        }
    }

    const detail::StageOperators& stage(double t) const {
        if (static_ops_) return *static_ops_;
        fill_stage_operators(t, scratch_ops_);
        return scratch_ops_;
    }

    void fill_stage_operators(double t, detail::StageOperators& ops) const {
        ops.h = system_hamiltonian_at(model_, frame_, t).mat;
        const int nc = expansion_.n_components();
        const int m = n_modes();
        ops.qcomp.assign(nc, MatC());
        if (nc > 0) {
            const CouplingSet set = coupling_operators_at(model_, frame_, field_, t);
            for (int c = 0; c < nc; ++c)
                ops.qcomp[c] =
                    full_coupling_operator(set, model_.basis, expansion_.components[c]).mat;
        }
        ops.b.assign(m, MatC());
        ops.bb.assign(m, MatC());
        for (int a = 0; a < m; ++a) {
            const int c = mode_component_[a];
            const int k = mode_exponent_[a];
            const int kb = expansion_.conjugate_map[k];
            MatC b = MatC::Zero(dim_, dim_);
            MatC bb = MatC::Zero(dim_, dim_);
            for (int j = 0; j < nc; ++j) {
                b += expansion_.coefficients[k](c, j) * ops.qcomp[j];
                bb += std::conj(expansion_.coefficients[kb](c, j)) * ops.qcomp[j];
            }
            ops.b[a] = std::move(b);
            ops.bb[a] = std::move(bb);
        }
        if (dim_ == 2) {
            auto flatten = [](const std::vector<MatC>& src, std::vector<cplx>& dst) {
                dst.resize(src.size() * 4);
                for (std::size_t i = 0; i < src.size(); ++i)
                    std::memcpy(dst.data() + 4 * i, src[i].data(), 4 * sizeof(cplx));
            };
            ops.h2.resize(4);
            std::memcpy(ops.h2.data(), ops.h.data(), 4 * sizeof(cplx));
            flatten(ops.qcomp, ops.q2);
            flatten(ops.b, ops.b2);
            flatten(ops.bb, ops.bb2);
        }
    }

    void rhs_core(const std::vector<cplx>& y, const detail::StageOperators& ops,
                  std::vector<cplx>& dy, const std::vector<std::uint8_t>* filtered) const {
        if (dim_ == 2) {
            rhs_core_2(y, ops, dy, filtered);
            return;
        }
        const int n = catalog_.slot_count();
        const int m = n_modes();
        const int dd = dim_ * dim_;
        using Map = Eigen::Map<MatC>;
        using CMap = Eigen::Map<const MatC>;
        for (int s = 0; s < n; ++s) {
            Map d(dy.data() + std::size_t(s) * dd, dim_, dim_);
            const bool skip = filtered && (*filtered)[s];
            if (skip) {
                d.setZero();
            } else {
                CMap ys(y.data() + std::size_t(s) * dd, dim_, dim_);
                d = -iu * (ops.h * ys - ys * ops.h) - decay_[s] * ys;
            }
            for (int a = 0; a < m; ++a) {
                // A filtered slot keeps only the flow sourced one tier below,
                // so it revives as soon as its feeder grows past the tolerance.
                const int su = catalog_.up[std::size_t(s) * m + a];
                if (!skip && su >= 0) {
                    CMap yu(y.data() + std::size_t(su) * dd, dim_, dim_);
                    const MatC& q = ops.qcomp[mode_component_[a]];
                    d += (iu * fup_[std::size_t(s) * m + a]) * (q * yu - yu * q);
                }
                const int sd = catalog_.dn[std::size_t(s) * m + a];
                if (sd >= 0) {
                    CMap yd(y.data() + std::size_t(sd) * dd, dim_, dim_);
                    d += (iu * fdn_[std::size_t(s) * m + a])
                       * (ops.b[a] * yd - yd * ops.bb[a]);
                }
            }
        }
    }

    void rhs_core_2(const std::vector<cplx>& y, const detail::StageOperators& ops,
                    std::vector<cplx>& dy, const std::vector<std::uint8_t>* filtered) const {
        const int n = catalog_.slot_count();
        const int m = n_modes();
        const cplx* h = ops.h2.data();
        cplx t1[4], t2[4];
        for (int s = 0; s < n; ++s) {
            const cplx* ys = y.data() + 4 * std::size_t(s);
            cplx* d = dy.data() + 4 * std::size_t(s);
            const bool skip = filtered && (*filtered)[s];
            if (skip) {
                d[0] = d[1] = d[2] = d[3] = cplx{0.0, 0.0};
            } else {
                detail::mul2(h, ys, t1);
                detail::mul2(ys, h, t2);
                const cplx g = decay_[s];
                for (int k = 0; k < 4; ++k) d[k] = -iu * (t1[k] - t2[k]) - g * ys[k];
            }
            for (int a = 0; a < m; ++a) {
                const int su = catalog_.up[std::size_t(s) * m + a];
                if (!skip && su >= 0) {
                    const cplx* q = ops.q2.data() + 4 * std::size_t(mode_component_[a]);
                    const cplx* yu = y.data() + 4 * std::size_t(su);
                    detail::mul2(q, yu, t1);
                    detail::mul2(yu, q, t2);
                    const cplx f = iu * fup_[std::size_t(s) * m + a];
                    for (int k = 0; k < 4; ++k) d[k] += f * (t1[k] - t2[k]);
                }
                const int sd = catalog_.dn[std::size_t(s) * m + a];
                if (sd >= 0) {
                    const cplx* yd = y.data() + 4 * std::size_t(sd);
                    detail::mul2(ops.b2.data() + 4 * std::size_t(a), yd, t1);
                    detail::mul2(yd, ops.bb2.data() + 4 * std::size_t(a), t2);
                    const cplx f = iu * fdn_[std::size_t(s) * m + a];
                    for (int k = 0; k < 4; ++k) d[k] += f * (t1[k] - t2[k]);
                }
            }
        }
    }

    void update_filter(HierarchyState& s) {
        const int n = catalog_.slot_count();
        below_now_.assign(n, 0);
        filtered_.assign(n, 0);
        if (s.below.empty()) s.below.assign(n, 0);
        const double tol2 = options_.filter_tol * options_.filter_tol;
        for (int slot = 0; slot < n; ++slot) {
            double nrm2 = 0.0;
            const cplx* p = s.block(slot);
            for (int k = 0; k < dim_ * dim_; ++k) nrm2 += std::norm(p[k]);
            below_now_[slot] = nrm2 < tol2 ? 1 : 0;
            filtered_[slot] = (below_now_[slot] && s.below[slot]) ? 1 : 0;
        }
        filtered_[0] = 0;  // the reduced state is never skipped
        s.below = below_now_;
    }

    void check_divergence(const HierarchyState& s) const {
        const double bound = options_.divergence_bound;
        double worst = 0.0;
        std::size_t at = 0;
        for (std::size_t i = 0; i < s.data.size(); ++i) {
            const double v = std::max(std::abs(s.data[i].real()), std::abs(s.data[i].imag()));
            if (v > worst) {
                worst = v;
                at = i;
            }
        }
        if (worst > bound) {
            const int slot = int(at / std::size_t(dim_ * dim_));
            throw DivergenceError("hierarchy diverged at t = " + std::to_string(s.t)
                                  + ": slot " + std::to_string(slot) + " (tier "
                                  + std::to_string(catalog_.tier[slot]) + ") reached |entry| = "
                                  + std::to_string(worst)
                                  + "; reduce dt or revisit the expansion");
        }
    }

    void warn_stability(double dt) {
        if (stability_warned_) return;
        double gmax = 0.0;
        for (int a = 0; a < n_modes(); ++a)
            gmax = std::max(gmax, std::abs(mode_exponent_value(a)));
        const double h0 = stage(0.0).h.norm();
        const double fastest = std::max(gmax * options_.depth, h0);
        if (dt * fastest > 2.78) {
            warnings_.push_back("dt = " + std::to_string(dt)
                                + " exceeds the RK4 stability estimate (dt * "
                                + std::to_string(fastest) + " > 2.78); expect divergence");
            stability_warned_ = true;
        }
    }
};

/// Binary checkpoint: engine-independent state snapshot plus an opaque
/// configuration blob so a resume can rebuild the engine.  Byte layout is
/// native little-endian doubles; files are only meant to round-trip on the
/// machine that wrote them.
inline void save_checkpoint(const HierarchyState& s, const std::string& path,
                            const std::string& config_blob) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot open checkpoint file for writing: " + path);
    const char magic[8] = {'D', 'E', 'O', 'M', 'C', 'K', 'P', '1'};
    f.write(magic, 8);
    auto put_u64 = [&](std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&](double v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    put_u64(std::uint64_t(config_blob.size()));
    f.write(config_blob.data(), std::streamsize(config_blob.size()));
    put_u64(std::uint64_t(s.dim));
    put_u64(std::uint64_t(s.scaled ? 1 : 0));
    put_f64(s.t_base);
    put_u64(std::uint64_t(s.steps));
    put_f64(s.dt);
    put_f64(s.t);
    put_u64(std::uint64_t(s.data.size()));
    f.write(reinterpret_cast<const char*>(s.data.data()),
            std::streamsize(s.data.size() * sizeof(cplx)));
    put_u64(std::uint64_t(s.below.size()));
    if (!s.below.empty())
        f.write(reinterpret_cast<const char*>(s.below.data()), std::streamsize(s.below.size()));
    require(f.good(), "checkpoint write failed: " + path);
}

struct CheckpointData {
    HierarchyState state;
    std::string config_blob;
};

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open checkpoint file: " + path);
    char magic[8];
    f.read(magic, 8);
    require(f.good() && std::memcmp(magic, "DEOMCKP1", 8) == 0,
            "not a hierarchy checkpoint: " + path);
    auto get_u64 = [&] {
        std::uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    auto get_f64 = [&] {
        double v = 0.0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    CheckpointData out;
    const std::uint64_t blob_len = get_u64();
    require(blob_len < (1u << 30), "checkpoint config blob is implausibly large");
    out.config_blob.resize(blob_len);
    f.read(out.config_blob.data(), std::streamsize(blob_len));
    out.state.dim = int(get_u64());
    out.state.scaled = get_u64() != 0;
    out.state.t_base = get_f64();
    out.state.steps = std::int64_t(get_u64());
    out.state.dt = get_f64();
    out.state.t = get_f64();
    const std::uint64_t n = get_u64();
    require(n < (std::uint64_t(1) << 34), "checkpoint state is implausibly large");
    out.state.data.resize(n);
    f.read(reinterpret_cast<char*>(out.state.data.data()), std::streamsize(n * sizeof(cplx)));
    const std::uint64_t nb = get_u64();
    require(nb <= n, "checkpoint filter flags are inconsistent");
    out.state.below.resize(nb);
    if (nb > 0) f.read(reinterpret_cast<char*>(out.state.below.data()), std::streamsize(nb));
    require(f.good(), "checkpoint read failed: " + path);
    return out;
}

} // namespace deom
