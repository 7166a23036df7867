// Acceptance gate for the shipped guarantees. Every check pins its tolerance
// here, prints one line, and the binary exits nonzero if any line fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deom/deom.hpp"

namespace {

using namespace deom;

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
    int failed = 0;

    void line(int id, const char* name, bool pass, double worst, double tol, double seconds,
              const std::string& note = "") {
        if (!pass) ++failed;
        std::printf("[%s] %2d %-26s worst %-10.3e tol %-8.1e %7.2f s%s%s\n",
                    pass ? "PASS" : "FAIL", id, name, worst, tol, seconds,
                    note.empty() ? "" : "  ", note.c_str());
        std::fflush(stdout);
    }
};

std::string short_e(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    return buf;
}

// 1. Every shipped spectral density family, plus a genuinely matrix-valued
//    composite, satisfies conj(J_ij(w)) = -J_ij(-w) = J_ji(w) pointwise.
MatrixDensity composite_density() {
    MatrixDensity m;
    m.components = {true, true, true};
    m.entry(0, 0) = DrudeDensity{0.5, 1.0};
    m.entry(1, 1) = DrudeDensity{0.3, 1.0};
    m.entry(0, 1) = DrudeDensity{0.2, 1.0};
    m.entry(1, 0) = DrudeDensity{0.2, 1.0};
    m.entry(2, 2) = LorentzianDensity{0.2, 0.4, 1.3};
    return m;
}

void spectral_symmetry(Gate& gate) {
    const auto t0 = Clock::now();
    const double tol = 1e-12;
    std::vector<MatrixDensity> cases = {
        MatrixDensity::isotropic(DrudeDensity{0.5, 1.0}, {true, false, false}),
        MatrixDensity::isotropic(OhmicExpDensity{0.3, 2.0}, {false, true, false}),
        MatrixDensity::isotropic(LorentzianDensity{0.2, 0.4, 1.3}, {false, false, true}),
        composite_density(),
    };
    double worst = 0.0;
    for (const MatrixDensity& m : cases) {
        const double w_max = 10.0 * m.scale();
        std::vector<double> grid(1000);
        for (int k = 0; k < 1000; ++k) grid[k] = -w_max + 2.0 * w_max * k / 999.0;
        worst = std::max(worst, validate_symmetry(m, grid, tol).max_violation);
    }
    const double secs = seconds_since(t0);
    gate.line(1, "spectral_symmetry", worst <= tol && secs < 1.0, worst, tol, secs);
}

// 2. The exponential expansion reproduces the quadrature correlation function
//    of the same density, and the Pade form beats Matsubara at equal order.
void expansion_consistency(Gate& gate) {
    const auto t0 = Clock::now();
    const double tol = 1e-6;
    const ScalarDensity dr = DrudeDensity{0.5, 1.0};
    const double beta = 1.0;
    const BathExpansion pade = pade_expansion(dr, beta, 6);
    const BathExpansion mats = matsubara_expansion(dr, beta, 6);
    // Sampled as the fit reports sample reconstruction windows: the left
    // endpoint is excluded, since no finite expansion resolves the boundary
    // layer below the largest retained rate (the declared error bound covers
    // that region separately).
    double worst_pade = 0.0, worst_mats = 0.0;
    const int n = 20;
    for (int k = 1; k <= n; ++k) {
        const double t = 5.0 * k / n;
        const CorrelationValue ref = correlation_fdt(dr, beta, t);
        const double den = std::abs(ref.value);
        worst_pade = std::max(worst_pade, std::abs(pade.correlation(t) - ref.value) / den);
        worst_mats = std::max(worst_mats, std::abs(mats.correlation(t) - ref.value) / den);
    }
    const double secs = seconds_since(t0);
    gate.line(2, "expansion_consistency",
              worst_pade <= tol && worst_mats > worst_pade && secs < 10.0, worst_pade, tol,
              secs, "matsubara " + short_e(worst_mats) + " at equal order");
}

// 3. The stored conjugate pairing is exact: kbar is an involution, the paired
//    exponent is the complex conjugate with no rounding, and the multiset of
//    (conjugated exponent, conjugated coefficient) pairs equals the multiset
//    of (exponent, partner-conjugate coefficient) pairs under plain ==.
struct PairKey {
    cplx g;
    MatC c;
};

bool key_less(const PairKey& a, const PairKey& b) {
    if (a.g.real() != b.g.real()) return a.g.real() < b.g.real();
    if (a.g.imag() != b.g.imag()) return a.g.imag() < b.g.imag();
    for (Eigen::Index k = 0; k < a.c.size(); ++k) {
        const cplx x = a.c(k), y = b.c(k);
        if (x.real() != y.real()) return x.real() < y.real();
        if (x.imag() != y.imag()) return x.imag() < y.imag();
    }
    return false;
}

bool key_equal(const PairKey& a, const PairKey& b) {
    if (a.g != b.g) return false;
    for (Eigen::Index k = 0; k < a.c.size(); ++k)
        if (a.c(k) != b.c(k)) return false;
    return true;
}

void conjugate_pairing(Gate& gate) {
    const auto t0 = Clock::now();
    const ScalarDensity dr = DrudeDensity{0.5, 1.0};
    const ScalarDensity lo = LorentzianDensity{0.2, 0.6, 1.5};
    std::vector<BathExpansion> expansions = {
        pade_expansion(dr, 1.0, 6),      matsubara_expansion(dr, 1.0, 6),
        pade_expansion(lo, 1.0, 6),      matsubara_expansion(lo, 1.0, 6),
        pade_expansion(composite_density(), 1.0, 5),
    };
    int violations = 0;
    for (const BathExpansion& ex : expansions) {
        const int n = ex.n_exponents();
        if (int(ex.conjugate_map.size()) != n) {
            ++violations;
            continue;
        }
        for (int k = 0; k < n; ++k) {
            const int kb = ex.conjugate_map[k];
            if (kb < 0 || kb >= n || ex.conjugate_map[kb] != k) ++violations;
            else if (ex.exponents[kb].real() != ex.exponents[k].real()
                     || ex.exponents[kb].imag() != -ex.exponents[k].imag())
                ++violations;
        }
        // conj C(t) expands over the same exponents with the partner-conjugate
        // coefficients: {(conj g_k, conj eta_k)} = {(g_k, conj eta_kbar)}.
        std::vector<PairKey> lhs, rhs;
        for (int k = 0; k < n; ++k) {
            lhs.push_back({std::conj(ex.exponents[k]), ex.coefficients[k].conjugate()});
            const int kb = ex.conjugate_map[k];
            rhs.push_back({ex.exponents[k], ex.coefficients[kb].conjugate()});
        }
        std::sort(lhs.begin(), lhs.end(), key_less);
        std::sort(rhs.begin(), rhs.end(), key_less);
        for (int k = 0; k < n; ++k)
            if (!key_equal(lhs[k], rhs[k])) ++violations;
    }
    const double secs = seconds_since(t0);
    gate.line(3, "conjugate_pairing", violations == 0, double(violations), 0.0, secs,
              std::to_string(expansions.size()) + " expansions, equality with no tolerance");
}

// 4. With no bath the hierarchy reduces to unitary dynamics: a two-level
//    system and a ring in a rotating frame both match the independent oracle
//    in every density-matrix element at t = 10.
void closed_equivalence(Gate& gate) {
    const auto t0 = Clock::now();
    const double tol = 1e-8, dt = 1e-3, t_end = 10.0;
    double worst = 0.0;

    auto compare = [&](const SystemModel& model, const FrameEvaluator& frame,
                       const MatC& rho0) {
        HierarchyOptions opt;
        Hierarchy h(model, frame, opt);
        HierarchyState st = h.initial_state(rho0);
        std::vector<MatC> sim;
        h.propagate(st, t_end, dt, 2500,
                    [&](const HierarchyState& s) { sim.push_back(h.reduced(s)); });
        std::vector<double> grid;
        for (std::size_t k = 0; k < sim.size(); ++k) grid.push_back(2.5 * double(k));
        const OracleResult orc = closed_system_oracle(model, frame, rho0, grid);
        for (std::size_t k = 0; k < sim.size(); ++k)
            worst = std::max(worst, (sim[k] - orc.states[k]).cwiseAbs().maxCoeff());
    };

    auto tl = two_level_basis();
    std::array<std::optional<Operator>, 3> cp;
    cp[2] = tl.sz;
    VecC psi(2);
    psi << cplx(1.0, 0.0), cplx(0.6, 0.8);
    psi /= std::sqrt(2.0);
    compare(two_level_model(1.0, cp, 1.0), FrameEvaluator(FrameMotion{}, t_end + 1.0),
            psi * psi.adjoint());

    FrameMotion motion;
    motion.rotation.mode = RotationProfile::Mode::constant_axis;
    motion.rotation.axis = Vec3::UnitZ();
    motion.rotation.rate = 0.3;
    const SystemModel ring = ring_model(3, 1.0, 1.0);
    VecC phi = VecC::Ones(7) / std::sqrt(7.0);
    compare(ring, FrameEvaluator(motion, t_end + 1.0), phi * phi.adjoint());

    const double secs = seconds_since(t0);
    gate.line(4, "closed_system_equivalence", worst <= tol && secs < 10.0, worst, tol, secs,
              "two-level and rotating ring at t = 10");
}

// 5. Commuting coupling is solved exactly by the hierarchy: the coherence
//    magnitude follows the cumulant closed form of the same expansion, and
//    two extra tiers do not move it.
// 6. On that run the reduced trace stays at one and mutually conjugate slots
//    stay mutually adjoint, at every snapshot.
void dephasing_and_conservation(Gate& gate) {
    const auto t0 = Clock::now();
    const double tol_mag = 1e-4, tol_depth = 1e-6, tol_cons = 1e-8;
    const double dt = 0.002, t_end = 20.0;
    const int stride = 50;

    auto tl = two_level_basis();
    std::array<std::optional<Operator>, 3> cp;
    cp[2] = tl.sz;
    const SystemModel model = two_level_model(1.0, cp, 1.0);
    const BathExpansion ex = pade_expansion(
        MatrixDensity::isotropic(DrudeDensity{0.05, 1.0}, {false, false, true}), 1.0, 4);
    const MatC rho0 = 0.5 * MatC::Ones(2, 2);

    struct Track {
        std::vector<double> t;
        std::vector<double> mag;
        double trace_res = 0.0;
        double conj_res = 0.0;
    };
    auto run_depth = [&](int depth, bool conserve) {
        HierarchyOptions opt;
        opt.depth = depth;
        Hierarchy h(model, FrameEvaluator(FrameMotion{}, t_end + 1.0), FieldFrameSpec{}, ex,
                    opt);
        HierarchyState st = h.initial_state(rho0);
        Track tr;
        h.propagate(st, t_end, dt, stride, [&](const HierarchyState& s) {
            const MatC r = h.reduced(s);
            tr.t.push_back(s.t);
            tr.mag.push_back(std::abs(r(0, 1)));
            if (!conserve) return;
            tr.trace_res = std::max(tr.trace_res, std::abs(r.trace() - cplx{1.0, 0.0}));
            for (int slot = 0; slot < h.catalog().slot_count(); ++slot) {
                const MatC a = h.ado(s, slot);
                const MatC b = h.ado(s, h.conj_slot(slot));
                tr.conj_res = std::max(tr.conj_res, (a.adjoint() - b).norm());
            }
        });
        return tr;
    };

    const Track t8 = run_depth(8, true);
    const Track t10 = run_depth(10, false);

    double worst_mag = 0.0, worst_depth = 0.0;
    for (std::size_t k = 0; k < t8.t.size(); ++k) {
        const double oracle = 0.5 * std::exp(-dephasing_exponent(ex, t8.t[k]));
        worst_mag = std::max(worst_mag, std::abs(t8.mag[k] - oracle));
        worst_depth = std::max(worst_depth, std::abs(t8.mag[k] - t10.mag[k]));
    }
    const double secs = seconds_since(t0);
    gate.line(5, "pure_dephasing_exactness",
              worst_mag <= tol_mag && worst_depth <= tol_depth && secs < 120.0, worst_mag,
              tol_mag, secs, "two extra tiers shift " + short_e(worst_depth));
    gate.line(6, "conservation_laws",
              t8.trace_res <= tol_cons && t8.conj_res <= tol_cons,
              std::max(t8.trace_res, t8.conj_res), tol_cons, secs,
              "trace " + short_e(t8.trace_res) + ", conjugate slots " + short_e(t8.conj_res));
}

// 7. A lone tier-1 slot with everything decoupled decays as exp(-gamma t),
//    real or complex, tracked over three decay constants.
void free_decay(Gate& gate) {
    const auto t0 = Clock::now();
    const double tol = 1e-8;
    auto tl = two_level_basis();
    std::array<std::optional<Operator>, 3> cp;
    cp[2] = tl.sz;
    const SystemModel model = two_level_model(0.0, cp, 0.0);
    MatC seed(2, 2);
    seed << cplx(0.3, 0.0), cplx(-0.1, 0.2), cplx(0.05, 0.04), cplx(-0.25, 0.0);
    MatC rho0 = MatC::Zero(2, 2);
    rho0(0, 0) = 1.0;

    const std::vector<BathExpansion> expansions = {
        pade_expansion(ScalarDensity{DrudeDensity{0.4, 1.0}}, 1.0, 2),
        matsubara_expansion(ScalarDensity{LorentzianDensity{0.2, 0.6, 1.5}}, 1.0, 1),
    };
    double worst = 0.0;
    int modes_checked = 0;
    for (const BathExpansion& ex : expansions) {
        HierarchyOptions opt;
        opt.depth = 2;
        Hierarchy h(model, FrameEvaluator(FrameMotion{}, 1.0), FieldFrameSpec{}, ex, opt);
        for (int a = 0; a < h.n_modes(); ++a) {
            const cplx g = h.mode_exponent_value(a);
            std::vector<int> occ(h.n_modes(), 0);
            occ[a] = 1;
            const int slot = h.catalog().find(occ);
            HierarchyState st = h.initial_state(rho0);
            Eigen::Map<MatC>(st.block(slot), 2, 2) = seed;
            const MatC phys0 = h.ado(st, slot);
            const double leg = 1.0 / g.real();
            const double dtv = leg / 700.0;
            for (int n = 1; n <= 3; ++n) {
                h.propagate(st, n * leg, dtv);
                const MatC expect = phys0 * std::exp(-g * (double(n) * leg));
                worst = std::max(worst, (h.ado(st, slot) - expect).norm() / expect.norm());
            }
            ++modes_checked;
        }
    }
    const double secs = seconds_since(t0);
    gate.line(7, "free_decay_rates", worst <= tol, worst, tol, secs,
              std::to_string(modes_checked) + " modes, three decay constants each");
}

// 8. The moving-frame structure itself: the rotating-ring spectrum is exact,
//    the displacement and rotation conjugation identities hold on interior
//    blocks, and coupling components mix exactly with the frame rotation.
void noninertial_structure(Gate& gate) {
    const auto t0 = Clock::now();
    const double tol_exact = 1e-12, tol_interior = 1e-6;
    double worst_exact = 0.0, worst_interior = 0.0;

    {
        const double inertia = 2.0, rate = 0.3;
        const SystemModel ring = ring_model(5, inertia, 1.0);
        FrameMotion motion;
        motion.rotation.mode = RotationProfile::Mode::constant_axis;
        motion.rotation.axis = Vec3::UnitZ();
        motion.rotation.rate = rate;
        const FrameEvaluator frame(motion, 5.0);
        const MatC h = system_hamiltonian_at(ring, frame, 1.7).mat;
        for (int k = 0; k < ring.basis.dim; ++k) {
            const double m = double(ring.basis.labels[k]);
            worst_exact = std::max(worst_exact,
                                   std::abs(h(k, k) - (m * m / (2.0 * inertia) - rate * m)));
            for (int j = 0; j < ring.basis.dim; ++j)
                if (j != k) worst_exact = std::max(worst_exact, std::abs(h(k, j)));
        }
    }

    {
        const SystemModel osc = oscillator_model(60, 1.3, 0.9, 0);
        FrameMotion motion;
        motion.translation.mode = TranslationProfile::Mode::constant_accel;
        motion.translation.accel = Vec3(0.4, 0.0, 0.0);
        const auto rep = verify_transformation_identities(osc, FrameEvaluator(motion, 3.0),
                                                          1.7, 20);
        worst_interior = std::max(worst_interior, rep.worst());

        const SystemModel ring = ring_model(25, 1.0, 1.0);
        FrameMotion spin;
        spin.rotation.mode = RotationProfile::Mode::constant_axis;
        spin.rotation.axis = Vec3::UnitZ();
        spin.rotation.rate = 0.3;
        const auto rep2 = verify_transformation_identities(ring, FrameEvaluator(spin, 3.0),
                                                           2.1, 20);
        worst_interior = std::max(worst_interior, rep2.worst());
    }

    {
        const SystemModel ring = ring_model(4, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0);
        FrameMotion motion;
        motion.rotation.mode = RotationProfile::Mode::constant_axis;
        motion.rotation.axis = Vec3::UnitZ();
        motion.rotation.rate = 0.45;
        motion.translation.mode = TranslationProfile::Mode::boost;
        motion.translation.velocity = Vec3(0.2, -0.1, 0.05);
        const FrameEvaluator frame(motion, 3.0);
        const double t = 2.0, th = 0.45 * t;
        const double c = std::cos(th), s = std::sin(th);
        const MatC px = ring.momentum_ops[0]->mat, py = ring.momentum_ops[1]->mat;

        const CouplingSet st = coupling_operators_at(ring, frame, FieldFrameSpec{}, t);
        worst_exact = std::max(worst_exact,
                               (st.op_part[0]->mat - (c * px - s * py)).cwiseAbs().maxCoeff());
        worst_exact = std::max(worst_exact,
                               (st.op_part[1]->mat - (s * px + c * py)).cwiseAbs().maxCoeff());
        if (st.op_part[2]) worst_exact = std::max(worst_exact, st.op_part[2]->mat.norm());
        worst_exact = std::max(
            worst_exact,
            (st.scalar_part - motion.translation.velocity).cwiseAbs().maxCoeff());

        FieldFrameSpec comoving;
        comoving.mode = FieldFrame::comoving;
        const CouplingSet cm = coupling_operators_at(ring, frame, comoving, t);
        worst_exact = std::max(worst_exact, (cm.op_part[0]->mat - px).cwiseAbs().maxCoeff());
        worst_exact = std::max(worst_exact, (cm.op_part[1]->mat - py).cwiseAbs().maxCoeff());
        const Vec3 v = motion.translation.velocity;
        const Vec3 vr(c * v(0) + s * v(1), -s * v(0) + c * v(1), v(2));
        worst_exact = std::max(worst_exact, (cm.scalar_part - vr).cwiseAbs().maxCoeff());

        auto tl = two_level_basis();
        std::array<std::optional<Operator>, 3> cpz;
        cpz[2] = tl.sz;
        const SystemModel spin = two_level_model(1.0, cpz, 2.0);
        FrameMotion tilt;
        tilt.rotation.mode = RotationProfile::Mode::constant_axis;
        tilt.rotation.axis = Vec3::UnitX();
        tilt.rotation.rate = 0.7;
        const double tx = 1.3, thx = 0.7 * tx;
        const CouplingSet sx = coupling_operators_at(spin, FrameEvaluator(tilt, 2.0),
                                                     FieldFrameSpec{}, tx);
        worst_exact = std::max(
            worst_exact,
            (sx.op_part[1]->mat - (-std::sin(thx)) * tl.sz.mat).cwiseAbs().maxCoeff());
        worst_exact = std::max(
            worst_exact,
            (sx.op_part[2]->mat - std::cos(thx) * tl.sz.mat).cwiseAbs().maxCoeff());
        if (sx.op_part[0]) worst_exact = std::max(worst_exact, sx.op_part[0]->mat.norm());
    }

    const double secs = seconds_since(t0);
    gate.line(8, "noninertial_structure",
              worst_exact <= tol_exact && worst_interior <= tol_interior, worst_exact,
              tol_exact, secs,
              "interior identities " + short_e(worst_interior) + " (tol 1e-06)");
}

// 9. Weak transverse coupling relaxes a two-level system to the Gibbs
//    populations of its own Hamiltonian.
void thermalization(Gate& gate) {
    const auto t0 = Clock::now();
    const double tol = 0.02;
    auto tl = two_level_basis();
    std::array<std::optional<Operator>, 3> cp;
    cp[0] = tl.sx;
    const SystemModel model = two_level_model(1.0, cp, 1.0);
    const BathExpansion ex = pade_expansion(ScalarDensity{DrudeDensity{0.01, 1.0}}, 1.0, 2);
    HierarchyOptions opt;
    opt.depth = 4;
    const double t_end = 250.0;
    Hierarchy h(model, FrameEvaluator(FrameMotion{}, t_end + 1.0), FieldFrameSpec{}, ex, opt);
    MatC rho0 = MatC::Zero(2, 2);
    rho0(0, 0) = 1.0;
    HierarchyState st = h.initial_state(rho0);
    h.propagate(st, t_end, 0.005);
    const MatC rho = h.reduced(st);
    const MatC gibbs = gibbs_oracle(
        system_hamiltonian_at(model, FrameEvaluator(FrameMotion{}, 1.0), 0.0).mat, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 2; ++k)
        worst = std::max(worst,
                         std::abs(rho(k, k).real() - gibbs(k, k).real()) / gibbs(k, k).real());
    const double secs = seconds_since(t0);
    gate.line(9, "thermalization", worst <= tol && secs < 300.0, worst, tol, secs,
              "populations vs Gibbs at t = 250");
}

// 10. Identical configurations give byte-identical CSV output, and a resumed
//     checkpoint reproduces the uninterrupted file exactly.
void determinism_and_resume(Gate& gate) {
    const auto t0 = Clock::now();
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "deom_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    Json j;
    j["system"] = {{"type", "two_level"}, {"omega0", 1.0}, {"coupling", {{"z", "sz"}}}};
    j["initial_state"] = {{"kind", "uniform"}};
    j["bath"] = {{"family", "drude"}, {"lambda", 0.05}, {"gamma_c", 1.0},
                 {"beta", 1.0},       {"method", "pade"}, {"k_bose", 4}};
    j["hierarchy"] = {{"depth", 6}, {"dt", 0.002}, {"t_final", 1.0}, {"stride", 50}};
    j["output"] = {{"path", (dir / "a.csv").string()},
                   {"checkpoint_path", (dir / "run.ckpt").string()},
                   {"checkpoint_at", 0.5}};
    const RunConfig cfg = parse_config_text(j.dump());

    run(cfg);
    run(cfg, (dir / "b.csv").string());
    const std::string a = detail::read_text_file((dir / "a.csv").string());
    const std::string b = detail::read_text_file((dir / "b.csv").string());
    const bool rerun_same = !a.empty() && a == b;

    std::size_t pos = 0;
    for (int lines = 0; lines < 7 && pos != std::string::npos; ++lines)
        pos = a.find('\n', pos + 1);
    const bool cut_ok = pos != std::string::npos;
    bool resume_same = false;
    if (cut_ok) {
        detail::write_text_file((dir / "part.csv").string(), a.substr(0, pos + 1));
        resume_run((dir / "run.ckpt").string(), (dir / "part.csv").string());
        resume_same = detail::read_text_file((dir / "part.csv").string()) == a;
    }
    fs::remove_all(dir);

    const double secs = seconds_since(t0);
    const bool pass = rerun_same && resume_same;
    gate.line(10, "determinism_and_resume", pass, pass ? 0.0 : 1.0, 0.0, secs,
              std::string("rerun ") + (rerun_same ? "identical" : "differs") + ", resume "
                  + (resume_same ? "identical" : "differs"));
}

template <class F>
void guarded(Gate& gate, std::vector<std::pair<int, const char*>> ids, F&& fn) {
    try {
        fn(gate);
    } catch (const std::exception& e) {
        for (const auto& [id, name] : ids)
            gate.line(id, name, false, std::nan(""), 0.0, 0.0, e.what());
    }
}

} // namespace

int main() {
    Gate gate;
    guarded(gate, {{1, "spectral_symmetry"}}, spectral_symmetry);
    guarded(gate, {{2, "expansion_consistency"}}, expansion_consistency);
    guarded(gate, {{3, "conjugate_pairing"}}, conjugate_pairing);
    guarded(gate, {{4, "closed_system_equivalence"}}, closed_equivalence);
    guarded(gate, {{5, "pure_dephasing_exactness"}, {6, "conservation_laws"}},
            dephasing_and_conservation);
    guarded(gate, {{7, "free_decay_rates"}}, free_decay);
    guarded(gate, {{8, "noninertial_structure"}}, noninertial_structure);
    guarded(gate, {{9, "thermalization"}}, thermalization);
    guarded(gate, {{10, "determinism_and_resume"}}, determinism_and_resume);
    std::printf("%d of 10 criteria passed\n", 10 - gate.failed);
    return gate.failed == 0 ? 0 : 1;
}
