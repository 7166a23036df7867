#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "deom/hierarchy.hpp"

using namespace deom;
using Catch::Matchers::ContainsSubstring;

namespace {

MatC rand2(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MatC m(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = cplx{u(rng), u(rng)};
    return m;
}

Eigen::Map<const MatC> view(const HierarchyState& s, int slot) {
    return Eigen::Map<const MatC>(s.block(slot), s.dim, s.dim);
}

MatC mixed_state() {
    auto tl = two_level_basis();
    return 0.5 * tl.identity.mat + 0.3 * tl.sx.mat + 0.1 * tl.sz.mat;
}

} // namespace

TEST_CASE("multi-index enumeration is graded lexicographic") {
    const auto idx22 = enumerate_indices(2, 2);
    const std::vector<std::vector<int>> expect = {{0, 0}, {0, 1}, {1, 0},
                                                  {0, 2}, {1, 1}, {2, 0}};
    REQUIRE(idx22 == expect);
    CHECK(enumerate_indices(1, 5).size() == 6);
    CHECK(enumerate_indices(6, 4).size() == 210);
    CHECK(catalog_size_estimate(6, 4) == Catch::Approx(210.0));

    const HierarchyCatalog cat = build_catalog(2, 2);
    REQUIRE(cat.slot_count() == 6);
    CHECK(cat.tier == std::vector<int>{0, 1, 1, 2, 2, 2});

    // raising from the root
    CHECK(cat.up[0 * 2 + 0] == 2);
    CHECK(cat.up[0 * 2 + 1] == 1);
    CHECK(cat.dn[0 * 2 + 0] == -1);
    CHECK(cat.dn[0 * 2 + 1] == -1);
    // slot (0,1): up fills either label, down only the occupied one
    CHECK(cat.up[1 * 2 + 0] == 4);
    CHECK(cat.up[1 * 2 + 1] == 3);
    CHECK(cat.dn[1 * 2 + 0] == -1);
    CHECK(cat.dn[1 * 2 + 1] == 0);
    // top tier has no raising neighbors
    for (int s = 3; s < 6; ++s)
        for (int a = 0; a < 2; ++a) CHECK(cat.up[s * 2 + a] == -1);
    // raising and lowering are mutually inverse wherever both exist
    for (int s = 0; s < 6; ++s)
        for (int a = 0; a < 2; ++a) {
            const int su = cat.up[s * 2 + a];
            if (su >= 0) CHECK(cat.dn[su * 2 + a] == s);
        }
    CHECK(cat.find({1, 1}) == 4);
    CHECK(cat.find({3, 0}) == -1);
}

TEST_CASE("memory budget overruns are rejected with the computed size") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sz, std::nullopt, std::nullopt});
    const BathExpansion bath = matsubara_expansion(DrudeDensity{0.1, 1.0}, 1.0, 6);
    REQUIRE(bath.n_exponents() == 7);

    HierarchyOptions opt;
    opt.depth = 8;
    opt.memory_budget_mb = 0.01;
    REQUIRE_THROWS_AS(Hierarchy(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt), BudgetError);
    REQUIRE_THROWS_WITH(Hierarchy(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt), ContainsSubstring("6435"));
}

TEST_CASE("initial state is validated and placed in the root slot") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sz, std::nullopt, std::nullopt});
    HierarchyOptions opt;
    opt.depth = 2;
    opt.rescale = false;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{},
                matsubara_expansion(DrudeDensity{0.1, 1.0}, 1.0, 0), opt);
    REQUIRE(h.n_modes() == 1);
    REQUIRE(h.catalog().slot_count() == 3);

    const MatC rho = mixed_state();
    HierarchyState s = h.initial_state(rho);
    REQUIRE(s.data.size() == 3u * 4u);
    CHECK(s.t == 0.0);
    CHECK((view(s, 0) - rho).norm() == 0.0);
    CHECK(view(s, 1).norm() == 0.0);
    CHECK(view(s, 2).norm() == 0.0);

    MatC bad_trace = MatC::Zero(2, 2);
    bad_trace(0, 0) = 0.6;
    bad_trace(1, 1) = 0.6;
    REQUIRE_THROWS_AS(h.initial_state(bad_trace), ConfigError);
    REQUIRE_THROWS_WITH(h.initial_state(bad_trace), ContainsSubstring("unit trace"));

    MatC non_herm = rho;
    non_herm(0, 1) += cplx{0.0, 1e-3};
    REQUIRE_THROWS_AS(h.initial_state(non_herm), ConfigError);
    REQUIRE_THROWS_WITH(h.initial_state(non_herm), ContainsSubstring("Hermitian"));

    MatC indefinite = MatC::Zero(2, 2);
    indefinite(0, 0) = 1.5;
    indefinite(1, 1) = -0.5;
    REQUIRE_THROWS_AS(h.initial_state(indefinite), ConfigError);
    REQUIRE_THROWS_WITH(h.initial_state(indefinite), ContainsSubstring("positive semidefinite"));
}

TEST_CASE("two-slot hierarchy matches the hand-expanded equations") {
    const double omega0 = 0.9, lambda = 0.35, gamma = 1.3, beta = 0.7;
    auto tl = two_level_basis();
    SystemModel model = two_level_model(omega0, {tl.sz, std::nullopt, std::nullopt});
    const BathExpansion bath = matsubara_expansion(DrudeDensity{lambda, gamma}, beta, 0);
    REQUIRE(bath.n_exponents() == 1);
    const cplx eta = bath.coefficients[0](0, 0);

    HierarchyOptions opt;
    opt.depth = 1;
    opt.rescale = false;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt);
    REQUIRE(h.catalog().slot_count() == 2);

    std::mt19937 rng(42);
    HierarchyState s = h.initial_state(mixed_state());
    const MatC r1 = rand2(rng);
    Eigen::Map<MatC>(s.block(1), 2, 2) = r1;

    std::vector<cplx> dy;
    h.rhs(s, 0.0, dy);

    const MatC hm = 0.5 * omega0 * tl.sz.mat;
    const MatC q = tl.sz.mat;
    const MatC r0 = view(s, 0);
    const MatC d0 = -iu * (hm * r0 - r0 * hm) + iu * (q * r1 - r1 * q);
    const MatC d1 = -iu * (hm * r1 - r1 * hm) - cplx{gamma, 0.0} * r1
                  + iu * (eta * (q * r0) - std::conj(eta) * (r0 * q));

    const Eigen::Map<const MatC> got0(dy.data(), 2, 2), got1(dy.data() + 4, 2, 2);
    CHECK((got0 - d0).norm() < 1e-14);
    CHECK((got1 - d1).norm() < 1e-14);

    // the reduced-slot derivative is traceless
    CHECK(std::abs(got0.trace()) < 1e-14);

    // the equations are linear in the state
    HierarchyState a = s, b = s;
    Eigen::Map<MatC>(a.block(0), 2, 2) = rand2(rng);
    Eigen::Map<MatC>(a.block(1), 2, 2) = rand2(rng);
    Eigen::Map<MatC>(b.block(0), 2, 2) = rand2(rng);
    Eigen::Map<MatC>(b.block(1), 2, 2) = rand2(rng);
    const cplx alpha{0.37, -1.21};
    HierarchyState comb = a;
    for (std::size_t i = 0; i < comb.data.size(); ++i)
        comb.data[i] = alpha * a.data[i] + b.data[i];
    std::vector<cplx> da, db, dc;
    h.rhs(a, 0.0, da);
    h.rhs(b, 0.0, db);
    h.rhs(comb, 0.0, dc);
    double worst = 0.0;
    for (std::size_t i = 0; i < dc.size(); ++i)
        worst = std::max(worst, std::abs(dc[i] - (alpha * da[i] + db[i])));
    CHECK(worst < 1e-13);
}

TEST_CASE("zero charge leaves unitary motion plus pure label decay") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.1, {tl.sz, std::nullopt, std::nullopt}, 0.0);
    const double beta = 0.9;
    const BathExpansion bath = matsubara_expansion(DrudeDensity{0.4, 1.2}, beta, 1);
    REQUIRE(bath.n_exponents() == 2);

    HierarchyOptions opt;
    opt.depth = 2;
    opt.rescale = false;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt);
    REQUIRE(h.n_modes() == 2);
    REQUIRE(h.catalog().slot_count() == 6);

    std::mt19937 rng(7);
    HierarchyState s = h.initial_state(mixed_state());
    for (int slot = 1; slot < 6; ++slot) Eigen::Map<MatC>(s.block(slot), 2, 2) = rand2(rng);

    std::vector<cplx> dy;
    h.rhs(s, 0.0, dy);

    const MatC hm = 0.5 * 1.1 * tl.sz.mat;
    for (int slot = 0; slot < 6; ++slot) {
        cplx decay{0.0, 0.0};
        for (int a = 0; a < 2; ++a)
            decay += double(h.catalog().indices[slot][a]) * h.mode_exponent_value(a);
        const MatC y = view(s, slot);
        const MatC want = -iu * (hm * y - y * hm) - decay * y;
        CHECK((Eigen::Map<const MatC>(dy.data() + 4 * slot, 2, 2) - want).norm() < 1e-14);
    }
}

TEST_CASE("closed-system propagation matches the unitary oracle") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {std::nullopt, std::nullopt, std::nullopt});
    HierarchyOptions opt;
    opt.depth = 0;
    Hierarchy h(model, FrameEvaluator{}, opt);
    CHECK(h.n_modes() == 0);
    REQUIRE(h.catalog().slot_count() == 1);

    const MatC rho0 = 0.5 * (tl.identity.mat + tl.sx.mat);
    HierarchyState s = h.initial_state(rho0);
    h.propagate(s, 10.0, 1e-3);
    CHECK(s.t == Catch::Approx(10.0).margin(1e-12));

    const Operator hop = 0.5 * tl.sz;
    const MatC want = unitary_propagate(hop, {tl.basis, rho0}, 10.0).mat;
    CHECK((h.reduced(s) - want).norm() < 1e-8);
}

TEST_CASE("propagation converges at fourth order in the step size") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sx, std::nullopt, std::nullopt});
    const BathExpansion bath = matsubara_expansion(DrudeDensity{0.5, 1.0}, 1.0, 0);
    HierarchyOptions opt;
    opt.depth = 3;
    opt.rescale = false;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt);

    const MatC rho0 = mixed_state();
    auto run = [&](double dt) {
        HierarchyState s = h.initial_state(rho0);
        h.propagate(s, 0.5, dt);
        return h.reduced(s);
    };
    const MatC ref = run(0.025 / 8.0);
    const double e1 = (run(0.025) - ref).norm();
    const double e2 = (run(0.0125) - ref).norm();
    REQUIRE(e1 > 1e-12);  // above roundoff, so the ratio is meaningful
    const double ratio = e1 / e2;
    CHECK(ratio > 10.0);
    CHECK(ratio < 30.0);
}

TEST_CASE("nonpositive steps are rejected") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sz, std::nullopt, std::nullopt});
    HierarchyOptions opt;
    opt.depth = 0;
    Hierarchy h(model, FrameEvaluator{}, opt);
    HierarchyState s = h.initial_state(0.5 * tl.identity.mat + 0.5 * tl.sz.mat);
    CHECK_THROWS_AS(h.step(s, 0.0), ConfigError);
    CHECK_THROWS_AS(h.propagate(s, 1.0, -0.1), ConfigError);
    CHECK_THROWS_AS(h.propagate(s, 1.0, 0.1, 0), ConfigError);
}

TEST_CASE("scaled and unscaled runs describe the same physics") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sx, std::nullopt, std::nullopt});
    const BathExpansion bath = matsubara_expansion(DrudeDensity{0.3, 1.0}, 1.0, 1);

    HierarchyOptions scaled_opt;
    scaled_opt.depth = 4;
    scaled_opt.rescale = true;
    Hierarchy hs(model, FrameEvaluator{}, FieldFrameSpec{}, bath, scaled_opt);
    CHECK(hs.warnings().empty());

    HierarchyOptions plain_opt = scaled_opt;
    plain_opt.rescale = false;
    Hierarchy hp(model, FrameEvaluator{}, FieldFrameSpec{}, bath, plain_opt);

    const MatC rho0 = mixed_state();
    HierarchyState ss = hs.initial_state(rho0);
    HierarchyState sp = hp.initial_state(rho0);
    hs.propagate(ss, 1.0, 0.01);
    hp.propagate(sp, 1.0, 0.01);

    CHECK((hs.reduced(ss) - hp.reduced(sp)).norm() < 1e-8);
    for (int slot = 0; slot < hs.catalog().slot_count(); ++slot)
        CHECK((hs.ado(ss, slot) - hp.ado(sp, slot)).norm() < 1e-8);

    // representation change round-trips and never touches the root slot
    const HierarchyState before = ss;
    hs.rescale_state(ss, false);
    CHECK(std::memcmp(ss.block(0), before.block(0), 4 * sizeof(cplx)) == 0);
    CHECK_FALSE(ss.scaled);
    CHECK_THROWS_AS(hs.rescale_state(ss, false), ConfigError);
    hs.rescale_state(ss, true);
    double worst = 0.0;
    for (std::size_t i = 0; i < ss.data.size(); ++i)
        worst = std::max(worst, std::abs(ss.data[i] - before.data[i]));
    CHECK(worst < 1e-14);
}

TEST_CASE("zero-modulus diagonal coefficients disable scaling with a warning") {
    MatrixDensity md;
    md.entries[1] = DrudeDensity{0.2, 1.0};  // xy
    md.entries[3] = DrudeDensity{0.2, 1.0};  // yx
    md.components = {true, true, false};

    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sx, tl.sy, std::nullopt});
    HierarchyOptions opt;
    opt.depth = 2;
    opt.rescale = true;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{},
                matsubara_expansion(md, 1.0, 0), opt);
    REQUIRE(h.n_modes() == 2);
    REQUIRE(h.warnings().size() == 2);
    CHECK_THAT(h.warnings()[0], ContainsSubstring("zero-modulus"));

    HierarchyState s = h.initial_state(mixed_state());
    h.propagate(s, 0.2, 0.01);
    CHECK(std::abs(h.reduced(s).trace() - cplx{1.0, 0.0}) < 1e-10);
}

TEST_CASE("seeded labels decay with their own exponents") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(0.0, {std::nullopt, std::nullopt, std::nullopt}, 0.0);
    const MatC seed = (MatC(2, 2) << cplx{0.3, 0.1}, cplx{-0.2, 0.05},
                       cplx{0.07, -0.4}, cplx{-0.1, 0.2}).finished();

    SECTION("real exponent") {
        const double gamma = 0.8;
        HierarchyOptions opt;
        opt.depth = 1;
        opt.rescale = false;
        Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{},
                    matsubara_expansion(DrudeDensity{0.5, gamma}, 1.0, 0), opt);
        HierarchyState s = h.initial_state(0.5 * tl.identity.mat);
        Eigen::Map<MatC>(s.block(1), 2, 2) = seed;
        const double t_end = 3.0 / gamma;
        h.propagate(s, t_end, 1e-3);
        const MatC want = std::exp(-gamma * s.t) * seed;
        CHECK((h.ado(s, 1) - want).norm() / want.norm() < 1e-8);
    }

    SECTION("complex exponent pair") {
        HierarchyOptions opt;
        opt.depth = 1;
        opt.rescale = false;
        Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{},
                    matsubara_expansion(LorentzianDensity{0.5, 0.5, 2.0}, 1.0, 0), opt);
        REQUIRE(h.n_modes() == 2);
        REQUIRE(h.catalog().slot_count() == 3);
        // slot 2 holds occupation (1, 0): one quantum of label 0
        REQUIRE(h.catalog().indices[2] == std::vector<int>{1, 0});
        HierarchyState s = h.initial_state(0.5 * tl.identity.mat);
        Eigen::Map<MatC>(s.block(2), 2, 2) = seed;
        const cplx gamma = h.mode_exponent_value(0);
        CHECK(gamma.imag() != 0.0);
        h.propagate(s, 3.0, 1e-3);
        const MatC want = std::exp(-gamma * s.t) * seed;
        CHECK((h.ado(s, 2) - want).norm() / want.norm() < 1e-8);
    }
}

TEST_CASE("divergence aborts with the offending slot and tier") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(0.0, {std::nullopt, std::nullopt, std::nullopt}, 0.0);
    HierarchyOptions opt;
    opt.depth = 1;
    opt.rescale = false;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{},
                matsubara_expansion(DrudeDensity{0.5, 10.0}, 1.0, 0), opt);
    HierarchyState s = h.initial_state(0.5 * tl.identity.mat);
    Eigen::Map<MatC>(s.block(1), 2, 2) = MatC::Identity(2, 2);

    REQUIRE_THROWS_AS(h.propagate(s, 30.0, 1.0), DivergenceError);
    REQUIRE_THROWS_WITH(h.propagate(s, 30.0, 1.0), ContainsSubstring("tier 1"));
    REQUIRE_FALSE(h.warnings().empty());
    CHECK_THAT(h.warnings().back(), ContainsSubstring("stability"));
}

TEST_CASE("slot filtering stays within tolerance of the unfiltered run") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sx, std::nullopt, std::nullopt});
    const BathExpansion bath = matsubara_expansion(DrudeDensity{0.1, 1.0}, 1.0, 1);
    const MatC rho0 = mixed_state();

    auto run = [&](double tol) {
        HierarchyOptions opt;
        opt.depth = 4;
        opt.rescale = false;
        opt.filter_tol = tol;
        Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt);
        HierarchyState s = h.initial_state(rho0);
        h.propagate(s, 2.0, 0.01);
        return std::pair{h.reduced(s), s};
    };

    const auto [exact, s_exact] = run(0.0);
    CHECK(s_exact.below.empty());

    const auto [tight, s_tight] = run(1e-9);
    CHECK(s_tight.below.size() == std::size_t(s_tight.data.size() / 4));
    CHECK((tight - exact).norm() < 1e-8);

    const auto [loose, s_loose] = run(1e-5);
    CHECK((loose - exact).norm() < 1e-4);
}

TEST_CASE("checkpoints round-trip bitwise and resumed runs replay exactly") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sx, std::nullopt, std::nullopt});
    const BathExpansion bath = matsubara_expansion(DrudeDensity{0.3, 1.0}, 1.0, 1);
    HierarchyOptions opt;
    opt.depth = 3;
    opt.rescale = true;
    opt.filter_tol = 1e-7;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt);
    const MatC rho0 = mixed_state();

    HierarchyState full = h.initial_state(rho0);
    h.propagate(full, 2.0, 0.01);

    HierarchyState half = h.initial_state(rho0);
    h.propagate(half, 1.0, 0.01);

    const std::string path = "hierarchy_checkpoint_test.bin";
    save_checkpoint(half, path, "engine-config-blob");
    CheckpointData loaded = load_checkpoint(path);
    std::remove(path.c_str());

    CHECK(loaded.config_blob == "engine-config-blob");
    CHECK(loaded.state.dim == half.dim);
    CHECK(loaded.state.scaled == half.scaled);
    CHECK(loaded.state.t_base == half.t_base);
    CHECK(loaded.state.steps == half.steps);
    CHECK(loaded.state.dt == half.dt);
    CHECK(loaded.state.t == half.t);
    REQUIRE(loaded.state.data.size() == half.data.size());
    CHECK(std::memcmp(loaded.state.data.data(), half.data.data(),
                      half.data.size() * sizeof(cplx)) == 0);
    REQUIRE(loaded.state.below == half.below);

    h.propagate(loaded.state, 2.0, 0.01);
    REQUIRE(loaded.state.data.size() == full.data.size());
    CHECK(std::memcmp(loaded.state.data.data(), full.data.data(),
                      full.data.size() * sizeof(cplx)) == 0);
    CHECK(loaded.state.t == full.t);

    std::ofstream junk("hierarchy_checkpoint_junk.bin", std::ios::binary);
    junk << "not a checkpoint";
    junk.close();
    CHECK_THROWS_AS(load_checkpoint("hierarchy_checkpoint_junk.bin"), ConfigError);
    CHECK_THROWS_WITH(load_checkpoint("hierarchy_checkpoint_junk.bin"), ContainsSubstring("not a hierarchy checkpoint"));
    std::remove("hierarchy_checkpoint_junk.bin");
}

TEST_CASE("propagation preserves the trace and conjugate pairing of slots") {
    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sx, std::nullopt, std::nullopt});
    const BathExpansion bath = matsubara_expansion(LorentzianDensity{0.3, 0.5, 2.0}, 1.0, 1);
    REQUIRE(bath.n_exponents() == 3);

    HierarchyOptions opt;
    opt.depth = 3;
    opt.rescale = true;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt);
    REQUIRE(h.n_modes() == 3);

    // the conjugate label map is an involution consistent with the expansion
    for (int a = 0; a < h.n_modes(); ++a) {
        CHECK(h.conj_mode(h.conj_mode(a)) == a);
        CHECK(h.mode_exponent_value(h.conj_mode(a)) == std::conj(h.mode_exponent_value(a)));
    }
    for (int s = 0; s < h.catalog().slot_count(); ++s)
        CHECK(h.conj_slot(h.conj_slot(s)) == s);

    HierarchyState s = h.initial_state(mixed_state());
    std::vector<double> times;
    h.propagate(s, 1.5, 0.005, 100, [&](const HierarchyState& st) {
        times.push_back(st.t);
        CHECK(std::abs(Eigen::Map<const MatC>(st.block(0), 2, 2).trace() - cplx{1.0, 0.0})
              < 1e-8);
    });
    REQUIRE(times.size() == 4);
    CHECK(times[1] == Catch::Approx(0.5).margin(1e-12));
    CHECK(times[3] == Catch::Approx(1.5).margin(1e-12));

    double worst = 0.0;
    for (int slot = 0; slot < h.catalog().slot_count(); ++slot) {
        const MatC a = h.ado(s, slot);
        const MatC b = h.ado(s, h.conj_slot(slot));
        worst = std::max(worst, (a.adjoint() - b).norm());
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("labels foreign to a component are pruned from the catalog") {
    MatrixDensity md;
    md.entries[0] = DrudeDensity{0.5, 1.0};  // xx
    md.entries[4] = DrudeDensity{0.3, 2.0};  // yy
    md.components = {true, true, false};
    const BathExpansion bath = matsubara_expansion(md, 1.0, 1);
    REQUIRE(bath.n_exponents() == 3);

    auto tl = two_level_basis();
    SystemModel model = two_level_model(1.0, {tl.sx, tl.sy, std::nullopt});
    HierarchyOptions opt;
    opt.depth = 2;
    Hierarchy h(model, FrameEvaluator{}, FieldFrameSpec{}, bath, opt);

    // each resolvent pole couples only its own component; the shared Bose
    // exponent keeps both
    REQUIRE(h.n_modes() == 4);
    CHECK(h.mode_component(0) == 0);
    CHECK(h.mode_exponent(0) == 0);
    CHECK(h.mode_component(1) == 1);
    CHECK(h.mode_exponent(1) == 1);
    CHECK(h.mode_component(2) == 0);
    CHECK(h.mode_exponent(2) == 2);
    CHECK(h.mode_component(3) == 1);
    CHECK(h.mode_exponent(3) == 2);
    CHECK(h.catalog().slot_count() == 15);
}
