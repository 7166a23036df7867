#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deom/bath_expansion.hpp"
#include "deom/frames.hpp"
#include "deom/hierarchy.hpp"
#include "deom/model.hpp"
#include "deom/observables.hpp"

namespace deom {

using Json = nlohmann::json;

namespace detail {

inline int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = int(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = int(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Collects every problem found during a parse so the user sees all of them
/// at once instead of fixing one per invocation.
struct ParseLog {
    std::vector<std::string> errors;

    void fail(const std::string& where, const std::string& what) {
        errors.push_back(where + ": " + what);
    }

    void raise_if_failed() const {
        if (errors.empty()) return;
        std::string msg = "invalid configuration";
        for (const std::string& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
};

inline void check_keys(ParseLog& log, const Json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (known) continue;
        std::string best;
        int best_d = 3;
        for (const char* k : allowed) {
            const int d = edit_distance(it.key(), k);
            if (d < best_d) { best_d = d; best = k; }
        }
        std::string msg = "unknown key '" + it.key() + "'";
        if (!best.empty()) msg += "; did you mean '" + best + "'?";
        log.fail(path, msg);
    }
}

inline const Json* child(const Json& obj, const char* key) {
    auto it = obj.find(key);
    return (it == obj.end() || it->is_null()) ? nullptr : &*it;
}

inline double get_num(ParseLog& log, const Json& obj, const std::string& path, const char* key,
                      double def) {
    const Json* v = child(obj, key);
    if (!v) return def;
    if (!v->is_number()) {
        log.fail(path + "." + key, "expected a number");
        return def;
    }
    return v->get<double>();
}

inline int get_int(ParseLog& log, const Json& obj, const std::string& path, const char* key,
                   int def) {
    const Json* v = child(obj, key);
    if (!v) return def;
    if (!v->is_number_integer()) {
        log.fail(path + "." + key, "expected an integer");
        return def;
    }
    return v->get<int>();
}

inline bool get_bool(ParseLog& log, const Json& obj, const std::string& path, const char* key,
                     bool def) {
    const Json* v = child(obj, key);
    if (!v) return def;
    if (!v->is_boolean()) {
        log.fail(path + "." + key, "expected true or false");
        return def;
    }
    return v->get<bool>();
}

inline std::string get_choice(ParseLog& log, const Json& obj, const std::string& path,
                              const char* key, const std::string& def,
                              std::initializer_list<const char*> allowed) {
    const Json* v = child(obj, key);
    std::string got = def;
    if (v) {
        if (!v->is_string()) {
            log.fail(path + "." + key, "expected a string");
            return def;
        }
        got = v->get<std::string>();
    }
    if (got.empty()) return got;
    for (const char* k : allowed)
        if (got == k) return got;
    std::string msg = "'" + got + "' is not one of {";
    bool first = true;
    for (const char* k : allowed) {
        if (!first) msg += ", ";
        msg += k;
        first = false;
    }
    msg += "}";
    std::string best;
    int best_d = 3;
    for (const char* k : allowed) {
        const int d = edit_distance(got, k);
        if (d < best_d) { best_d = d; best = k; }
    }
    if (!best.empty()) msg += "; did you mean '" + best + "'?";
    log.fail(path + "." + key, msg);
    return def;
}

inline Vec3 get_vec3(ParseLog& log, const Json& obj, const std::string& path, const char* key,
                     Vec3 def) {
    const Json* v = child(obj, key);
    if (!v) return def;
    if (!v->is_array() || v->size() != 3) {
        log.fail(path + "." + key, "expected an array of three numbers");
        return def;
    }
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number()) {
            log.fail(path + "." + key, "expected an array of three numbers");
            return def;
        }
        out(i) = (*v)[i].get<double>();
    }
    return out;
}

inline Json vec3_json(const Vec3& v) { return Json::array({v(0), v(1), v(2)}); }

inline int component_index(const std::string& name) {
    return name == "x" ? 0 : name == "y" ? 1 : 2;
}

} // namespace detail

struct ObservableConfig {
    std::string kind;
    int i = 0;
    int j = 0;
    std::string op;    // expectation operator name
    std::string name;  // optional column label override
    int component = 0; // dissipaton moment spatial component
    int exponent = 0;  // dissipaton moment exponent index
};

/// Fully resolved run description. `resolved` is the canonical form of the
/// accepted document with every default materialized; feeding it back through
/// the parser reproduces it verbatim, which is what makes manifests and
/// checkpoints round-trip exactly.
struct RunConfig {
    // system
    std::string system_type;
    double omega0 = 1.0;
    double charge = 1.0;
    double mass = 1.0;
    double moment_of_inertia = 1.0;
    double radius = 1.0;
    double v_cos = 0.0;
    double v_sin = 0.0;
    int m_max = 0;
    int n_max = 0;
    int axis = 0;
    std::array<std::string, 3> coupling{"", "", ""};

    // frame
    FrameMotion motion;
    FieldFrameSpec field;

    // initial state
    std::string initial_kind = "basis";
    int initial_index = 0;
    MatC initial_matrix;

    // bath
    bool has_bath = false;
    ScalarDensity bath_density;
    int bath_component = 0;
    double beta = 1.0;
    std::string method = "pade";
    int k_bose = 6;

    // hierarchy and stepping
    HierarchyOptions options;
    double dt = 1e-3;
    double t_final = 1.0;
    int stride = 1;

    // output
    std::string output_path = "deom_out.csv";
    std::string format = "csv";
    std::vector<ObservableConfig> observables;
    std::string checkpoint_path;
    double checkpoint_at = -1.0;  // negative means disabled

    Json resolved;

    int dim() const {
        if (system_type == "two_level") return 2;
        if (system_type == "ring") return 2 * m_max + 1;
        return n_max + 1;
    }

    SystemModel build_model() const {
        if (system_type == "two_level") {
            auto tl = two_level_basis();
            std::array<std::optional<Operator>, 3> cp;
            for (int i = 0; i < 3; ++i) {
                if (coupling[i].empty()) continue;
                cp[i] = coupling[i] == "sx" ? tl.sx : coupling[i] == "sy" ? tl.sy : tl.sz;
            }
            return two_level_model(omega0, cp, charge);
        }
        if (system_type == "ring")
            return ring_model(m_max, moment_of_inertia, radius, v_cos, v_sin, mass, charge);
        return oscillator_model(n_max, mass, omega0, axis, charge);
    }

    FrameEvaluator build_frame() const { return FrameEvaluator(motion, t_final + dt); }

    MatrixDensity build_density() const {
        std::array<bool, 3> comps{false, false, false};
        comps[std::size_t(bath_component)] = true;
        return MatrixDensity::isotropic(bath_density, comps);
    }

    BathExpansion build_expansion() const {
        require(has_bath, "this configuration has no bath section");
        const MatrixDensity m = build_density();
        return method == "pade" ? pade_expansion(m, beta, k_bose)
                                : matsubara_expansion(m, beta, k_bose);
    }

    MatC build_initial() const {
        const int d = dim();
        if (initial_kind == "basis") {
            MatC r = MatC::Zero(d, d);
            r(initial_index, initial_index) = 1.0;
            return r;
        }
        if (initial_kind == "mixed") return MatC::Identity(d, d) / double(d);
        if (initial_kind == "uniform") {
            VecC psi = VecC::Ones(d) / std::sqrt(double(d));
            return psi * psi.adjoint();
        }
        return initial_matrix;
    }

    std::vector<ObservableSpec> build_observables(const SystemModel& model) const {
        std::vector<ObservableSpec> out;
        for (const ObservableConfig& o : observables) {
            if (o.kind == "population") {
                out.push_back(ObservableSpec::population(o.i));
            } else if (o.kind == "coherence") {
                out.push_back(ObservableSpec::coherence(o.i, o.j));
            } else if (o.kind == "coupling_energy") {
                out.push_back(ObservableSpec::coupling_energy());
            } else if (o.kind == "dissipaton_moment") {
                out.push_back(ObservableSpec::dissipaton_moment(o.component, o.exponent));
            } else {
                Operator op{model.basis, MatC::Zero(model.basis.dim, model.basis.dim)};
                if (system_type == "two_level") {
                    auto tl = two_level_basis();
                    op = o.op == "sx" ? tl.sx : o.op == "sy" ? tl.sy : tl.sz;
                } else if (system_type == "ring") {
                    auto r = ring_basis(m_max);
                    op = o.op == "lz" ? r.lz : o.op == "cos_theta" ? r.cos_theta : r.sin_theta;
                } else {
                    auto os = oscillator_basis(n_max, mass, omega0);
                    op = o.op == "x" ? os.x : o.op == "p" ? os.p : os.h0;
                }
                out.push_back(ObservableSpec::expectation(o.name.empty() ? o.op : o.name, op));
            }
        }
        return out;
    }
};

namespace detail {

inline void parse_system(ParseLog& log, const Json& doc, RunConfig& cfg, Json& out) {
    const Json* sys = child(doc, "system");
    if (!sys) {
        log.fail("system", "section is required");
        return;
    }
    if (!sys->is_object()) {
        log.fail("system", "expected an object");
        return;
    }
    cfg.system_type = get_choice(log, *sys, "system", "type", "",
                                 {"two_level", "ring", "oscillator"});
    if (cfg.system_type.empty()) {
        if (!sys->contains("type")) log.fail("system.type", "field is required");
        return;
    }
    out["type"] = cfg.system_type;

    if (cfg.system_type == "two_level") {
        check_keys(log, *sys, "system", {"type", "omega0", "charge", "coupling"});
        cfg.omega0 = get_num(log, *sys, "system", "omega0", 1.0);
        cfg.charge = get_num(log, *sys, "system", "charge", 1.0);
        Json cpl = Json::object({{"x", nullptr}, {"y", nullptr}, {"z", nullptr}});
        const Json* c = child(*sys, "coupling");
        if (c && !c->is_object()) {
            log.fail("system.coupling", "expected an object with keys x, y, z");
        } else if (c) {
            check_keys(log, *c, "system.coupling", {"x", "y", "z"});
            const char* names[3] = {"x", "y", "z"};
            for (int i = 0; i < 3; ++i) {
                cfg.coupling[i] = get_choice(log, *c, "system.coupling", names[i], "",
                                             {"sx", "sy", "sz"});
                if (!cfg.coupling[i].empty()) cpl[names[i]] = cfg.coupling[i];
            }
        } else {
            cfg.coupling[2] = "sz";
            cpl["z"] = "sz";
        }
        out["omega0"] = cfg.omega0;
        out["charge"] = cfg.charge;
        out["coupling"] = cpl;
    } else if (cfg.system_type == "ring") {
        check_keys(log, *sys, "system",
                   {"type", "m_max", "moment_of_inertia", "radius", "v_cos", "v_sin", "mass",
                    "charge"});
        cfg.m_max = get_int(log, *sys, "system", "m_max", 0);
        if (!sys->contains("m_max")) log.fail("system.m_max", "field is required");
        else if (cfg.m_max < 1) log.fail("system.m_max", "must be at least 1");
        cfg.moment_of_inertia = get_num(log, *sys, "system", "moment_of_inertia", 1.0);
        if (cfg.moment_of_inertia <= 0) log.fail("system.moment_of_inertia", "must be positive");
        cfg.radius = get_num(log, *sys, "system", "radius", 1.0);
        if (cfg.radius <= 0) log.fail("system.radius", "must be positive");
        cfg.v_cos = get_num(log, *sys, "system", "v_cos", 0.0);
        cfg.v_sin = get_num(log, *sys, "system", "v_sin", 0.0);
        cfg.mass = get_num(log, *sys, "system", "mass", 1.0);
        if (cfg.mass <= 0) log.fail("system.mass", "must be positive");
        cfg.charge = get_num(log, *sys, "system", "charge", 0.0);
        out["m_max"] = cfg.m_max;
        out["moment_of_inertia"] = cfg.moment_of_inertia;
        out["radius"] = cfg.radius;
        out["v_cos"] = cfg.v_cos;
        out["v_sin"] = cfg.v_sin;
        out["mass"] = cfg.mass;
        out["charge"] = cfg.charge;
    } else {
        check_keys(log, *sys, "system", {"type", "n_max", "mass", "omega0", "axis", "charge"});
        cfg.n_max = get_int(log, *sys, "system", "n_max", 0);
        if (!sys->contains("n_max")) log.fail("system.n_max", "field is required");
        else if (cfg.n_max < 1) log.fail("system.n_max", "must be at least 1");
        cfg.mass = get_num(log, *sys, "system", "mass", 1.0);
        if (cfg.mass <= 0) log.fail("system.mass", "must be positive");
        cfg.omega0 = get_num(log, *sys, "system", "omega0", 1.0);
        if (cfg.omega0 <= 0) log.fail("system.omega0", "must be positive");
        const std::string ax = get_choice(log, *sys, "system", "axis", "x", {"x", "y", "z"});
        cfg.axis = component_index(ax);
        cfg.charge = get_num(log, *sys, "system", "charge", 0.0);
        out["n_max"] = cfg.n_max;
        out["mass"] = cfg.mass;
        out["omega0"] = cfg.omega0;
        out["axis"] = ax;
        out["charge"] = cfg.charge;
    }
}

inline void parse_frame(ParseLog& log, const Json& doc, RunConfig& cfg, Json& out) {
    Json rot = Json::object(), tr = Json::object();
    const Json* frame = child(doc, "frame");
    if (frame && !frame->is_object()) {
        log.fail("frame", "expected an object");
        frame = nullptr;
    }
    const Json* r = frame ? child(*frame, "rotation") : nullptr;
    const Json* t = frame ? child(*frame, "translation") : nullptr;
    if (frame) check_keys(log, *frame, "frame", {"rotation", "translation"});

    std::string rmode = "none";
    if (r && !r->is_object()) {
        log.fail("frame.rotation", "expected an object");
    } else if (r) {
        check_keys(log, *r, "frame.rotation", {"mode", "axis", "rate"});
        rmode = get_choice(log, *r, "frame.rotation", "mode", "none", {"none", "constant_axis"});
        if (rmode == "constant_axis") {
            cfg.motion.rotation.mode = RotationProfile::Mode::constant_axis;
            cfg.motion.rotation.axis = get_vec3(log, *r, "frame.rotation", "axis", Vec3::UnitZ());
            if (cfg.motion.rotation.axis.norm() == 0.0)
                log.fail("frame.rotation.axis", "must be a nonzero vector");
            cfg.motion.rotation.rate = get_num(log, *r, "frame.rotation", "rate", 0.0);
        }
    }
    rot["mode"] = rmode;
    rot["axis"] = vec3_json(cfg.motion.rotation.axis);
    rot["rate"] = cfg.motion.rotation.rate;

    std::string tmode = "none";
    if (t && !t->is_object()) {
        log.fail("frame.translation", "expected an object");
    } else if (t) {
        check_keys(log, *t, "frame.translation", {"mode", "velocity", "acceleration"});
        tmode = get_choice(log, *t, "frame.translation", "mode", "none",
                           {"none", "boost", "constant_accel"});
        if (tmode == "boost") {
            cfg.motion.translation.mode = TranslationProfile::Mode::boost;
            cfg.motion.translation.velocity =
                get_vec3(log, *t, "frame.translation", "velocity", Vec3::Zero());
        } else if (tmode == "constant_accel") {
            cfg.motion.translation.mode = TranslationProfile::Mode::constant_accel;
            cfg.motion.translation.accel =
                get_vec3(log, *t, "frame.translation", "acceleration", Vec3::Zero());
        }
    }
    tr["mode"] = tmode;
    tr["velocity"] = vec3_json(cfg.motion.translation.velocity);
    tr["acceleration"] = vec3_json(cfg.motion.translation.accel);

    out["rotation"] = rot;
    out["translation"] = tr;

    const Json* ff = child(doc, "field_frame");
    std::string fmode = "static_field";
    if (ff && !ff->is_object()) {
        log.fail("field_frame", "expected an object");
    } else if (ff) {
        check_keys(log, *ff, "field_frame", {"mode"});
        fmode = get_choice(log, *ff, "field_frame", "mode", "static_field",
                           {"static_field", "comoving"});
    }
    cfg.field.mode = fmode == "comoving" ? FieldFrame::comoving : FieldFrame::static_field;
}

inline void parse_initial(ParseLog& log, const Json& doc, RunConfig& cfg, Json& out) {
    const Json* init = child(doc, "initial_state");
    std::string kind = "basis";
    if (init && !init->is_object()) {
        log.fail("initial_state", "expected an object");
        init = nullptr;
    }
    if (init) {
        check_keys(log, *init, "initial_state", {"kind", "index", "values"});
        kind = get_choice(log, *init, "initial_state", "kind", "basis",
                          {"basis", "mixed", "uniform", "matrix"});
    }
    cfg.initial_kind = kind;
    out["kind"] = kind;
    const int d = cfg.dim();
    if (kind == "basis") {
        cfg.initial_index = init ? get_int(log, *init, "initial_state", "index", 0) : 0;
        if (cfg.initial_index < 0 || (d > 0 && cfg.initial_index >= d))
            log.fail("initial_state.index",
                     "must lie in [0, " + std::to_string(d) + ") for this system");
        out["index"] = cfg.initial_index;
    } else if (kind == "matrix") {
        const Json* v = init ? child(*init, "values") : nullptr;
        if (!v || !v->is_array() || int(v->size()) != d) {
            log.fail("initial_state.values",
                     "expected " + std::to_string(d) + " rows of [re, im] pairs");
            return;
        }
        cfg.initial_matrix = MatC::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            const Json& row = (*v)[i];
            if (!row.is_array() || int(row.size()) != d) {
                log.fail("initial_state.values", "row " + std::to_string(i) + " must have "
                                                     + std::to_string(d) + " entries");
                return;
            }
            for (int j = 0; j < d; ++j) {
                const Json& e = row[j];
                if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                    log.fail("initial_state.values", "entries must be [re, im] pairs");
                    return;
                }
                cfg.initial_matrix(i, j) = cplx{e[0].get<double>(), e[1].get<double>()};
            }
        }
        out["values"] = *v;
    }
}

inline void parse_bath(ParseLog& log, const Json& doc, RunConfig& cfg, Json& out) {
    const Json* bath = child(doc, "bath");
    if (!bath) {
        out = nullptr;
        return;
    }
    if (!bath->is_object()) {
        log.fail("bath", "expected an object");
        out = nullptr;
        return;
    }
    cfg.has_bath = true;
    check_keys(log, *bath, "bath",
               {"family", "lambda", "gamma_c", "gamma", "omega0", "modes", "component", "beta",
                "method", "k_bose"});
    const std::string family =
        get_choice(log, *bath, "bath", "family", "",
                   {"drude", "ohmic_exponential", "lorentzian_mode", "discrete_modes"});
    if (family.empty()) {
        if (!bath->contains("family")) log.fail("bath.family", "field is required");
        return;
    }
    out["family"] = family;

    auto need_num = [&](const char* key, double lo) {
        const double v = get_num(log, *bath, "bath", key, lo);
        if (!bath->contains(key))
            log.fail(std::string("bath.") + key, "field is required for family '" + family + "'");
        else if (v <= lo)
            log.fail(std::string("bath.") + key,
                     "must be greater than " + std::to_string(lo));
        return v;
    };

    if (family == "drude" || family == "ohmic_exponential") {
        const double lambda = need_num("lambda", 0.0);
        const double gamma_c = need_num("gamma_c", 0.0);
        if (family == "drude") cfg.bath_density = DrudeDensity{lambda, gamma_c};
        else cfg.bath_density = OhmicExpDensity{lambda, gamma_c};
        out["lambda"] = lambda;
        out["gamma_c"] = gamma_c;
    } else if (family == "lorentzian_mode") {
        const double lambda = need_num("lambda", 0.0);
        const double gamma = need_num("gamma", 0.0);
        const double w0 = need_num("omega0", 0.0);
        cfg.bath_density = LorentzianDensity{lambda, gamma, w0};
        out["lambda"] = lambda;
        out["gamma"] = gamma;
        out["omega0"] = w0;
    } else {
        const Json* modes = child(*bath, "modes");
        DiscreteModesDensity dm;
        Json mds = Json::array();
        if (!modes || !modes->is_array() || modes->empty()) {
            log.fail("bath.modes", "expected a nonempty array of mode objects");
        } else {
            for (std::size_t k = 0; k < modes->size(); ++k) {
                const Json& m = (*modes)[k];
                const std::string where = "bath.modes[" + std::to_string(k) + "]";
                if (!m.is_object()) {
                    log.fail(where, "expected an object");
                    continue;
                }
                check_keys(log, m, where, {"omega", "g2", "width"});
                DiscreteModesDensity::Mode mode;
                mode.omega = get_num(log, m, where, "omega", 1.0);
                if (mode.omega <= 0) log.fail(where + ".omega", "must be positive");
                mode.g2 = get_num(log, m, where, "g2", 0.0);
                if (mode.g2 < 0) log.fail(where + ".g2", "must be nonnegative");
                mode.width = get_num(log, m, where, "width", 0.0);
                if (mode.width < 0) log.fail(where + ".width", "must be nonnegative");
                dm.modes.push_back(mode);
                mds.push_back(Json::object(
                    {{"omega", mode.omega}, {"g2", mode.g2}, {"width", mode.width}}));
            }
        }
        cfg.bath_density = dm;
        out["modes"] = mds;
    }

    const std::string comp = get_choice(log, *bath, "bath", "component", "", {"x", "y", "z"});
    cfg.bath_component = comp.empty() ? -1 : component_index(comp);
    out["component"] = comp;  // may be rewritten once the default is resolved

    cfg.beta = get_num(log, *bath, "bath", "beta", 1.0);
    if (!bath->contains("beta")) log.fail("bath.beta", "field is required");
    else if (cfg.beta <= 0) log.fail("bath.beta", "must be positive");
    out["beta"] = cfg.beta;

    cfg.method = get_choice(log, *bath, "bath", "method", "pade", {"pade", "matsubara"});
    out["method"] = cfg.method;
    cfg.k_bose = get_int(log, *bath, "bath", "k_bose", 6);
    if (cfg.k_bose < 0) log.fail("bath.k_bose", "must be nonnegative");
    out["k_bose"] = cfg.k_bose;
}

inline void parse_hierarchy(ParseLog& log, const Json& doc, RunConfig& cfg, Json& out) {
    const Json* h = child(doc, "hierarchy");
    if (h && !h->is_object()) {
        log.fail("hierarchy", "expected an object");
        h = nullptr;
    }
    const Json empty = Json::object();
    const Json& src = h ? *h : empty;
    if (h)
        check_keys(log, src, "hierarchy",
                   {"depth", "dt", "t_final", "stride", "filter_tol", "rescale",
                    "memory_budget_mb", "divergence_bound"});

    cfg.options.depth = get_int(log, src, "hierarchy", "depth", 4);
    if (cfg.options.depth < 0) log.fail("hierarchy.depth", "must be nonnegative");
    cfg.dt = get_num(log, src, "hierarchy", "dt", 1e-3);
    if (cfg.dt <= 0) log.fail("hierarchy.dt", "must be positive");
    cfg.t_final = get_num(log, src, "hierarchy", "t_final", 1.0);
    if (cfg.t_final <= 0) log.fail("hierarchy.t_final", "must be positive");
    cfg.stride = get_int(log, src, "hierarchy", "stride", 1);
    if (cfg.stride < 1) log.fail("hierarchy.stride", "must be at least 1");
    cfg.options.filter_tol = get_num(log, src, "hierarchy", "filter_tol", 0.0);
    if (cfg.options.filter_tol < 0) log.fail("hierarchy.filter_tol", "must be nonnegative");
    cfg.options.rescale = get_bool(log, src, "hierarchy", "rescale", true);
    cfg.options.memory_budget_mb = get_num(log, src, "hierarchy", "memory_budget_mb", 4096.0);
    if (cfg.options.memory_budget_mb <= 0)
        log.fail("hierarchy.memory_budget_mb", "must be positive");
    cfg.options.divergence_bound = get_num(log, src, "hierarchy", "divergence_bound", 1e6);
    if (cfg.options.divergence_bound <= 0)
        log.fail("hierarchy.divergence_bound", "must be positive");

    out["depth"] = cfg.options.depth;
    out["dt"] = cfg.dt;
    out["t_final"] = cfg.t_final;
    out["stride"] = cfg.stride;
    out["filter_tol"] = cfg.options.filter_tol;
    out["rescale"] = cfg.options.rescale;
    out["memory_budget_mb"] = cfg.options.memory_budget_mb;
    out["divergence_bound"] = cfg.options.divergence_bound;
}

inline void parse_output(ParseLog& log, const Json& doc, RunConfig& cfg, Json& out) {
    const Json* o = child(doc, "output");
    if (o && !o->is_object()) {
        log.fail("output", "expected an object");
        o = nullptr;
    }
    const Json empty = Json::object();
    const Json& src = o ? *o : empty;
    if (o)
        check_keys(log, src, "output",
                   {"path", "format", "observables", "checkpoint_path", "checkpoint_at"});

    const Json* p = child(src, "path");
    if (p && !p->is_string()) log.fail("output.path", "expected a string");
    else if (p) cfg.output_path = p->get<std::string>();
    if (cfg.output_path.empty()) log.fail("output.path", "must not be empty");
    cfg.format = get_choice(log, src, "output", "format", "csv", {"csv"});

    const Json* cp = child(src, "checkpoint_path");
    if (cp && !cp->is_string()) log.fail("output.checkpoint_path", "expected a string");
    else if (cp) cfg.checkpoint_path = cp->get<std::string>();
    cfg.checkpoint_at = get_num(log, src, "output", "checkpoint_at", -1.0);
    if (src.contains("checkpoint_at") && !src["checkpoint_at"].is_null()) {
        if (cfg.checkpoint_path.empty())
            log.fail("output.checkpoint_at", "requires output.checkpoint_path");
        if (cfg.checkpoint_at <= 0 || cfg.checkpoint_at > cfg.t_final)
            log.fail("output.checkpoint_at", "must lie in (0, t_final]");
        else {
            const double per = cfg.stride * cfg.dt;
            const double k = cfg.checkpoint_at / per;
            if (std::abs(k - std::llround(k)) > 1e-9)
                log.fail("output.checkpoint_at",
                         "must be a multiple of stride * dt so it lands on an output row");
        }
    }

    out["path"] = cfg.output_path;
    out["format"] = cfg.format;
    out["checkpoint_path"] = cfg.checkpoint_path;
    out["checkpoint_at"] = cfg.checkpoint_at < 0 ? Json(nullptr) : Json(cfg.checkpoint_at);

    Json obs = Json::array();
    const Json* list = child(src, "observables");
    if (list && !list->is_array()) {
        log.fail("output.observables", "expected an array");
        list = nullptr;
    }
    if (list) {
        for (std::size_t k = 0; k < list->size(); ++k) {
            const Json& e = (*list)[k];
            const std::string where = "output.observables[" + std::to_string(k) + "]";
            if (!e.is_object()) {
                log.fail(where, "expected an object");
                continue;
            }
            ObservableConfig oc;
            oc.kind = get_choice(log, e, where, "kind", "",
                                 {"population", "coherence", "expectation", "coupling_energy",
                                  "dissipaton_moment"});
            if (oc.kind.empty()) {
                if (!e.contains("kind")) log.fail(where + ".kind", "field is required");
                continue;
            }
            Json r = Json::object({{"kind", oc.kind}});
            const int d = cfg.dim();
            if (oc.kind == "population") {
                check_keys(log, e, where, {"kind", "i"});
                oc.i = get_int(log, e, where, "i", 0);
                if (oc.i < 0 || oc.i >= d) log.fail(where + ".i", "level index out of range");
                r["i"] = oc.i;
            } else if (oc.kind == "coherence") {
                check_keys(log, e, where, {"kind", "i", "j"});
                oc.i = get_int(log, e, where, "i", 0);
                oc.j = get_int(log, e, where, "j", 1);
                if (oc.i < 0 || oc.i >= d || oc.j < 0 || oc.j >= d || oc.i == oc.j)
                    log.fail(where, "indices must be distinct levels of the system");
                r["i"] = oc.i;
                r["j"] = oc.j;
            } else if (oc.kind == "expectation") {
                check_keys(log, e, where, {"kind", "op", "name"});
                if (cfg.system_type == "two_level")
                    oc.op = get_choice(log, e, where, "op", "", {"sx", "sy", "sz"});
                else if (cfg.system_type == "ring")
                    oc.op = get_choice(log, e, where, "op", "",
                                       {"lz", "cos_theta", "sin_theta"});
                else
                    oc.op = get_choice(log, e, where, "op", "", {"x", "p", "h0"});
                if (oc.op.empty() && !e.contains("op"))
                    log.fail(where + ".op", "field is required");
                const Json* nm = child(e, "name");
                if (nm && !nm->is_string()) log.fail(where + ".name", "expected a string");
                else if (nm) oc.name = nm->get<std::string>();
                r["op"] = oc.op;
                r["name"] = oc.name.empty() ? oc.op : oc.name;
                oc.name = r["name"].get<std::string>();
            } else if (oc.kind == "coupling_energy") {
                check_keys(log, e, where, {"kind"});
                if (!cfg.has_bath) log.fail(where, "coupling_energy requires a bath section");
            } else {
                check_keys(log, e, where, {"kind", "component", "exponent"});
                if (!cfg.has_bath) log.fail(where, "dissipaton_moment requires a bath section");
                const std::string comp = get_choice(log, e, where, "component", "x",
                                                    {"x", "y", "z"});
                oc.component = component_index(comp);
                oc.exponent = get_int(log, e, where, "exponent", 0);
                if (oc.exponent < 0) log.fail(where + ".exponent", "must be nonnegative");
                r["component"] = comp;
                r["exponent"] = oc.exponent;
            }
            obs.push_back(r);
            cfg.observables.push_back(oc);
        }
    } else {
        ObservableConfig p0;
        p0.kind = "population";
        p0.i = 0;
        cfg.observables.push_back(p0);
        obs.push_back(Json::object({{"kind", "population"}, {"i", 0}}));
        if (cfg.dim() >= 2) {
            ObservableConfig c01;
            c01.kind = "coherence";
            c01.i = 0;
            c01.j = 1;
            cfg.observables.push_back(c01);
            obs.push_back(Json::object({{"kind", "coherence"}, {"i", 0}, {"j", 1}}));
        }
    }
    out["observables"] = obs;
}

} // namespace detail

/// Parses and validates a configuration document. Rejections carry every
/// problem found, one bullet per line. The accepted document is strict: any
/// key outside the schema is an error, with a spelling suggestion when a
/// schema key is close.
inline RunConfig parse_config_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    detail::ParseLog log;
    if (!doc.is_object()) {
        log.fail("document", "top level must be a JSON object");
        log.raise_if_failed();
    }
    detail::check_keys(log, doc, "document",
                       {"system", "frame", "field_frame", "initial_state", "bath", "hierarchy",
                        "output"});

    RunConfig cfg;
    Json sys = Json::object(), frame = Json::object(), init = Json::object(), bath,
         hier = Json::object(), outp = Json::object();
    detail::parse_system(log, doc, cfg, sys);
    detail::parse_frame(log, doc, cfg, frame);
    detail::parse_hierarchy(log, doc, cfg, hier);
    detail::parse_initial(log, doc, cfg, init);
    detail::parse_bath(log, doc, cfg, bath);
    detail::parse_output(log, doc, cfg, outp);

    // Cross-field checks need the system and bath both resolved.
    if (cfg.has_bath && log.errors.empty()) {
        std::array<bool, 3> active{false, false, false};
        if (cfg.system_type == "two_level") {
            for (int i = 0; i < 3; ++i) active[i] = !cfg.coupling[i].empty();
        } else if (cfg.system_type == "ring") {
            active = {true, true, false};
        } else {
            active[std::size_t(cfg.axis)] = true;
        }
        if (cfg.bath_component < 0) {
            int n_active = 0, only = -1;
            for (int i = 0; i < 3; ++i)
                if (active[i]) { ++n_active; only = i; }
            if (n_active == 1) cfg.bath_component = only;
            else
                log.fail("bath.component",
                         "field is required when the system couples along several axes");
        } else if (!active[std::size_t(cfg.bath_component)]) {
            log.fail("bath.component",
                     "the system defines no coupling operator along this axis");
        }
        if (cfg.bath_component >= 0) {
            const char* names[3] = {"x", "y", "z"};
            bath["component"] = names[cfg.bath_component];
        }
    }
    if (cfg.motion.translation.mode != TranslationProfile::Mode::none
        && cfg.system_type == "two_level")
        log.fail("frame.translation",
                 "a two-level system carries no position operators; translation-dependent "
                 "frames need the ring or oscillator system");

    log.raise_if_failed();

    cfg.resolved = Json::object();
    cfg.resolved["system"] = sys;
    cfg.resolved["frame"] = frame;
    cfg.resolved["field_frame"] =
        Json::object({{"mode", cfg.field.mode == FieldFrame::comoving ? "comoving"
                                                                      : "static_field"}});
    cfg.resolved["initial_state"] = init;
    cfg.resolved["bath"] = bath;
    cfg.resolved["hierarchy"] = hier;
    cfg.resolved["output"] = outp;
    return cfg;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace deom
