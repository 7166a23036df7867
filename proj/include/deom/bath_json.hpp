#pragma once

#include <string>

#include <json.hpp>

#include "bath_expansion.hpp"
#include "common.hpp"

namespace deom {

namespace detail {

inline char component_letter(int c) {
    require(c >= 0 && c < 3, "spatial component index out of range");
    return "xyz"[c];
}

inline int component_from_letter(char c) {
    switch (c) {
        case 'x': return 0;
        case 'y': return 1;
        case 'z': return 2;
        default: throw ConfigError(std::string("unknown component letter '") + c + "'");
    }
}

} // namespace detail

/// Serialized form of an expansion: exponents and per-pair coefficient lists
/// as [re, im] pairs, keyed by component letters ("xx", "xy", ...).  Numbers
/// survive the round trip bit for bit.
inline nlohmann::json bath_to_json(const BathExpansion& ex) {
    nlohmann::json j;
    j["beta"] = ex.beta;
    j["method"] = ex.method;
    j["n_bose"] = ex.n_bose;
    j["components"] = ex.components;
    j["conjugate_map"] = ex.conjugate_map;
    auto exps = nlohmann::json::array();
    for (const cplx& g : ex.exponents) exps.push_back({g.real(), g.imag()});
    j["exponents"] = std::move(exps);
    nlohmann::json coeff;
    for (int a = 0; a < ex.n_components(); ++a) {
        for (int b = 0; b < ex.n_components(); ++b) {
            std::string key{detail::component_letter(ex.components[a]),
                            detail::component_letter(ex.components[b])};
            auto list = nlohmann::json::array();
            for (int k = 0; k < ex.n_exponents(); ++k) {
                const cplx v = ex.coefficients[k](a, b);
                list.push_back({v.real(), v.imag()});
            }
            coeff[std::move(key)] = std::move(list);
        }
    }
    j["coefficients"] = std::move(coeff);
    return j;
}

inline BathExpansion bath_from_json(const nlohmann::json& j) {
    for (const char* key : {"beta", "exponents", "conjugate_map", "coefficients", "components"})
        require(j.contains(key), std::string("bath JSON is missing key '") + key + "'");
    BathExpansion ex;
    ex.beta = j.at("beta").get<double>();
    ex.method = j.value("method", std::string("unknown"));
    ex.n_bose = j.value("n_bose", 0);
    ex.components = j.at("components").get<std::vector<int>>();
    ex.conjugate_map = j.at("conjugate_map").get<std::vector<int>>();
    for (const auto& pair : j.at("exponents")) {
        require(pair.is_array() && pair.size() == 2, "bath JSON exponents must be [re, im] pairs");
        ex.exponents.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    const int nc = ex.n_components();
    const int nk = ex.n_exponents();
    require(int(ex.conjugate_map.size()) == nk, "bath JSON conjugate_map length mismatch");
    for (int k = 0; k < nk; ++k) {
        const int kb = ex.conjugate_map[k];
        require(kb >= 0 && kb < nk && ex.conjugate_map[kb] == k,
                "bath JSON conjugate_map is not an involution");
    }
    ex.coefficients.assign(nk, MatC::Zero(nc, nc));
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b) {
            const std::string key{detail::component_letter(ex.components[a]),
                                  detail::component_letter(ex.components[b])};
            require(j.at("coefficients").contains(key),
                    "bath JSON coefficients are missing pair '" + key + "'");
            const auto& list = j.at("coefficients").at(key);
            require(int(list.size()) == nk,
                    "bath JSON coefficient list for '" + key + "' has the wrong length");
            for (int k = 0; k < nk; ++k)
                ex.coefficients[k](a, b) = cplx{list[k][0].get<double>(),
                                                list[k][1].get<double>()};
        }
    }
    return ex;
}

inline std::string bath_to_json_string(const BathExpansion& ex) {
    return bath_to_json(ex).dump(2);
}

inline BathExpansion bath_from_json_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    require(!j.is_discarded(), "bath JSON does not parse");
    return bath_from_json(j);
}

} // namespace deom
