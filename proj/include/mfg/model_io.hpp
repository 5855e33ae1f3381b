#pragma once

#include "mfg/model.hpp"

#include <json.hpp>

#include <fstream>

namespace mfg {

// Model file format. All indices are 1-based on disk. Omitted rate entries are
// zero; omitted diagonal entries are auto-completed so that rows are
// conservative, and the completion is recorded for the validation report.

namespace detail {

inline nlohmann::json poly_to_json(const Polynomial& p) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : p.terms()) {
        terms.push_back({{"coef", t.coef}, {"powers", t.powers}});
    }
    return terms;
}

inline Polynomial poly_from_json(const nlohmann::json& j, int num_vars,
                                 const std::string& where) {
    Polynomial p(num_vars);
    if (!j.is_array()) throw MalformedModel(where + ": poly must be an array of terms");
    for (const auto& term : j) {
        if (!term.contains("coef") || !term.contains("powers"))
            throw MalformedModel(where + ": poly term needs coef and powers");
        std::vector<int> powers = term.at("powers").get<std::vector<int>>();
        if (static_cast<int>(powers.size()) != num_vars)
            throw MalformedModel(where + ": powers must list one exponent per state");
        p.add_term(term.at("coef").get<double>(), std::move(powers));
    }
    return p;
}

inline int index_field(const nlohmann::json& j, const char* field, int upper,
                       const std::string& where) {
    if (!j.contains(field)) throw MalformedModel(where + ": missing field '" + field + "'");
    int v = j.at(field).get<int>();
    if (v < 1 || v > upper)
        throw MalformedModel(where + ": field '" + field + "' = " + std::to_string(v) +
                             " outside 1.." + std::to_string(upper));
    return v - 1;
}

}  // namespace detail

inline nlohmann::json model_to_json(const ModelSpec& model) {
    nlohmann::json j;
    j["states"] = model.num_states();
    j["actions"] = model.num_actions();
    j["beta"] = model.beta();
    j["delta"] = model.delta();

    nlohmann::json rates = nlohmann::json::array();
    for (int i = 0; i < model.num_states(); ++i)
        for (int jj = 0; jj < model.num_states(); ++jj)
            for (int a = 0; a < model.num_actions(); ++a) {
                const Polynomial& p = model.rate(i, jj, a);
                if (p.is_zero()) continue;
                rates.push_back({{"i", i + 1},
                                 {"j", jj + 1},
                                 {"a", a + 1},
                                 {"poly", detail::poly_to_json(p)}});
            }
    j["rates"] = std::move(rates);

    nlohmann::json rewards = nlohmann::json::array();
    for (int i = 0; i < model.num_states(); ++i)
        for (int a = 0; a < model.num_actions(); ++a) {
            const auto& terms = model.reward_terms(i, a);
            if (terms.empty()) continue;
            nlohmann::json jterms = nlohmann::json::array();
            for (const auto& t : terms) {
                if (t.kind == RewardTerm::Kind::poly) {
                    jterms.push_back({{"kind", "poly"}, {"poly", detail::poly_to_json(t.poly)}});
                } else {
                    jterms.push_back({{"kind", "reglog"},
                                      {"coef", t.coef},
                                      {"state_index", t.state + 1},
                                      {"offset", t.offset}});
                }
            }
            rewards.push_back({{"i", i + 1}, {"a", a + 1}, {"terms", std::move(jterms)}});
        }
    j["rewards"] = std::move(rewards);
    return j;
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
    for (const char* field : {"states", "actions", "beta"})
        if (!j.contains(field))
            throw MalformedModel(std::string("model: missing top-level field '") + field + "'");
    const int S = j.at("states").get<int>();
    const int A = j.at("actions").get<int>();
    const double beta = j.at("beta").get<double>();
    const double delta = j.value("delta", 1e-6);
    if (S <= 1) throw MalformedModel("model: 'states' must be > 1");
    if (A < 1) throw MalformedModel("model: 'actions' must be >= 1");
    if (!(beta > 0.0 && beta < 1.0)) throw MalformedModel("model: 'beta' must lie in (0,1)");
    if (!(delta > 0.0)) throw MalformedModel("model: 'delta' must be > 0");
    ModelSpec model(S, A, beta, delta);

    std::vector<bool> diagonal_given(static_cast<std::size_t>(S) * A, false);
    if (j.contains("rates")) {
        int k = 0;
        for (const auto& rec : j.at("rates")) {
            std::string where = "rates[" + std::to_string(k++) + "]";
            int i = detail::index_field(rec, "i", S, where);
            int jj = detail::index_field(rec, "j", S, where);
            int a = detail::index_field(rec, "a", A, where);
            if (!rec.contains("poly")) throw MalformedModel(where + ": missing field 'poly'");
            model.set_rate(i, jj, a, detail::poly_from_json(rec.at("poly"), S, where));
            if (i == jj) diagonal_given[static_cast<std::size_t>(i) * A + a] = true;
        }
    }
    for (int i = 0; i < S; ++i)
        for (int a = 0; a < A; ++a)
            if (!diagonal_given[static_cast<std::size_t>(i) * A + a])
                model.complete_diagonal(i, a);

    if (j.contains("rewards")) {
        int k = 0;
        for (const auto& rec : j.at("rewards")) {
            std::string where = "rewards[" + std::to_string(k++) + "]";
            int i = detail::index_field(rec, "i", S, where);
            int a = detail::index_field(rec, "a", A, where);
            if (!rec.contains("terms")) throw MalformedModel(where + ": missing field 'terms'");
            for (const auto& t : rec.at("terms")) {
                std::string kind = t.value("kind", "");
                if (kind == "poly") {
                    if (!t.contains("poly"))
                        throw MalformedModel(where + ": poly term missing field 'poly'");
                    model.add_reward_term(
                        i, a, RewardTerm::polynomial(detail::poly_from_json(t.at("poly"), S, where)));
                } else if (kind == "reglog") {
                    int state = detail::index_field(t, "state_index", S, where);
                    model.add_reward_term(
                        i, a,
                        RewardTerm::reglog(S, t.value("coef", 1.0), state, t.value("offset", 0.0)));
                } else {
                    throw MalformedModel(where + ": term kind must be 'poly' or 'reglog'");
                }
            }
        }
    }
    return model;
}

inline ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedModel("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel("model file " + path + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

inline void save_model(const ModelSpec& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model_to_json(model).dump(2) << "\n";
}

}  // namespace mfg
