#pragma once

#include "mfg/equilibrium.hpp"

#include <json.hpp>

#include <fstream>

namespace mfg {

// Equilibrium file format: list of records {m, pi, kind, stationarity_residual,
// optimality_gap, strategy_support}, plus search warnings. Action indices in
// strategy_support are 1-based.

inline nlohmann::json equilibria_to_json(const SearchResult& result) {
    nlohmann::json j;
    j["equilibria"] = nlohmann::json::array();
    for (const auto& cert : result.equilibria) {
        nlohmann::json rec;
        rec["m"] = std::vector<double>(cert.m.probs().data(),
                                       cert.m.probs().data() + cert.m.num_states());
        nlohmann::json pi = nlohmann::json::array();
        for (int i = 0; i < cert.pi.num_states(); ++i) {
            std::vector<double> row(cert.pi.num_actions());
            for (int a = 0; a < cert.pi.num_actions(); ++a) row[static_cast<std::size_t>(a)] = cert.pi(i, a);
            pi.push_back(row);
        }
        rec["pi"] = std::move(pi);
        rec["kind"] = to_string(cert.kind);
        rec["stationarity_residual"] = cert.stationarity_residual;
        rec["optimality_gap"] = cert.optimality_gap;
        nlohmann::json support = nlohmann::json::array();
        for (int i = 0; i < cert.pi.num_states(); ++i) {
            std::vector<int> actions;
            for (int a = 0; a < cert.pi.num_actions(); ++a)
                if (cert.pi(i, a) > 1e-9) actions.push_back(a + 1);
            support.push_back(actions);
        }
        rec["strategy_support"] = std::move(support);
        j["equilibria"].push_back(std::move(rec));
    }
    j["warnings"] = nlohmann::json::array();
    for (const auto& w : result.report.warnings) j["warnings"].push_back(w);
    nlohmann::json nonconv = nlohmann::json::array();
    for (const auto& inc : result.report.nonconvergence)
        nonconv.push_back({{"context", inc.context}, {"reason", inc.reason}});
    j["nonconvergence"] = std::move(nonconv);
    return j;
}

struct EquilibriumRecord {
    Vector m;
    Matrix pi;
    std::string kind;
};

inline std::vector<EquilibriumRecord> equilibria_from_json(const nlohmann::json& j) {
    if (!j.contains("equilibria") || !j.at("equilibria").is_array())
        throw MalformedModel("equilibrium file: missing 'equilibria' array");
    std::vector<EquilibriumRecord> records;
    int k = 0;
    for (const auto& rec : j.at("equilibria")) {
        std::string where = "equilibria[" + std::to_string(k++) + "]";
        if (!rec.contains("m") || !rec.contains("pi"))
            throw MalformedModel(where + ": needs fields 'm' and 'pi'");
        std::vector<double> m = rec.at("m").get<std::vector<double>>();
        EquilibriumRecord out;
        out.m = Eigen::Map<Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
        const auto& pi = rec.at("pi");
        if (!pi.is_array() || pi.size() != m.size())
            throw MalformedModel(where + ": 'pi' must have one row per state");
        for (std::size_t i = 0; i < pi.size(); ++i) {
            std::vector<double> row = pi[i].get<std::vector<double>>();
            if (i == 0) out.pi.resize(static_cast<Eigen::Index>(pi.size()),
                                      static_cast<Eigen::Index>(row.size()));
            if (static_cast<Eigen::Index>(row.size()) != out.pi.cols())
                throw MalformedModel(where + ": ragged 'pi' rows");
            for (std::size_t a = 0; a < row.size(); ++a)
                out.pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = row[a];
        }
        out.kind = rec.value("kind", "");
        records.push_back(std::move(out));
    }
    return records;
}

inline void save_equilibria(const SearchResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write equilibrium file: " + path);
    out << equilibria_to_json(result).dump(2) << "\n";
}

inline std::vector<EquilibriumRecord> load_equilibria(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedModel("cannot open equilibrium file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel("equilibrium file " + path + " is not valid JSON: " + e.what());
    }
    return equilibria_from_json(j);
}

}  // namespace mfg
