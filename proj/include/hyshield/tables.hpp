#pragma once

// JSON aero/propulsion table files.
//
//   {"aero": [{"mach": 3, "CL0": 0, "CLalpha": 2.8, "CD0": 0.03, "K": 0.12, "CDalpha2": 0.8}, ...],
//    "propulsion": {"altitude_m": [...], "mach": [...],
//                   "thrust_max_kN": [[...], ...], "isp_s": [[...], ...],
//                   "mach_gate": [4, 15]}}
//
// Either section may be omitted, in which case the built-in table is used.

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyshield/aero_propulsion.hpp"
#include "hyshield/errors.hpp"

namespace hyshield {

struct ModelTables {
    AeroTable aero = AeroTable::defaults();
    PropulsionMaps propulsion = PropulsionMaps::defaults();
};

namespace detail {

inline LookupTable2d<double> table_from_json(const nlohmann::json& rows, const std::vector<double>& h,
                                             const std::vector<double>& M, const char* name) {
    if (!rows.is_array() || rows.size() != h.size())
        throw ConfigError(std::string("tables: ") + name + " needs one row per altitude");
    std::vector<double> v;
    for (const auto& r : rows) {
        if (!r.is_array() || r.size() != M.size())
            throw ConfigError(std::string("tables: ") + name + " needs one column per Mach value");
        for (const auto& x : r) v.push_back(x.get<double>());
    }
    return LookupTable2d<double>(h, M, std::move(v));
}

inline nlohmann::json table_to_json(const LookupTable2d<double>& t) {
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < t.rows().size(); ++r) {
        auto row = nlohmann::json::array();
        for (std::size_t c = 0; c < t.cols().size(); ++c) row.push_back(t.at(r, c));
        rows.push_back(row);
    }
    return rows;
}

} // namespace detail

inline ModelTables tables_from_json(const nlohmann::json& j) {
    ModelTables out;
    try {
        if (j.contains("aero")) {
            out.aero.rows.clear();
            for (const auto& r : j.at("aero"))
                out.aero.rows.push_back({r.at("mach").get<double>(), r.at("CL0").get<double>(),
                                         r.at("CLalpha").get<double>(), r.at("CD0").get<double>(),
                                         r.at("K").get<double>(), r.at("CDalpha2").get<double>()});
            out.aero.validate();
        }
        if (j.contains("propulsion")) {
            const auto& p = j.at("propulsion");
            const auto h = p.at("altitude_m").get<std::vector<double>>();
            const auto M = p.at("mach").get<std::vector<double>>();
            out.propulsion.thrust_max_kN = detail::table_from_json(p.at("thrust_max_kN"), h, M, "thrust_max_kN");
            out.propulsion.isp_s = detail::table_from_json(p.at("isp_s"), h, M, "isp_s");
            if (p.contains("mach_gate")) {
                const auto g = p.at("mach_gate").get<std::vector<double>>();
                if (g.size() != 2 || !(g[0] < g[1])) throw ConfigError("tables: mach_gate must be [min, max]");
                out.propulsion.mach_gate_min = g[0];
                out.propulsion.mach_gate_max = g[1];
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tables: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("tables: ") + e.what());
    }
    return out;
}

inline nlohmann::json tables_to_json(const ModelTables& t) {
    nlohmann::json j;
    j["aero"] = nlohmann::json::array();
    for (const auto& r : t.aero.rows)
        j["aero"].push_back(
            {{"mach", r.mach}, {"CL0", r.CL0}, {"CLalpha", r.CLalpha}, {"CD0", r.CD0}, {"K", r.K}, {"CDalpha2", r.CDalpha2}});
    const auto& p = t.propulsion;
    j["propulsion"] = {{"altitude_m", std::vector<double>(p.thrust_max_kN.rows().begin(), p.thrust_max_kN.rows().end())},
                       {"mach", std::vector<double>(p.thrust_max_kN.cols().begin(), p.thrust_max_kN.cols().end())},
                       {"thrust_max_kN", detail::table_to_json(p.thrust_max_kN)},
                       {"isp_s", detail::table_to_json(p.isp_s)},
                       {"mach_gate", {p.mach_gate_min, p.mach_gate_max}}};
    return j;
}

inline ModelTables load_tables(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("table file '" + path + "': " + e.what());
    }
    return tables_from_json(j);
}

} // namespace hyshield
