#include <json.hpp>
#include <set>
#include <sstream>

#include "peierls/errors.hpp"
#include "peierls/model.hpp"

namespace peierls {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw InvalidModel(where + " must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw InvalidModel("unknown key '" + where + key + "'");
}

}  // namespace

HoppingTable parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidModel(std::string("model document is not valid JSON: ") + e.what());
    }
    require_keys(doc, {"dimension", "orbitals", "shift", "hoppings"}, "");
    for (const char* key : {"dimension", "orbitals", "hoppings"})
        if (!doc.contains(key)) throw InvalidModel(std::string("missing key '") + key + "'");

    HoppingTable h;
    h.d = doc["dimension"].get<int>();
    h.M = doc["orbitals"].get<int>();
    h.energy_shift = doc.value("shift", 0.0);
    if (h.d < 1 || h.d > 2) throw InvalidModel("dimension must be 1 or 2");
    if (h.M < 1) throw InvalidModel("orbitals must be >= 1");

    const json& list = doc["hoppings"];
    if (!list.is_array()) throw InvalidModel("hoppings must be an array");
    for (size_t i = 0; i < list.size(); ++i) {
        const json& entry = list[i];
        const std::string where = "hoppings[" + std::to_string(i) + "].";
        require_keys(entry, {"gamma", "block"}, where);
        const auto gamma = entry.at("gamma").get<std::vector<int>>();
        if (static_cast<int>(gamma.size()) != h.d)
            throw InvalidModel(where + "gamma must have " + std::to_string(h.d) + " components");
        const auto entries = entry.at("block").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(entries.size()) != h.M * h.M)
            throw InvalidModel(where + "block must list M*M = " + std::to_string(h.M * h.M) +
                               " [re, im] pairs");
        CMatrix b(h.M, h.M);
        for (int r = 0; r < h.M; ++r)
            for (int c = 0; c < h.M; ++c) {
                const auto& pair = entries[static_cast<size_t>(r * h.M + c)];
                if (pair.size() != 2) throw InvalidModel(where + "block entries must be [re, im]");
                b(r, c) = cplx(pair[0], pair[1]);
            }
        Cell g{gamma[0], h.d == 2 ? gamma[1] : 0};
        if (h.hoppings.count(g)) throw InvalidModel(where + "duplicate gamma");
        h.hoppings[g] = b;
    }
    h.check_self_adjoint();
    return h;
}

std::string serialize_model(const HoppingTable& h) {
    json doc;
    doc["dimension"] = h.d;
    doc["orbitals"] = h.M;
    doc["shift"] = h.energy_shift;
    json list = json::array();
    for (const auto& [g, b] : h.hoppings) {
        json entry;
        entry["gamma"] = h.d == 2 ? json::array({g[0], g[1]}) : json::array({g[0]});
        json block = json::array();
        for (int r = 0; r < h.M; ++r)
            for (int c = 0; c < h.M; ++c) block.push_back({b(r, c).real(), b(r, c).imag()});
        entry["block"] = block;
        list.push_back(entry);
    }
    doc["hoppings"] = list;
    return doc.dump(2);
}

}  // namespace peierls
