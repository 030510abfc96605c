#include "peierls/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "peierls/errors.hpp"

namespace peierls {

using nlohmann::json;

namespace {

FluctuationPotential default_fluct() {
    FluctuationPotential f;
    FluctuationMode a, b;
    a.wavevector = pt(0.0, kPi / 2);
    a.amplitude = pt(0.5, 0.0);
    b.wavevector = pt(kPi / 2, 0.0);
    b.amplitude = pt(0.0, 0.5);
    f.modes = {a, b};
    return f;
}

std::vector<double> default_eps(int L, double b, int d) {
    std::vector<double> out;
    for (int k = 1; k <= 5; ++k) out.push_back(kTwoPi * k / (L * (d == 2 ? b : 1.0)));
    return out;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
    if (!obj.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown key");
}

template <class T>
T read(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path, "has the wrong type");
    }
}

const json& section(const json& doc, const std::string& key, const std::set<std::string>& allowed) {
    static const json empty = json::object();
    if (!doc.contains(key)) return empty;
    reject_unknown(doc.at(key), allowed, key);
    return doc.at(key);
}

Point read_point(const json& v, const std::string& path, int d) {
    std::vector<double> xs;
    try {
        xs = v.get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ConfigError(path, "must be an array of numbers");
    }
    if (static_cast<int>(xs.size()) != d) throw ConfigError(path, "must have " + std::to_string(d) + " components");
    return pt(xs[0], d == 2 ? xs[1] : 0.0);
}

json point_json(const Point& p, int d) { return d == 2 ? json::array({p[0], p[1]}) : json::array({p[0]}); }

HoppingTable resolve_model(const std::string& ref, const std::string& base_dir) {
    if (models::is_builtin(ref)) return models::builtin(ref);
    std::filesystem::path path(ref);
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("model", "not a built-in name and no readable file at " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_model(ss.str());
    } catch (const InvalidModel& e) {
        throw ConfigError("model", e.what());
    } catch (const json::exception& e) {
        throw ConfigError("model", e.what());
    }
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

void validate(const RunConfig& c) {
    const int d = c.table.d;
    require(c.nk >= 4, "grid.nk", "must be >= 4");
    require(c.k0 >= 1, "family.k0", "must be >= 1 (bands are numbered from 1)");
    require(c.N >= 0, "family.N", "must be >= 0");
    require(c.k0 + c.N <= c.table.M, "family.k0", "family exceeds the number of bands");
    require(c.nB_start >= 1, "frame.nB_start", "must be >= 1");
    require(c.a_min > 0.0, "frame.A_min", "must be positive");
    require(c.wannier_radius >= 1 && 2 * c.wannier_radius < c.nk, "frame.wannier_radius",
            "must lie in [1, nk/2)");
    require(std::isfinite(c.b) && c.b != 0.0, "magnetic.b", "must be finite and nonzero");
    require(std::isfinite(c.c) && c.c >= 0.0, "magnetic.c", "must be finite and >= 0");
    require(c.L >= 2, "box.L", "must be >= 2");
    require(c.boundary == "magnetic_periodic", "box.boundary", "only \"magnetic_periodic\" is supported");
    require(c.delta < 0.0 || std::isfinite(c.delta), "window.delta", "must be finite");
    require(c.kernel_radius >= 1 && 2 * c.kernel_radius < c.nk, "truncation.kernel_radius",
            "must lie in [1, nk/2)");
    require(c.hopping_radius >= 1 && 2 * c.hopping_radius < c.nk, "truncation.hopping_radius",
            "must lie in [1, nk/2)");
    for (double t : c.times) require(std::isfinite(t) && t >= 0.0, "evolve.times", "entries must be >= 0");
    require(c.butterfly_L >= 2, "butterfly.L", "must be >= 2");
    require(c.butterfly_max_q >= 1, "butterfly.max_q", "must be >= 1");
    require(c.schur_grid >= 8, "schur.grid", "must be >= 8");
    require(c.max_block_dim >= 1, "limits.max_block_dim", "must be >= 1");
    require(!c.output.empty(), "output", "must not be empty");
    const double unit = kTwoPi / c.L;
    for (size_t i = 0; i < c.fluct.modes.size(); ++i)
        for (int a = 0; a < d; ++a) {
            const double n = c.fluct.modes[i].wavevector[a] / unit;
            require(std::abs(n - std::round(n)) < 1e-9,
                    "magnetic.fluct.modes[" + std::to_string(i) + "].wavevector",
                    "must be a multiple of 2 pi / L");
        }
    flux_quanta(c);
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    c.table = models::builtin(c.model);
    c.fluct = default_fluct();
    c.eps_list = default_eps(c.L, c.b, c.table.d);
    return c;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
    }
    reject_unknown(doc, {"schema_version", "model", "grid", "family", "frame", "magnetic", "box", "window",
                         "truncation", "evolve", "butterfly", "schur", "limits", "output", "references"},
                   "");
    RunConfig c;
    if (!doc.contains("schema_version")) throw ConfigError("schema_version", "is required");
    c.schema_version = read<int>(doc, "schema_version", "schema_version", 0);
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version));

    c.model = read<std::string>(doc, "model", "model", c.model);
    c.table = resolve_model(c.model, base_dir);
    const int d = c.table.d;

    const json& grid = section(doc, "grid", {"nk"});
    c.nk = read<int>(grid, "nk", "grid.nk", c.nk);

    const json& family = section(doc, "family", {"k0", "N"});
    c.k0 = read<int>(family, "k0", "family.k0", c.k0);
    c.N = read<int>(family, "N", "family.N", c.N);

    const json& frame = section(doc, "frame", {"nB_start", "A_min", "seed", "wannier_radius"});
    c.nB_start = read<int>(frame, "nB_start", "frame.nB_start", c.nB_start);
    c.a_min = read<double>(frame, "A_min", "frame.A_min", c.a_min);
    const long long seed = read<long long>(frame, "seed", "frame.seed", 0);
    if (seed < 0) throw ConfigError("frame.seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.wannier_radius = read<int>(frame, "wannier_radius", "frame.wannier_radius", c.wannier_radius);

    const json& box = section(doc, "box", {"L", "boundary"});
    c.L = read<int>(box, "L", "box.L", c.L);
    c.boundary = read<std::string>(box, "boundary", "box.boundary", c.boundary);

    const json& mag = section(doc, "magnetic", {"b", "fluct", "eps_list", "c"});
    c.b = read<double>(mag, "b", "magnetic.b", c.b);
    c.c = read<double>(mag, "c", "magnetic.c", c.c);
    if (mag.contains("fluct")) {
        const json& f = mag.at("fluct");
        reject_unknown(f, {"constant", "modes"}, "magnetic.fluct");
        if (f.contains("constant")) c.fluct.constant = read_point(f.at("constant"), "magnetic.fluct.constant", d);
        if (f.contains("modes")) {
            if (!f.at("modes").is_array()) throw ConfigError("magnetic.fluct.modes", "must be an array");
            for (size_t i = 0; i < f.at("modes").size(); ++i) {
                const std::string where = "magnetic.fluct.modes[" + std::to_string(i) + "]";
                const json& m = f.at("modes")[i];
                reject_unknown(m, {"wavevector", "amplitude", "phase"}, where);
                FluctuationMode mode;
                if (!m.contains("wavevector")) throw ConfigError(where + ".wavevector", "is required");
                if (!m.contains("amplitude")) throw ConfigError(where + ".amplitude", "is required");
                mode.wavevector = read_point(m.at("wavevector"), where + ".wavevector", d);
                mode.amplitude = read_point(m.at("amplitude"), where + ".amplitude", d);
                mode.phase = read<double>(m, "phase", where + ".phase", 0.0);
                c.fluct.modes.push_back(mode);
            }
        }
    } else {
        c.fluct = default_fluct();
        if (d == 1) {
            c.fluct.modes.resize(1);
            c.fluct.modes[0].wavevector = pt(kPi / 2);
            c.fluct.modes[0].amplitude = pt(0.5);
        }
    }
    c.eps_list = mag.contains("eps_list") ? read<std::vector<double>>(mag, "eps_list", "magnetic.eps_list", {})
                                          : default_eps(c.L, c.b, d);

    const json& window = section(doc, "window", {"delta"});
    if (window.contains("delta") && !window.at("delta").is_null()) {
        c.delta = read<double>(window, "delta", "window.delta", -1.0);
        if (!(c.delta > 0.0)) throw ConfigError("window.delta", "must be positive (or null for the default)");
    }

    const json& trunc = section(doc, "truncation", {"kernel_radius", "hopping_radius"});
    c.kernel_radius = read<int>(trunc, "kernel_radius", "truncation.kernel_radius", c.kernel_radius);
    c.hopping_radius = read<int>(trunc, "hopping_radius", "truncation.hopping_radius", c.hopping_radius);

    const json& ev = section(doc, "evolve", {"times"});
    c.times = read<std::vector<double>>(ev, "times", "evolve.times", c.times);

    const json& bf = section(doc, "butterfly", {"L", "max_q"});
    c.butterfly_L = read<int>(bf, "L", "butterfly.L", c.butterfly_L);
    c.butterfly_max_q = read<int>(bf, "max_q", "butterfly.max_q", c.butterfly_max_q);

    const json& sc = section(doc, "schur", {"grid"});
    c.schur_grid = read<int>(sc, "grid", "schur.grid", c.schur_grid);

    const json& lim = section(doc, "limits", {"max_block_dim"});
    const long long mbd = read<long long>(lim, "max_block_dim", "limits.max_block_dim", 4096);
    if (mbd < 1) throw ConfigError("limits.max_block_dim", "must be >= 1");
    c.max_block_dim = static_cast<std::size_t>(mbd);

    c.output = read<std::string>(doc, "output", "output", c.output);
    c.references = read<std::string>(doc, "references", "references", c.references);
    if (!c.references.empty() && std::filesystem::path(c.references).is_relative())
        c.references = std::filesystem::absolute(std::filesystem::path(base_dir) / c.references).lexically_normal().string();

    validate(c);
    return c;
}

std::string effective_config_json(const RunConfig& c) {
    const int d = c.table.d;
    json modes = json::array();
    for (const auto& m : c.fluct.modes)
        modes.push_back({{"wavevector", point_json(m.wavevector, d)},
                         {"amplitude", point_json(m.amplitude, d)},
                         {"phase", m.phase}});
    json doc = {
        {"schema_version", c.schema_version},
        {"model", c.model},
        {"grid", {{"nk", c.nk}}},
        {"family", {{"k0", c.k0}, {"N", c.N}}},
        {"frame", {{"nB_start", c.nB_start}, {"A_min", c.a_min}, {"seed", c.seed}, {"wannier_radius", c.wannier_radius}}},
        {"magnetic",
         {{"b", c.b},
          {"c", c.c},
          {"eps_list", c.eps_list},
          {"fluct", {{"constant", point_json(c.fluct.constant, d)}, {"modes", modes}}}}},
        {"box", {{"L", c.L}, {"boundary", c.boundary}}},
        {"window", {{"delta", c.delta > 0.0 ? json(c.delta) : json(nullptr)}}},
        {"truncation", {{"kernel_radius", c.kernel_radius}, {"hopping_radius", c.hopping_radius}}},
        {"evolve", {{"times", c.times}}},
        {"butterfly", {{"L", c.butterfly_L}, {"max_q", c.butterfly_max_q}}},
        {"schur", {{"grid", c.schur_grid}}},
        {"limits", {{"max_block_dim", c.max_block_dim}}},
        {"output", c.output},
        {"references", c.references},
    };
    return doc.dump(2);
}

std::string config_fingerprint(const RunConfig& cfg) {
    // Where outputs and references live does not change any result.
    RunConfig copy = cfg;
    copy.output = "";
    copy.references = "";
    const std::string text = effective_config_json(copy) + serialize_model(cfg.table);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PipelineOptions pipeline_options(const RunConfig& c) {
    PipelineOptions o;
    o.model = c.table;
    o.k0 = c.k0;
    o.N = c.N;
    o.nk = c.nk;
    o.nB_start = c.nB_start;
    o.seed = c.seed;
    o.a_min = c.a_min;
    o.L = c.L;
    o.frame_radius = c.wannier_radius;
    o.kernel_radius = c.kernel_radius;
    o.hopping_radius = c.hopping_radius;
    o.b = c.b;
    o.fluct = c.fluct;
    o.delta = c.delta;
    return o;
}

std::vector<int> flux_quanta(const RunConfig& c) {
    std::vector<int> out;
    const double scale = c.table.d == 2 ? c.b : 1.0;
    for (double eps : c.eps_list) {
        if (!(std::isfinite(eps) && eps > 0.0)) throw ConfigError("magnetic.eps_list", "entries must be positive");
        const double k = eps * scale * c.L / kTwoPi;
        if (std::abs(k - std::round(k)) > 1e-9)
            throw ConfigError("magnetic.eps_list",
                              "eps = " + std::to_string(eps) + " is not commensurate with the box (eps*b*L/(2 pi) = " +
                                  std::to_string(k) + ")");
        out.push_back(static_cast<int>(std::lround(k)));
    }
    return out;
}

}  // namespace peierls
