#include "ribgeo/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ribgeo::cli {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << bytes;
}

/// 17 significant digits: enough for a bit-faithful double round trip.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const json* find_params(const json& doc) {
    auto it = doc.find("params");
    if (it == doc.end()) return nullptr;
    if (!it->is_object()) throw ConfigError("config: 'params' must be an object");
    return &*it;
}

const std::set<std::string>& scenario_names() {
    static const std::set<std::string> names = {
        "ribaucour-transform", "partial-tube",    "surface-family", "hypersurface-foliation",
        "channel",             "gauss-tube",      "enneper-planar", "enneper-general",
        "enneper-family",      "enneper-normalize", "joachimsthal", "constant-angle",
        "metric-check"};
    return names;
}

}  // namespace

int ScenarioConfig::resolution(const std::string& axis, int fallback) const {
    int n = fallback;
    auto it = doc->find("resolution");
    if (it != doc->end()) {
        if (!it->is_object()) throw ConfigError("config: 'resolution' must be an object");
        auto jt = it->find(axis);
        if (jt != it->end()) {
            if (!jt->is_number_integer()) throw ConfigError("config: resolution '" + axis + "' must be an integer");
            n = jt->get<int>();
        }
    }
    if (n < 8) throw ConfigError("config: resolution '" + axis + "' is " + std::to_string(n) + ", minimum is 8");
    return n;
}

double ScenarioConfig::param_number(const std::string& key, double fallback) const {
    const json* p = find_params(*doc);
    if (!p) return fallback;
    auto it = p->find(key);
    if (it == p->end()) return fallback;
    if (!it->is_number()) throw ConfigError("config: parameter '" + key + "' must be a number");
    return it->get<double>();
}

std::string ScenarioConfig::param_string(const std::string& key, const std::string& fallback) const {
    const json* p = find_params(*doc);
    if (!p) return fallback;
    auto it = p->find(key);
    if (it == p->end()) return fallback;
    if (!it->is_string()) throw ConfigError("config: parameter '" + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<double> ScenarioConfig::param_numbers(const std::string& key,
                                                  std::vector<double> fallback) const {
    const json* p = find_params(*doc);
    if (!p) return fallback;
    auto it = p->find(key);
    if (it == p->end()) return fallback;
    if (!it->is_array()) throw ConfigError("config: parameter '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number()) throw ConfigError("config: parameter '" + key + "' must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::string> ScenarioConfig::param_strings(const std::string& key,
                                                       std::vector<std::string> fallback) const {
    const json* p = find_params(*doc);
    if (!p) return fallback;
    auto it = p->find(key);
    if (it == p->end()) return fallback;
    if (!it->is_array()) throw ConfigError("config: parameter '" + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw ConfigError("config: parameter '" + key + "' must be an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

bool ScenarioConfig::param_flag(const std::string& key, bool fallback) const {
    const json* p = find_params(*doc);
    if (!p) return fallback;
    auto it = p->find(key);
    if (it == p->end()) return fallback;
    if (!it->is_boolean()) throw ConfigError("config: parameter '" + key + "' must be a boolean");
    return it->get<bool>();
}

ScenarioConfig parse_config(const std::string& json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure" + (origin.empty() ? "" : " in " + origin) + ": " +
                          e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    ScenarioConfig cfg;
    cfg.path = origin;
    auto it = doc.find("scenario");
    if (it == doc.end() || !it->is_string())
        throw ConfigError("config: missing string field 'scenario'");
    cfg.scenario = it->get<std::string>();
    if (!scenario_names().count(cfg.scenario))
        throw ConfigError("config: unknown scenario '" + cfg.scenario + "'");
    cfg.out_prefix = cfg.scenario;
    if (auto o = doc.find("output"); o != doc.end()) {
        if (!o->is_object() || (o->contains("prefix") && !(*o)["prefix"].is_string()))
            throw ConfigError("config: 'output.prefix' must be a string");
        if (o->contains("prefix")) cfg.out_prefix = (*o)["prefix"].get<std::string>();
    }
    if (auto t = doc.find("tolerance"); t != doc.end()) {
        if (!t->is_object() || (t->contains("c") && !(*t)["c"].is_number()))
            throw ConfigError("config: 'tolerance.c' must be a number");
        if (t->contains("c")) cfg.tolerance_c = (*t)["c"].get<double>();
        if (cfg.tolerance_c <= 0.0) throw ConfigError("config: 'tolerance.c' must be positive");
    }
    if (auto s = doc.find("seed"); s != doc.end()) {
        if (!s->is_number_unsigned()) throw ConfigError("config: 'seed' must be a non-negative integer");
        cfg.seed = s->get<std::uint64_t>();
    }
    cfg.doc = std::make_shared<const json>(std::move(doc));
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    return parse_config(read_file(path), path);
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_grid(const std::string& path, const ImmersedGrid& f) {
    std::ostringstream out;
    const ParamGrid& g = f.grid();
    out << "ribgeo-grid 1\n";
    out << "dim " << g.dim() << "\n";
    for (int i = 0; i < g.dim(); ++i)
        out << "axis " << g.axis(i).count << " " << fmt(g.axis(i).lo) << " " << fmt(g.axis(i).hi)
            << "\n";
    out << "factors";
    for (int i = 0; i < g.dim(); ++i) out << " " << g.factor_of(i);
    out << "\nambient " << f.ambient_dim() << "\nsignature";
    for (int s : f.signature()) out << " " << s;
    out << "\nvalues\n";
    for (std::int64_t k = 0; k < g.size(); ++k) {
        for (int i = 0; i < f.ambient_dim(); ++i) {
            if (i) out << " ";
            out << (f.node_ok(k) ? fmt(f.values()(i, k)) : "nan");
        }
        out << "\n";
    }
    write_file(path, out.str());
}

ImmersedGrid read_grid(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "ribgeo-grid" || version != 1)
        throw ConfigError("grid file: bad header in " + path);
    int dim = 0;
    if (!(in >> word >> dim) || word != "dim" || dim < 1)
        throw ConfigError("grid file: bad 'dim' line in " + path);
    std::vector<GridAxis> axes(static_cast<size_t>(dim));
    for (auto& a : axes)
        if (!(in >> word >> a.count >> a.lo >> a.hi) || word != "axis")
            throw ConfigError("grid file: bad 'axis' line in " + path);
    std::vector<int> factors(static_cast<size_t>(dim));
    if (!(in >> word) || word != "factors") throw ConfigError("grid file: bad 'factors' line in " + path);
    for (auto& fb : factors)
        if (!(in >> fb)) throw ConfigError("grid file: bad 'factors' line in " + path);
    int ambient = 0;
    if (!(in >> word >> ambient) || word != "ambient" || ambient < 1)
        throw ConfigError("grid file: bad 'ambient' line in " + path);
    std::vector<int> signature(static_cast<size_t>(ambient));
    if (!(in >> word) || word != "signature") throw ConfigError("grid file: bad 'signature' line in " + path);
    for (auto& s : signature)
        if (!(in >> s)) throw ConfigError("grid file: bad 'signature' line in " + path);
    if (!(in >> word) || word != "values") throw ConfigError("grid file: missing 'values' section in " + path);
    ImmersedGrid f(ParamGrid(std::move(axes), std::move(factors)), ambient, std::move(signature));
    for (std::int64_t k = 0; k < f.grid().size(); ++k) {
        bool masked = false;
        for (int i = 0; i < ambient; ++i) {
            // stream extraction rejects "nan" tokens; go through strtod
            std::string tok;
            if (!(in >> tok)) throw ConfigError("grid file: truncated values in " + path);
            double v = 0.0;
            try {
                size_t used = 0;
                v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("grid file: bad value '" + tok + "' in " + path);
            }
            if (std::isnan(v)) masked = true;
            f.values()(i, k) = v;
        }
        if (masked) {
            f.values().col(k).setZero();
            f.mask_node(k);
        }
    }
    return f;
}

void write_obj(const std::string& path, const ImmersedGrid& f) {
    if (f.ambient_dim() != 3 || f.grid().dim() != 2)
        throw ConfigError("obj export needs a 2-D grid in R^3");
    const ParamGrid& g = f.grid();
    const int nu = g.axis(0).count, nv = g.axis(1).count;
    std::ostringstream out;
    std::vector<std::int64_t> vert_id(size_t(g.size()), 0);
    std::int64_t next = 1;
    for (std::int64_t k = 0; k < g.size(); ++k) {
        if (!f.node_ok(k)) continue;
        vert_id[size_t(k)] = next++;
        out << "v " << fmt(f.values()(0, k)) << " " << fmt(f.values()(1, k)) << " "
            << fmt(f.values()(2, k)) << "\n";
    }
    for (int i = 0; i + 1 < nu; ++i)
        for (int j = 0; j + 1 < nv; ++j) {
            std::int64_t a = vert_id[size_t(g.flat({i, j}))];
            std::int64_t b = vert_id[size_t(g.flat({i, j + 1}))];
            std::int64_t c = vert_id[size_t(g.flat({i + 1, j + 1}))];
            std::int64_t d = vert_id[size_t(g.flat({i + 1, j}))];
            if (!a || !b || !c || !d) continue;  // masked corner: drop the quad
            out << "f " << a << " " << b << " " << c << "\n";
            out << "f " << a << " " << c << " " << d << "\n";
        }
    write_file(path, out.str());
}

std::string format_report(const std::vector<InvariantReport>& reports) {
    std::ostringstream out;
    out << "ribgeo-report 1\n";
    bool all = true;
    for (const auto& r : reports) {
        out << "check " << r.name << " max " << fmt(r.max_residual) << " rms "
            << fmt(r.rms_residual) << " tol " << fmt(r.tolerance) << " verdict "
            << (r.pass() ? "pass" : "fail") << "\n";
        for (const auto& n : r.notes) out << "note " << r.name << " " << n << "\n";
        all = all && r.pass();
    }
    out << "overall " << (all ? "pass" : "fail") << "\n";
    return out.str();
}

void write_report(const std::string& path, const std::vector<InvariantReport>& reports) {
    write_file(path, format_report(reports));
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    std::ostringstream out;
    out << "ribgeo-manifest 1\n";
    out << "tool-version " << manifest.tool_version << "\n";
    out << "config-hash " << manifest.config_hash << "\n";
    for (const auto& [name, ms] : manifest.stages) out << "stage " << name << " " << fmt(ms) << "\n";
    for (const auto& fpath : manifest.files) out << "file " << fpath << "\n";
    out << "masked-count " << manifest.masked_nodes.size() << "\n";
    for (auto k : manifest.masked_nodes) out << "masked " << k << "\n";
    write_file(path, out.str());
}

}  // namespace ribgeo::cli
