#include "spdekit/scenario.hpp"

#include "spdekit/errors.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace spdekit {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw ValidationError("scenario error: " + where + ": " + msg);
}

double to_double(const std::string& v, const std::string& where) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') fail(where, "cannot parse number '" + v + "'");
    return x;
}

long to_int(const std::string& v, const std::string& where) {
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') fail(where, "cannot parse integer '" + v + "'");
    return x;
}

bool to_bool(const std::string& v, const std::string& where) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    fail(where, "cannot parse boolean '" + v + "' (use on/off)");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

} // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& name_hint) {
    Scenario sc;
    sc.source_text = text;
    sc.name = name_hint;

    std::map<std::string, std::map<std::string, std::string>> sections;
    {
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    fail("line " + std::to_string(lineno), "malformed section header");
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                fail("line " + std::to_string(lineno), "expected 'key = value'");
            std::string key = trim(t.substr(0, eq));
            std::string val = trim(t.substr(eq + 1));
            if (section.empty()) fail("line " + std::to_string(lineno), "entry before any [section]");
            if (key.empty()) fail("line " + std::to_string(lineno), "empty key");
            auto& sec = sections[section];
            if (sec.count(key)) fail("[" + section + "] " + key, "duplicate key");
            sec[key] = val;
        }
    }

    auto need = [&](const std::string& section, const std::string& key) -> std::string {
        auto si = sections.find(section);
        if (si == sections.end() || !si->second.count(key))
            fail("[" + section + "] " + key, "missing required entry");
        return si->second.at(key);
    };
    auto opt = [&](const std::string& section, const std::string& key,
                   const std::string& dflt) -> std::string {
        auto si = sections.find(section);
        if (si == sections.end() || !si->second.count(key)) return dflt;
        return si->second.at(key);
    };

    if (sections.count("scenario") && sections["scenario"].count("name"))
        sc.name = sections["scenario"]["name"];
    sc.d = static_cast<int>(to_int(need("scenario", "d"), "[scenario] d"));
    sc.d1 = static_cast<int>(to_int(need("scenario", "d1"), "[scenario] d1"));
    sc.d2 = static_cast<int>(to_int(need("scenario", "d2"), "[scenario] d2"));
    sc.R0 = to_double(need("scenario", "R0"), "[scenario] R0");
    sc.T = to_double(need("scenario", "T"), "[scenario] T");
    sc.cutoff = to_bool(opt("scenario", "cutoff", "on"), "[scenario] cutoff");

    sc.nodes = static_cast<int>(to_int(need("grid", "nodes"), "[grid] nodes"));
    sc.dt = to_double(need("grid", "dt"), "[grid] dt");

    for (const auto& s : split_list(opt("seeds", "seeds", "1")))
        sc.seeds.push_back(static_cast<std::uint64_t>(to_int(s, "[seeds] seeds")));
    if (sc.seeds.empty()) fail("[seeds] seeds", "at least one seed required");

    if (sections.count("fields"))
        for (const auto& [k, v] : sections["fields"]) sc.coeff_text[k] = v;
    if (sections.count("initial"))
        for (const auto& [k, v] : sections["initial"]) {
            if (k != "u0") fail("[initial] " + k, "unknown key");
            sc.coeff_text["u0"] = v;
        }

    for (const auto& s : split_list(opt("output", "times", "")))
        sc.output_times.push_back(to_double(s, "[output] times"));
    if (sc.output_times.empty()) sc.output_times.push_back(sc.T);

    sc.semi_implicit = to_bool(opt("solver", "semi_implicit", "on"), "[solver] semi_implicit");
    sc.bicg_tol = to_double(opt("tolerances", "bicg_tol", "1e-10"), "[tolerances] bicg_tol");
    sc.rank_tol = to_double(opt("tolerances", "rank_tol", "1e-8"), "[tolerances] rank_tol");

    sc.horm.radius = to_double(opt("hormander", "r", std::to_string(sc.R0)), "[hormander] r");
    sc.horm.nodes_per_axis =
        static_cast<int>(to_int(opt("hormander", "nodes", "9"), "[hormander] nodes"));
    sc.horm.time_nodes =
        static_cast<int>(to_int(opt("hormander", "time_nodes", "3"), "[hormander] time_nodes"));
    sc.horm.t_begin = 0.0;
    sc.horm.t_end = sc.T;
    sc.horm_n_max = static_cast<int>(to_int(opt("hormander", "n_max", "3"), "[hormander] n_max"));

    sc.iw_n_phi = static_cast<int>(to_int(opt("iw", "n_phi", "5"), "[iw] n_phi"));

    if (sections.count("probe")) {
        for (int w = 1;; ++w) {
            std::string prefix = "window" + std::to_string(w) + ".";
            if (!sections["probe"].count(prefix + "s0")) break;
            Scenario::ProbeWindowSpec ps;
            ps.s0 = to_double(need("probe", prefix + "s0"), "[probe] " + prefix + "s0");
            ps.t0 = to_double(need("probe", prefix + "t0"), "[probe] " + prefix + "t0");
            ps.r = to_double(need("probe", prefix + "r"), "[probe] " + prefix + "r");
            ps.alphas = need("probe", prefix + "alphas");
            if (ps.alphas.size() >= 2 && ps.alphas.front() == '"' && ps.alphas.back() == '"')
                ps.alphas = ps.alphas.substr(1, ps.alphas.size() - 2);
            ps.l = static_cast<int>(to_int(opt("probe", prefix + "l", "5"), "[probe] " + prefix + "l"));
            ps.m = to_double(opt("probe", prefix + "m", "0"), "[probe] " + prefix + "m");
            sc.probes.push_back(ps);
        }
    }

    // basic consistency
    if (sc.d < 1 || sc.d > kMaxDim) fail("[scenario] d", "outside supported range");
    if (sc.d1 < 1 || sc.d2 < 1) fail("[scenario] d1/d2", "must be >= 1");
    if (!(sc.R0 > 0.0)) fail("[scenario] R0", "must be positive");
    if (!(sc.T > 0.0)) fail("[scenario] T", "must be positive");
    if (sc.nodes < 8 || (sc.nodes & (sc.nodes - 1)) != 0)
        fail("[grid] nodes", "must be a power of two >= 8");
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open scenario file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string name = path;
    auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return parse_scenario_text(ss.str(), name);
}

SegmentedExpr parse_segmented(const std::string& value, int d, double T, const std::string& where) {
    std::vector<SegmentedExpr::Segment> segs;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
    };
    skip_ws();
    if (pos >= value.size()) fail(where, "empty expression value");
    bool any_interval = false;
    while (pos < value.size()) {
        skip_ws();
        if (pos >= value.size()) break;
        double t0 = 0.0, t1 = T;
        bool has_interval = false;
        if (value[pos] == '@') {
            ++pos;
            skip_ws();
            if (pos >= value.size() || value[pos] != '[') fail(where, "expected '[' after '@'");
            auto close = value.find(']', pos);
            if (close == std::string::npos) fail(where, "unterminated '@[t0,t1]' interval");
            std::string iv = value.substr(pos + 1, close - pos - 1);
            auto comma = iv.find(',');
            if (comma == std::string::npos) fail(where, "interval needs 't0,t1'");
            t0 = to_double(trim(iv.substr(0, comma)), where);
            t1 = to_double(trim(iv.substr(comma + 1)), where);
            pos = close + 1;
            has_interval = true;
            skip_ws();
        }
        if (pos >= value.size() || value[pos] != '"')
            fail(where, "expected quoted expression");
        auto close = value.find('"', pos + 1);
        if (close == std::string::npos) fail(where, "unterminated quoted expression");
        std::string src = value.substr(pos + 1, close - pos - 1);
        pos = close + 1;
        ExprTree tree;
        try {
            tree = ExprTree::parse(src, d);
        } catch (const ValidationError& e) {
            fail(where, e.what());
        }
        if (!has_interval && !segs.empty()) fail(where, "multiple segments need '@[t0,t1]' intervals");
        any_interval = any_interval || has_interval;
        segs.push_back({t0, t1, std::move(tree)});
    }
    if (any_interval) {
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (std::abs(segs[i].t0 - segs[i - 1].t1) > 1e-12)
                fail(where, "time segments must be contiguous");
        if (std::abs(segs.front().t0) > 1e-12 || std::abs(segs.back().t1 - T) > 1e-9 * (1.0 + T))
            fail(where, "time segments must partition [0, T]");
    }
    return SegmentedExpr(std::move(segs));
}

VectorFieldSet build_field_set(const Scenario& sc) {
    auto coeff = [&](const std::string& key) -> SegmentedExpr {
        auto it = sc.coeff_text.find(key);
        if (it == sc.coeff_text.end()) return SegmentedExpr();
        return parse_segmented(it->second, sc.d, sc.T, "[fields] " + key);
    };
    std::vector<std::vector<SegmentedExpr>> sig;
    for (int k = 0; k <= sc.d1 + sc.d2; ++k) {
        std::vector<SegmentedExpr> comps;
        for (int c = 1; c <= sc.d; ++c) {
            std::string key = "sigma" + std::to_string(k) + "." + std::to_string(c);
            SegmentedExpr e = coeff(key);
            if (e.empty()) e = SegmentedExpr(ExprTree::constant(sc.d, 0.0));
            comps.push_back(std::move(e));
        }
        sig.push_back(std::move(comps));
    }
    std::vector<SegmentedExpr> nu, g;
    for (int k = 1; k <= sc.d1; ++k) {
        nu.push_back(coeff("nu" + std::to_string(k)));
        g.push_back(coeff("g" + std::to_string(k)));
    }
    VectorFieldSet set = make_field_set(sc.d, sc.d1, sc.d2, sc.R0, std::move(sig), coeff("c"),
                                        std::move(nu), coeff("f"), std::move(g), sc.cutoff);
    // unknown keys in [fields] are mistakes worth failing loudly on
    for (const auto& [k, v] : sc.coeff_text) {
        (void)v;
        if (k == "c" || k == "f" || k == "u0") continue;
        if (k.rfind("nu", 0) == 0 || k.rfind("g", 0) == 0) continue;
        if (k.rfind("sigma", 0) == 0) {
            auto dotp = k.find('.');
            if (dotp == std::string::npos)
                throw ValidationError("scenario error: [fields] " + k +
                                      ": sigma entries use sigmaK.C with C in 1.." +
                                      std::to_string(sc.d));
            int kk = static_cast<int>(to_int(k.substr(5, dotp - 5), "[fields] " + k));
            int cc = static_cast<int>(to_int(k.substr(dotp + 1), "[fields] " + k));
            if (kk < 0 || kk > sc.d1 + sc.d2 || cc < 1 || cc > sc.d)
                throw ValidationError("scenario error: [fields] " + k + ": index out of range");
            continue;
        }
        throw ValidationError("scenario error: [fields] " + k + ": unknown key");
    }
    set.validate(sc.T);
    return set;
}

SpdeProblem build_problem(const Scenario& sc) {
    SpdeProblem p;
    p.set = build_field_set(sc);
    auto it = sc.coeff_text.find("u0");
    if (it != sc.coeff_text.end())
        p.u0 = parse_segmented(it->second, sc.d, sc.T, "[initial] u0");
    p.T = sc.T;
    p.dt = sc.dt;
    p.grid = SpdeProblem::box_grid(sc.d, sc.R0, sc.nodes);
    p.opt.semi_implicit = sc.semi_implicit;
    p.opt.bicg_tol = sc.bicg_tol;
    return p;
}

std::vector<ProbeWindow> build_probe_windows(const Scenario& sc) {
    std::vector<ProbeWindow> out;
    for (const auto& ps : sc.probes) {
        ProbeWindow w;
        w.s0 = ps.s0;
        w.t0 = ps.t0;
        w.r = ps.r;
        w.l = ps.l;
        w.m = ps.m;
        // alphas: rows separated by ';', entries by spaces
        std::string rows = ps.alphas;
        std::size_t start = 0;
        while (start <= rows.size()) {
            auto semi = rows.find(';', start);
            std::string row = semi == std::string::npos ? rows.substr(start)
                                                        : rows.substr(start, semi - start);
            auto entries = split_list(row);
            if (!entries.empty()) {
                if (static_cast<int>(entries.size()) != sc.d)
                    throw ValidationError("scenario error: [probe] alphas row needs " +
                                          std::to_string(sc.d) + " entries");
                MultiIndex a{};
                for (int i = 0; i < sc.d; ++i)
                    a[i] = static_cast<std::uint8_t>(
                        to_int(entries[static_cast<std::size_t>(i)], "[probe] alphas"));
                w.alphas.push_back(a);
            }
            if (semi == std::string::npos) break;
            start = semi + 1;
        }
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace spdekit
