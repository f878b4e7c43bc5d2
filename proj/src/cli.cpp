#include "dice/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dice/ep.hpp"
#include "dice/errors.hpp"
#include "dice/io.hpp"
#include "dice/model.hpp"
#include "dice/nhse.hpp"
#include "dice/ribbon.hpp"
#include "dice/spectra.hpp"

namespace dice::cli {

namespace {

using nlohmann::json;

struct KeySpec {
    const char* command;  // "*" for every command
    const char* key;
    const char* value;    // default
    const char* help;
};

// clang-format off
const KeySpec kSchema[] = {
    {"*", "output_dir", "out", "directory for data files and manifest.json"},
    {"*", "seed", "0", "base seed (disorder realizations derive from it)"},
    {"*", "threads", "0", "worker threads (0: DICE_THREADS or 1)"},
    {"*", "t", "0.70710678118654757", "nn hopping"},
    {"*", "t2", "0", "nnn amplitude; suffix t scales by t (0.06t)"},
    {"*", "phi", "0", "Haldane phase; accepts pi forms (pi/2)"},
    {"*", "m", "0", "Semenoff mass"},
    {"*", "delta", "0", "gain/loss strength"},
    {"*", "gamma", "0", "non-reciprocity strength"},

    {"bands", "path", "M,K',G,K,M", "comma separated vertices (G K K' M or kx:ky)"},
    {"bands", "samples", "60", "samples per segment"},

    {"ep-scan", "k", "M", "momentum (G K K' M or kx:ky)"},
    {"ep-scan", "param", "delta", "delta or gamma"},
    {"ep-scan", "lo", "0", "scan start"},
    {"ep-scan", "hi", "2", "scan end"},
    {"ep-scan", "steps", "201", "scan points"},
    {"ep-scan", "kx_lo", "", "with kx_hi: also search the kx axis"},
    {"ep-scan", "kx_hi", "", "upper kx of the axis search"},

    {"rigidity", "k", "G", "momentum"},
    {"rigidity", "param", "delta", "delta or gamma"},
    {"rigidity", "ep", "3", "EP parameter value"},
    {"rigidity", "window_lo", "1e-4", "smallest offset"},
    {"rigidity", "window_hi", "0.1", "largest offset"},
    {"rigidity", "samples", "40", "geometric samples"},
    {"rigidity", "side", "-1", "-1 below the EP, +1 above"},
    {"rigidity", "model", "dice", "dice or pt-dimer"},

    {"phase-diagram", "k", "M", "momentum"},
    {"phase-diagram", "delta_lo", "0", ""},
    {"phase-diagram", "delta_hi", "2", ""},
    {"phase-diagram", "mass_lo", "0", "m/t2 (or m with absolute_mass)"},
    {"phase-diagram", "mass_hi", "10", ""},
    {"phase-diagram", "res_delta", "101", ""},
    {"phase-diagram", "res_mass", "101", ""},
    {"phase-diagram", "absolute_mass", "false", "mass axis in energy units"},
    {"phase-diagram", "svg", "true", "also write an SVG heatmap"},

    {"chern", "grid", "24", "BZ mesh size"},

    {"ribbon-bands", "ny", "12", "rows (open in y)"},
    {"ribbon-bands", "nk", "101", "k samples in [-1/2, 1/2]"},
    {"ribbon-bands", "critical_delta", "false", "also scan the 5% edge-state criterion"},
    {"ribbon-bands", "edge_nk", "4", "twist momenta of the edge-state cylinder"},
    {"ribbon-bands", "tol", "5e-3", "dissipation-free tolerance on |Im E|"},
    {"ribbon-bands", "delta_step", "0.05", ""},
    {"ribbon-bands", "delta_max", "2", ""},

    {"ldos", "nx", "24", "columns"},
    {"ldos", "ny", "12", "rows"},
    {"ldos", "bc_x", "open", "open or periodic"},
    {"ldos", "bc_y", "open", "open or periodic"},
    {"ldos", "region", "bulk", "bulk, edges_only or none"},
    {"ldos", "disorder", "0", "disorder strength"},
    {"ldos", "disorder_kind", "complex", "real, imaginary or complex"},
    {"ldos", "x_edge", "5", "edge width in x positions"},
    {"ldos", "export_hamiltonian", "false", "also write the Hamiltonian as COO text"},

    {"ipr-sweep", "nx", "24", ""},
    {"ipr-sweep", "ny", "6", ""},
    {"ipr-sweep", "strengths", "0,1,10", "disorder strengths"},
    {"ipr-sweep", "realizations", "100", ""},
    {"ipr-sweep", "disorder_kind", "complex", ""},
    {"ipr-sweep", "region", "bulk", ""},
    {"ipr-sweep", "x_edge", "5", ""},

    {"spectral-area", "cells", "12", "torus size in cells per direction"},
    {"spectral-area", "twists", "8", "twist angles per direction"},
    {"spectral-area", "resolution", "512", "raster size"},
    {"spectral-area", "min_pixels", "16", "core pixels needed for a nonzero area"},

    {"winding", "geometry", "pbc_y_obc_x", "pbc_y_obc_x or pbc_x_obc_y"},
    {"winding", "nk", "400", "momentum samples"},
    {"winding", "n_open", "8", "size of the open direction"},
    {"winding", "e_ref", "", "re:im; empty scans references inside spectral loops"},

    {"disorder-sweep", "nx", "24", ""},
    {"disorder-sweep", "ny", "6", ""},
    {"disorder-sweep", "bc_x", "open", ""},
    {"disorder-sweep", "bc_y", "open", ""},
    {"disorder-sweep", "disorder", "1", ""},
    {"disorder-sweep", "disorder_kind", "complex", ""},
    {"disorder-sweep", "realizations", "100", ""},
    {"disorder-sweep", "region", "bulk", ""},
    {"disorder-sweep", "x_edge", "5", ""},
};
// clang-format on

std::string trim(std::string_view s)
{
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        out.push_back(trim(cur));
    return out;
}

double plain_number(const std::string& s, const std::string& key)
{
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size() && std::isfinite(v))
            return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "': cannot parse '" + s + "' as a number");
}

// Number with optional "t" suffix (times hopping) or pi forms: pi, pi/2, 2pi/3, 0.5pi.
double parse_real(std::string s, const std::string& key, double t = 1.0)
{
    s = trim(s);
    if (s.empty())
        throw ConfigError("key '" + key + "' is empty");
    double scale = 1.0;
    if (s.back() == 't') {
        scale = t;
        s.pop_back();
    }
    const auto p = s.find("pi");
    if (p == std::string::npos)
        return scale * plain_number(s, key);
    std::string pre = trim(s.substr(0, p));
    std::string post = trim(s.substr(p + 2));
    double v = M_PI;
    if (!pre.empty()) {
        if (pre == "-")
            v = -v;
        else
            v *= plain_number(pre.back() == '*' ? pre.substr(0, pre.size() - 1) : pre, key);
    }
    if (!post.empty()) {
        if (post[0] != '/')
            throw ConfigError("key '" + key + "': cannot parse '" + s + "'");
        v /= plain_number(post.substr(1), key);
    }
    return scale * v;
}

long long parse_int(const std::string& s, const std::string& key)
{
    try {
        size_t pos = 0;
        const long long v = std::stoll(trim(s), &pos);
        if (pos == trim(s).size())
            return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "': cannot parse '" + s + "' as an integer");
}

bool parse_bool(const std::string& s, const std::string& key)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        return true;
    if (s == "false" || s == "0" || s == "no" || s == "off")
        return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
}

MomentumPoint parse_point(const std::string& s, const std::string& key)
{
    if (s == "G" || s == "Gamma")
        return hs::Gamma;
    if (s == "K")
        return hs::K;
    if (s == "K'" || s == "Kp")
        return hs::Kp;
    if (s == "M")
        return hs::M;
    auto parts = split(s, ':');
    if (parts.size() == 1)
        return {parse_real(parts[0], key), 0.0};
    if (parts.size() == 2)
        return {parse_real(parts[0], key), parse_real(parts[1], key)};
    throw ConfigError("key '" + key + "': bad momentum '" + s + "'");
}

cplx parse_complex(const std::string& s, const std::string& key)
{
    auto parts = split(s, ':');
    if (parts.size() == 1)
        return {parse_real(parts[0], key), 0.0};
    if (parts.size() == 2)
        return {parse_real(parts[0], key), parse_real(parts[1], key)};
    throw ConfigError("key '" + key + "': bad complex value '" + s + "'");
}

class Settings {
public:
    explicit Settings(std::map<std::string, std::string> v) : v_(std::move(v)) {}

    const std::string& str(const std::string& k) const { return v_.at(k); }
    double real(const std::string& k, double t = 1.0) const { return parse_real(str(k), k, t); }
    int integer(const std::string& k, long long lo = 0) const
    {
        const long long v = parse_int(str(k), k);
        if (v < lo)
            throw ConfigError("key '" + k + "' must be >= " + std::to_string(lo));
        return static_cast<int>(v);
    }
    bool flag(const std::string& k) const { return parse_bool(str(k), k); }
    MomentumPoint point(const std::string& k) const { return parse_point(str(k), k); }
    std::string choice(const std::string& k, std::initializer_list<const char*> allowed) const
    {
        for (const char* a : allowed)
            if (str(k) == a)
                return str(k);
        throw ConfigError("key '" + k + "': unsupported value '" + str(k) + "'");
    }

    ModelParams params() const
    {
        ModelParams p;
        p.t = real("t");
        if (!(p.t > 0))
            throw ConfigError("t must be positive");
        p.t2 = real("t2", p.t);
        p.phi = real("phi");
        p.m = real("m", p.t);
        p.delta = real("delta", p.t);
        p.gamma = real("gamma", p.t);
        return p;
    }

private:
    std::map<std::string, std::string> v_;
};

struct Output {
    std::string ext;
    std::string data;
};

std::string to_csv(const std::function<void(std::ostream&)>& w)
{
    std::ostringstream os;
    w(os);
    return os.str();
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

Boundary parse_bc(const Settings& s, const std::string& k)
{
    return s.choice(k, {"open", "periodic"}) == "open" ? Boundary::open : Boundary::periodic;
}

NonreciprocityRegion parse_region(const Settings& s)
{
    const auto r = s.choice("region", {"bulk", "edges_only", "none"});
    return r == "bulk" ? NonreciprocityRegion::bulk
           : r == "edges_only" ? NonreciprocityRegion::edges_only
                               : NonreciprocityRegion::none;
}

DisorderKind parse_kind(const Settings& s)
{
    const auto r = s.choice("disorder_kind", {"real", "imaginary", "complex"});
    return r == "real" ? DisorderKind::real : r == "imaginary" ? DisorderKind::imaginary : DisorderKind::complex;
}

ParamKind parse_param(const Settings& s)
{
    return s.choice("param", {"delta", "gamma"}) == "delta" ? ParamKind::delta : ParamKind::gamma;
}

json cplx_list(const std::vector<cplx>& v)
{
    json a = json::array();
    for (const auto& z : v)
        a.push_back({z.real(), z.imag()});
    return a;
}

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<Output> cmd_bands(const Settings& s)
{
    const ModelParams p = s.params();
    KPath path;
    path.samples_per_segment = s.integer("samples", 1);
    for (const auto& v : split(s.str("path"), ','))
        path.vertices.push_back(parse_point(v, "path"));
    if (path.vertices.size() < 2)
        throw ConfigError("path needs at least two vertices");
    const auto rows = bands_on_path(p, path);
    double pt_max = 0.0;
    int complex_samples = 0;
    for (const auto& r : rows) {
        pt_max = std::max(pt_max, pt_commutator_norm(p, {r.kx, r.ky}));
        if (std::any_of(r.E.begin(), r.E.end(), [](const cplx& e) { return std::abs(e.imag()) > 1e-9; }))
            ++complex_samples;
    }
    json j{{"samples", rows.size()}, {"pt_commutator_max", pt_max}, {"samples_with_complex_energy", complex_samples}};
    return {{"csv", to_csv([&](std::ostream& os) { write_bands_csv(os, rows); })}, {"json", dump(j)}};
}

std::vector<Output> cmd_ep_scan(const Settings& s)
{
    const ModelParams p = s.params();
    const MomentumPoint k = s.point("k");
    const ParamKind kind = parse_param(s);
    const int steps = s.integer("steps", 2);
    const double lo = s.real("lo"), hi = s.real("hi");
    if (!(hi > lo))
        throw ConfigError("hi must exceed lo");
    std::vector<double> values(steps);
    for (int i = 0; i < steps; ++i)
        values[i] = lo + (hi - lo) * i / (steps - 1);
    json j = to_json(rigidity_scan(p, k, kind, values, s.integer("threads")));
    if (!s.str("kx_lo").empty() || !s.str("kx_hi").empty()) {
        const EPLocation loc = locate_ep_on_kx_axis(p, kind, {s.real("kx_lo"), s.real("kx_hi")}, {lo, hi});
        j["kx_axis_search"] = {{"kx", loc.kx}, {"value", loc.value}, {"order", loc.order},
                               {"min_rigidity", loc.min_rigidity}};
    }
    return {{"json", dump(j)}};
}

std::vector<Output> cmd_rigidity(const Settings& s)
{
    FitWindow w{s.real("window_lo"), s.real("window_hi")};
    const int n = s.integer("samples", 3);
    const int side = s.integer("side", -1) < 0 ? -1 : 1;
    const double ep = s.real("ep");
    ScalingFit fit;
    if (s.choice("model", {"dice", "pt-dimer"}) == "pt-dimer") {
        MatrixFamily dimer = [](double d) {
            MatX H(2, 2);
            H << cplx(0, d), 1.0, 1.0, cplx(0, -d);
            return H;
        };
        fit = rigidity_scaling_fit(dimer, ep, w, n, side);
    } else {
        fit = rigidity_scaling_fit(s.params(), s.point("k"), parse_param(s), ep, w, n, side);
    }
    json j{{"slope", fit.slope}, {"stderr", fit.stderr_slope}, {"order", fit.order},
           {"offsets", fit.offsets}, {"rigidity", fit.rigidity}};
    return {{"json", dump(j)}};
}

std::vector<Output> cmd_phase_diagram(const Settings& s)
{
    const ModelParams p = s.params();
    PhaseDiagramOptions opt;
    opt.t = p.t;
    opt.absolute_mass = s.flag("absolute_mass");
    opt.threads = s.integer("threads");
    const auto g = ep_phase_diagram(s.point("k"), {s.real("delta_lo"), s.real("delta_hi")},
                                    {s.real("mass_lo"), s.real("mass_hi")}, p.t2, p.phi,
                                    {s.integer("res_delta", 2), s.integer("res_mass", 2)}, opt);
    std::vector<Output> out{{"csv", to_csv([&](std::ostream& os) { write_phase_csv(os, g); })}};
    if (s.flag("svg"))
        out.push_back({"svg", to_csv([&](std::ostream& os) { write_phase_svg(os, g); })});
    return out;
}

std::vector<Output> cmd_chern(const Settings& s)
{
    const ModelParams p = s.params();
    const HermitianPhase ph = classify_gap(p, s.integer("grid", 2));
    json j{{"gap_class", to_string(ph.gap_class)}, {"in_topological_region", ph.in_topological_region}};
    j["chern_numbers"] = ph.chern_defined ? json(ph.chern_numbers) : json(nullptr);
    j["band_ranges"] = json::array();
    for (const auto& r : ph.band_ranges)
        j["band_ranges"].push_back({r.first, r.second});
    if (p.t2 > 0) {
        try {
            const double ms = critical_mass(p.t2, p.phi, p.t);
            j["critical_mass"] = {{"absolute", ms}, {"in_units_of_t2", ms / p.t2}};
        } catch (const NoClosure& e) {
            j["critical_mass"] = e.what();
        }
    }
    return {{"json", dump(j)}};
}

std::vector<Output> cmd_ribbon_bands(const Settings& s)
{
    const ModelParams p = s.params();
    const int threads = s.integer("threads");
    const auto b = ribbon_bands_kx(p, s.integer("ny", 2), s.integer("nk", 2), threads);
    std::vector<Output> out{{"csv", to_csv([&](std::ostream& os) { write_ribbon_bands_csv(os, b); })}};
    if (s.flag("critical_delta")) {
        const auto scan = edge_state_critical_delta(p, s.integer("ny", 2), s.integer("edge_nk", 1), s.real("tol"),
                                                    s.real("delta_step"), s.real("delta_max"), 0.05, threads);
        out.push_back({"json", dump(json{{"delta", scan.delta},
                                         {"fraction", scan.fraction},
                                         {"delta_c", scan.delta_c},
                                         {"sites", 3 * 2 * s.integer("edge_nk", 1) * s.integer("ny", 2)}})});
    }
    return out;
}

std::vector<Output> cmd_ldos(const Settings& s)
{
    const ModelParams p = s.params();
    const auto g = make_geometry(s.integer("nx", 1), s.integer("ny", 1), parse_bc(s, "bc_x"), parse_bc(s, "bc_y"));
    std::optional<DisorderSpec> dis;
    if (s.real("disorder") > 0)
        dis = DisorderSpec{s.real("disorder"), parse_kind(s), static_cast<std::uint64_t>(parse_int(s.str("seed"), "seed"))};
    const auto H = build_ribbon(g, p, dis, parse_region(s));
    const auto d = diagnose(H, g, s.integer("x_edge"));
    std::vector<Output> out{{"csv", to_csv([&](std::ostream& os) { write_state_csv(os, d); })},
                            {"csv", to_csv([&](std::ostream& os) { write_site_csv(os, d, g); })},
                            {"json", dump(geometry_json(g))}};
    if (s.flag("export_hamiltonian"))
        out.push_back({"coo", to_csv([&](std::ostream& os) { H.write_coo(os); })});
    return out;
}

std::vector<Output> cmd_ipr_sweep(const Settings& s)
{
    const ModelParams p = s.params();
    const auto g = make_geometry(s.integer("nx", 1), s.integer("ny", 1), Boundary::open, Boundary::open);
    const auto seed = static_cast<std::uint64_t>(parse_int(s.str("seed"), "seed"));
    std::ostringstream summary, states;
    summary << "strength,mean_edge_prob,median_ipr,median_ipr_edge_prob_below_half\n";
    states << "strength,state,reE,imE,ipr,edge_prob\n";
    for (const auto& item : split(s.str("strengths"), ',')) {
        const double D = parse_real(item, "strengths");
        const auto r = disorder_sweep(g, p, {D, parse_kind(s), seed}, s.integer("realizations", 1), parse_region(s),
                                      s.integer("x_edge"), s.integer("threads"));
        double ep = 0;
        std::vector<double> bulk;
        for (size_t i = 0; i < r.pooled_edge_prob.size(); ++i) {
            ep += r.pooled_edge_prob[i];
            if (r.pooled_edge_prob[i] < 0.5)
                bulk.push_back(r.pooled_ipr[i]);
        }
        summary << fmt(D) << ',' << fmt(ep / r.pooled_edge_prob.size()) << ',' << fmt(median(r.pooled_ipr)) << ','
                << fmt(median(bulk)) << '\n';
        for (size_t a = 0; a < r.mean.ipr.size(); ++a)
            states << fmt(D) << ',' << a << ',' << fmt(r.mean.energies[a].real()) << ','
                   << fmt(r.mean.energies[a].imag()) << ',' << fmt(r.mean.ipr[a]) << ',' << fmt(r.mean.edge_prob[a])
                   << '\n';
    }
    return {{"csv", summary.str()}, {"csv", states.str()}};
}

std::vector<Output> cmd_spectral_area(const Settings& s)
{
    const ModelParams p = s.params();
    const int cells = s.integer("cells", 2);
    if (cells % 2)
        throw ConfigError("cells must be even");
    const auto E = torus_spectrum(p, cells, cells, s.integer("twists", 1), s.integer("threads"));
    const int res = s.integer("resolution", 32);
    const int minpix = s.integer("min_pixels", 1);
    const auto a = spectral_area(E, res, minpix);
    json j{{"area", a.area},
           {"nonzero", a.area > 0},
           {"occupied_pixels", a.occupied_pixels},
           {"closed_pixels", a.closed_pixels},
           {"core_pixels", a.core_pixels},
           {"resolution", a.resolution},
           {"closing_radius", a.closing_radius},
           {"window", {a.re_min, a.re_max, a.im_min, a.im_max}},
           {"area_drift_on_doubling", spectral_area_drift(E, res, minpix)},
           {"n_energies", E.size()}};
    return {{"json", dump(j)}};
}

std::vector<Output> cmd_winding(const Settings& s)
{
    const ModelParams p = s.params();
    const auto geo = s.choice("geometry", {"pbc_y_obc_x", "pbc_x_obc_y"}) == "pbc_y_obc_x"
                         ? WindingGeometry::pbc_y_obc_x
                         : WindingGeometry::pbc_x_obc_y;
    WindingOptions opt;
    opt.n_open = s.integer("n_open", 1);
    const int nk = s.integer("nk", 4);
    json j;
    if (!s.str("e_ref").empty()) {
        const cplx e = parse_complex(s.str("e_ref"), "e_ref");
        j = {{"e_ref", {e.real(), e.imag()}}, {"winding", spectral_winding(p, geo, e, nk, opt)}};
    } else {
        const auto w = loop_winding(p, geo, nk, opt);
        j = {{"W", w.max_abs_winding}, {"references", cplx_list(w.references)}, {"windings", w.windings}};
    }
    return {{"json", dump(j)}};
}

std::vector<Output> cmd_disorder_sweep(const Settings& s)
{
    const ModelParams p = s.params();
    const auto g = make_geometry(s.integer("nx", 1), s.integer("ny", 1), parse_bc(s, "bc_x"), parse_bc(s, "bc_y"));
    const DisorderSpec d{s.real("disorder"), parse_kind(s), static_cast<std::uint64_t>(parse_int(s.str("seed"), "seed"))};
    const auto r = disorder_sweep(g, p, d, s.integer("realizations", 1), parse_region(s), s.integer("x_edge"),
                                  s.integer("threads"));
    return {{"csv", to_csv([&](std::ostream& os) { write_state_csv(os, r.mean); })},
            {"csv", to_csv([&](std::ostream& os) { write_site_csv(os, r.mean, g); })}};
}

using Handler = std::vector<Output> (*)(const Settings&);

const std::map<std::string, Handler>& handlers()
{
    static const std::map<std::string, Handler> h = {
        {"bands", cmd_bands},
        {"ep-scan", cmd_ep_scan},
        {"rigidity", cmd_rigidity},
        {"phase-diagram", cmd_phase_diagram},
        {"chern", cmd_chern},
        {"ribbon-bands", cmd_ribbon_bands},
        {"ldos", cmd_ldos},
        {"ipr-sweep", cmd_ipr_sweep},
        {"spectral-area", cmd_spectral_area},
        {"winding", cmd_winding},
        {"disorder-sweep", cmd_disorder_sweep},
    };
    return h;
}

std::set<std::string> all_keys()
{
    std::set<std::string> k;
    for (const auto& s : kSchema)
        k.insert(s.key);
    return k;
}

}  // namespace

const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c = {"bands", "ep-scan", "rigidity", "phase-diagram", "chern", "ribbon-bands",
                                               "ldos", "ipr-sweep", "spectral-area", "winding", "disorder-sweep"};
    return c;
}

RunConfig parse_config_text(std::string_view text)
{
    RunConfig cfg;
    std::istringstream is{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos)
            line.erase(h);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (key == "command")
            cfg.command = val;
        else if (!cfg.values.emplace(key, val).second)
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return cfg;
}

std::string serialize(const RunConfig& cfg)
{
    std::string out = "command = " + cfg.command + "\n";
    for (const auto& [k, v] : cfg.values)
        out += k + " = " + v + "\n";
    return out;
}

void validate(const RunConfig& cfg)
{
    if (cfg.command.empty())
        throw ConfigError("no command given");
    if (!handlers().count(cfg.command))
        throw ConfigError("unknown command '" + cfg.command + "'");
    for (const auto& [k, v] : cfg.values) {
        bool ok = false;
        for (const auto& s : kSchema)
            if (k == s.key && (std::string(s.command) == "*" || cfg.command == s.command))
                ok = true;
        if (!ok)
            throw ConfigError("key '" + k + "' is not accepted by command '" + cfg.command + "'");
    }
}

std::map<std::string, std::string> resolved(const RunConfig& cfg)
{
    validate(cfg);
    std::map<std::string, std::string> r;
    for (const auto& s : kSchema)
        if (std::string(s.command) == "*" || cfg.command == s.command)
            r[s.key] = s.value;
    for (const auto& [k, v] : cfg.values)
        r[k] = v;
    return r;
}

std::string usage()
{
    std::ostringstream os;
    os << "usage: dicehaldane <command> [--config FILE] [--key value ...]\n\ncommands:";
    for (const auto& c : commands())
        os << ' ' << c;
    os << "\n\nkeys (command: key [default]):\n";
    for (const auto& s : kSchema) {
        os << "  " << s.command << ": " << s.key << " [" << s.value << "]";
        if (*s.help)
            os << "  " << s.help;
        os << '\n';
    }
    os << "\nDICE_THREADS sets the default thread count. Exit codes: 0 ok, 2 config error, 3 numerical failure.\n";
    return os.str();
}

std::vector<std::string> run(const RunConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto values = resolved(cfg);
    const Settings s(values);
    set_default_threads(s.integer("threads"));
    const std::vector<Output> outs = handlers().at(cfg.command)(s);

    const std::filesystem::path dir = values.at("output_dir");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output_dir '" + dir.string() + "': " + ec.message());
    std::vector<std::string> files;
    for (const auto& o : outs) {
        const auto path = dir / (cfg.command + "-" + hex64(fnv1a64(o.data)) + "." + o.ext);
        write_text_file(path.string(), o.data);
        files.push_back(path.string());
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m{{"command", cfg.command}, {"config", values}, {"version", DICE_VERSION}, {"wall_time_seconds", wall}};
    m["outputs"] = json::array();
    for (const auto& f : files)
        m["outputs"].push_back(std::filesystem::path(f).filename().string());
    write_text_file((dir / "manifest.json").string(), dump(m));
    return files;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    if (argc <= 1) {
        err << usage();
        return 2;
    }
    CLI::App app{"dice-Haldane non-Hermitian lattice toolkit"};
    std::string command, config_file;
    app.add_option("command", command, "command to run");
    app.add_option("-c,--config", config_file, "key = value run file");
    std::map<std::string, std::string> flags;
    for (const auto& k : all_keys())
        app.add_option("--" + k, flags[k]);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << usage();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\nrun without arguments for usage\n";
        return 2;
    }
    try {
        RunConfig cfg;
        if (!config_file.empty()) {
            std::ifstream f(config_file);
            if (!f)
                throw ConfigError("cannot read config file '" + config_file + "'");
            std::stringstream ss;
            ss << f.rdbuf();
            cfg = parse_config_text(ss.str());
        }
        if (!command.empty())
            cfg.command = command;
        for (const auto& k : all_keys())
            if (app.count("--" + k))
                cfg.values[k] = flags[k];
        if (cfg.command.empty()) {
            err << usage();
            return 2;
        }
        for (const auto& f : run(cfg))
            out << f << '\n';
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace dice::cli
