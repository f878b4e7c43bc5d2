#include "dice/ribbon.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include "dice/errors.hpp"
#include "dice/io.hpp"

namespace dice {

namespace {

int floor_div(int a, int b)
{
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

const char* sub_name(int s)
{
    return s == SubA ? "A" : s == SubB ? "B" : "C";
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<double> uniform_thetas(int n)
{
    std::vector<double> th(n);
    for (int q = 0; q < n; ++q)
        th[q] = 2.0 * M_PI * q / n;
    return th;
}

struct CylinderSpectrum {
    std::vector<cplx> energies;
    std::vector<double> bottom_weight;
    std::vector<double> top_weight;
};

CylinderSpectrum cylinder_spectrum(const ModelParams& p, int ny, const std::vector<double>& thetas,
                                   int edge_width, int threads)
{
    RibbonGeometry g = make_geometry(2, ny, Boundary::periodic, Boundary::open);
    const int n = g.size();
    const int nk = static_cast<int>(thetas.size());
    std::vector<EigResult> res(nk);
    parallel_for(nk, threads, [&](int q) {
        res[q] = eig(build_ribbon_twisted(g, p, std::nullopt, NonreciprocityRegion::bulk, thetas[q], 0.0).dense());
    });
    CylinderSpectrum out;
    for (int q = 0; q < nk; ++q)
        for (int a = 0; a < n; ++a) {
            double wb = 0, wt = 0;
            for (int s = 0; s < n; ++s) {
                const double w = std::norm(res[q].vectors(s, a));
                if (g.site_table[s].y_index < edge_width)
                    wb += w;
                if (g.site_table[s].y_index >= g.n_y_positions - edge_width)
                    wt += w;
            }
            out.energies.push_back(res[q].values[a]);
            out.bottom_weight.push_back(wb);
            out.top_weight.push_back(wt);
        }
    return out;
}

EdgeStateStats count_edge_states(const CylinderSpectrum& cs, double window, double dissipation_tol,
                                 const EdgeStateOptions& opt)
{
    EdgeStateStats st;
    st.window = window;
    for (size_t a = 0; a < cs.energies.size(); ++a) {
        const double re = std::abs(cs.energies[a].real());
        if (!(re > opt.flat_band_cutoff && re < window))
            continue;
        if (!(cs.bottom_weight[a] > opt.edge_weight || cs.top_weight[a] > opt.edge_weight))
            continue;
        ++st.n_edge_states;
        if (std::abs(cs.energies[a].imag()) < dissipation_tol)
            ++st.n_dissipation_free;
    }
    return st;
}

}  // namespace

RibbonGeometry make_geometry(int nx, int ny, Boundary bc_x, Boundary bc_y)
{
    if (nx < 1 || ny < 1)
        throw GeometryError("nx and ny must be positive");
    RibbonGeometry g;
    g.nx = nx;
    g.ny = ny;
    g.bc_x = bc_x;
    g.bc_y = bc_y;
    const double half_d = 0.5 / std::sqrt(3.0);
    const int off[3] = {-2, 0, 2};
    g.site_table.resize(3 * nx * ny);
    // Integer position keys: x in units of d/2, y in units of 1/2.
    std::vector<int> xkey(g.site_table.size()), ykey(g.site_table.size());
    for (int c = 0; c < nx; ++c)
        for (int i = 0; i < ny; ++i)
            for (int s = 0; s < 3; ++s) {
                const int id = RibbonGeometry::site_id(c, i, s, ny);
                xkey[id] = 3 * c + off[s];
                ykey[id] = 2 * i + c % 2;
                g.site_table[id] = {id, s, xkey[id] * half_d, 0.5 * ykey[id], c, i, 0, 0};
            }
    auto ranks = [](const std::vector<int>& key, int& count) {
        std::vector<int> u = key;
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        count = static_cast<int>(u.size());
        std::vector<int> r(key.size());
        for (size_t j = 0; j < key.size(); ++j)
            r[j] = static_cast<int>(std::lower_bound(u.begin(), u.end(), key[j]) - u.begin());
        return r;
    };
    const auto xr = ranks(xkey, g.n_x_positions);
    const auto yr = ranks(ykey, g.n_y_positions);
    for (size_t j = 0; j < g.site_table.size(); ++j) {
        g.site_table[j].x_index = xr[j];
        g.site_table[j].y_index = yr[j];
    }
    validate(g);
    return g;
}

void validate(const RibbonGeometry& g)
{
    if (g.nx < 1 || g.ny < 1)
        throw GeometryError("nx and ny must be positive");
    if (g.bc_x == Boundary::periodic && g.nx % 2 != 0)
        throw GeometryError("periodic x needs an even number of columns");
    if (g.size() != 3 * g.nx * g.ny)
        throw GeometryError("site table has " + std::to_string(g.size()) + " entries, expected " +
                            std::to_string(3 * g.nx * g.ny));
    for (int id = 0; id < g.size(); ++id) {
        const Site& s = g.site_table[id];
        if (s.id != id || s.col < 0 || s.col >= g.nx || s.row < 0 || s.row >= g.ny ||
            RibbonGeometry::site_id(s.col, s.row, s.sublattice, g.ny) != id)
            throw GeometryError("inconsistent site table entry " + std::to_string(id));
        if (s.x_index < 0 || s.x_index >= g.n_x_positions || s.y_index < 0 || s.y_index >= g.n_y_positions)
            throw GeometryError("position index out of range at site " + std::to_string(id));
    }
}

nlohmann::json geometry_json(const RibbonGeometry& g)
{
    nlohmann::json j;
    j["nx"] = g.nx;
    j["ny"] = g.ny;
    j["bc_x"] = g.bc_x == Boundary::open ? "open" : "periodic";
    j["bc_y"] = g.bc_y == Boundary::open ? "open" : "periodic";
    j["sites"] = nlohmann::json::array();
    for (const auto& s : g.site_table)
        j["sites"].push_back({{"id", s.id}, {"sublattice", sub_name(s.sublattice)}, {"x", s.x}, {"y", s.y}});
    return j;
}

std::uint64_t realization_seed(std::uint64_t base, std::uint64_t i)
{
    return splitmix64(splitmix64(base) + i);
}

std::vector<cplx> disorder_potential(int n, const DisorderSpec& dis)
{
    if (!(dis.strength >= 0))
        throw std::invalid_argument("disorder strength must be >= 0");
    std::mt19937_64 rng(dis.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> v(n);
    for (int j = 0; j < n; ++j) {
        double wr = 0, wi = 0;
        if (dis.kind == DisorderKind::real || dis.kind == DisorderKind::complex)
            wr = u(rng);
        if (dis.kind == DisorderKind::imaginary || dis.kind == DisorderKind::complex)
            wi = u(rng);
        v[j] = dis.strength * cplx(wr, wi);
    }
    return v;
}

MatX RealSpaceHamiltonian::dense() const
{
    MatX H = MatX::Zero(dimension, dimension);
    for (const auto& e : entries)
        H(e.row, e.col) += e.value;
    return H;
}

void RealSpaceHamiltonian::write_coo(std::ostream& os) const
{
    for (const auto& e : entries)
        os << e.row << ' ' << e.col << ' ' << fmt(e.value.real()) << ' ' << fmt(e.value.imag()) << '\n';
}

RealSpaceHamiltonian build_ribbon(const RibbonGeometry& geom, const ModelParams& p,
                                  const std::optional<DisorderSpec>& dis, NonreciprocityRegion region)
{
    return build_ribbon_twisted(geom, p, dis, region, 0.0, 0.0);
}

RealSpaceHamiltonian build_ribbon_twisted(const RibbonGeometry& geom, const ModelParams& p,
                                          const std::optional<DisorderSpec>& dis,
                                          NonreciprocityRegion region, double twist_x, double twist_y)
{
    validate(geom);
    if (region == NonreciprocityRegion::none && p.gamma != 0.0)
        throw std::invalid_argument("gamma must be 0 when the non-reciprocity region is none");
    const int nx = geom.nx, ny = geom.ny;
    const bool px = geom.bc_x == Boundary::periodic, py = geom.bc_y == Boundary::periodic;
    const std::vector<Hop> hops = hopping_list(p);

    std::map<std::pair<int, int>, cplx> acc;
    for (int c = 0; c < nx; ++c)
        for (int i = 0; i < ny; ++i) {
            const int n1 = i + (c + 1) / 2, n2 = -c;
            for (const Hop& h : hops) {
                const int m1 = n1 + h.n1, m2 = n2 + h.n2;
                int cc = -m2;
                int ii = m1 - floor_div(cc + 1, 2);
                cplx phase = 1.0;
                if (cc < 0 || cc >= nx) {
                    if (!px)
                        continue;
                    const int w = floor_div(cc, nx);
                    cc -= w * nx;
                    ii = m1 - floor_div(cc + 1, 2) - w * (nx / 2);
                    phase *= std::polar(1.0, twist_x * w);
                }
                if (ii < 0 || ii >= ny) {
                    if (!py)
                        continue;
                    const int w = floor_div(ii, ny);
                    ii -= w * ny;
                    phase *= std::polar(1.0, twist_y * w);
                }
                acc[{RibbonGeometry::site_id(cc, ii, h.to, ny), RibbonGeometry::site_id(c, i, h.from, ny)}] +=
                    h.amp * phase;
            }
            const bool in_region = region == NonreciprocityRegion::bulk ||
                                   (region == NonreciprocityRegion::edges_only && (i == 0 || i == ny - 1));
            if (p.gamma != 0.0 && in_region) {
                const int a = RibbonGeometry::site_id(c, i, SubA, ny);
                const int b = RibbonGeometry::site_id(c, i, SubB, ny);
                const int s = RibbonGeometry::site_id(c, i, SubC, ny);
                acc[{a, b}] += p.gamma;
                acc[{b, a}] -= p.gamma;
                acc[{b, s}] += p.gamma;
                acc[{s, b}] -= p.gamma;
            }
        }
    if (dis && dis->strength > 0) {
        const auto v = disorder_potential(geom.size(), *dis);
        for (int j = 0; j < geom.size(); ++j)
            acc[{j, j}] += v[j];
    }
    RealSpaceHamiltonian H;
    H.dimension = geom.size();
    H.entries.reserve(acc.size());
    for (const auto& [key, val] : acc)
        if (val != cplx(0.0))
            H.entries.push_back({key.first, key.second, val});
    return H;
}

std::vector<cplx> torus_spectrum(const ModelParams& p, int nx, int ny, int n_twist, int threads)
{
    RibbonGeometry g = make_geometry(nx, ny, Boundary::periodic, Boundary::periodic);
    const int nt = n_twist * n_twist;
    std::vector<std::vector<cplx>> parts(nt);
    parallel_for(nt, threads, [&](int q) {
        const double tx = 2.0 * M_PI * (q / n_twist) / n_twist;
        const double ty = 2.0 * M_PI * (q % n_twist) / n_twist;
        parts[q] = eigvals(build_ribbon_twisted(g, p, std::nullopt, NonreciprocityRegion::bulk, tx, ty).dense());
    });
    std::vector<cplx> all;
    for (auto& v : parts)
        all.insert(all.end(), v.begin(), v.end());
    return all;
}

RibbonBands ribbon_bands_kx(const ModelParams& p, int ny, int n_k, int threads)
{
    if (ny < 2 || n_k < 2)
        throw std::invalid_argument("ribbon_bands_kx needs ny >= 2 and n_k >= 2");
    RibbonGeometry g = make_geometry(2, ny, Boundary::periodic, Boundary::open);
    RibbonBands b;
    b.ny = ny;
    b.k.resize(n_k);
    b.energies.resize(n_k);
    parallel_for(n_k, threads, [&](int q) {
        const double k = -0.5 + double(q) / (n_k - 1);
        b.k[q] = k;
        auto e = eigvals(build_ribbon_twisted(g, p, std::nullopt, NonreciprocityRegion::bulk, 2.0 * M_PI * k, 0.0).dense());
        std::sort(e.begin(), e.end(), less_re_im);
        b.energies[q] = std::move(e);
    });
    return b;
}

void write_ribbon_bands_csv(std::ostream& os, const RibbonBands& b)
{
    os << "k,index,reE,imE\n";
    for (size_t q = 0; q < b.k.size(); ++q)
        for (size_t a = 0; a < b.energies[q].size(); ++a)
            os << fmt(b.k[q]) << ',' << a << ',' << fmt(b.energies[q][a].real()) << ','
               << fmt(b.energies[q][a].imag()) << '\n';
}

double hermitian_bulk_gap(const ModelParams& p, int grid_n)
{
    ModelParams q = p;
    q.delta = q.gamma = 0.0;
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e300), hi = Eigen::Vector3d::Constant(-1e300);
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j) {
            es.compute(bloch_reduced(q, double(i) / grid_n, double(j) / grid_n), Eigen::EigenvaluesOnly);
            lo = lo.cwiseMin(es.eigenvalues());
            hi = hi.cwiseMax(es.eigenvalues());
        }
    return std::max(0.0, std::min(lo(1) - hi(0), lo(2) - hi(1)));
}

EdgeStateStats edge_state_stats(const ModelParams& p, int ny, int n_k, double dissipation_tol,
                                EdgeStateOptions opt, int threads)
{
    const double window = 0.5 * hermitian_bulk_gap(p);
    const auto th = uniform_thetas(n_k);
    ModelParams ref = p;
    ref.delta = ref.gamma = 0.0;
    if (count_edge_states(cylinder_spectrum(ref, ny, th, opt.edge_width, threads), window, dissipation_tol, opt)
            .n_edge_states == 0)
        throw NoEdgeStates("Hermitian reference has no in-gap edge states");
    return count_edge_states(cylinder_spectrum(p, ny, th, opt.edge_width, threads), window, dissipation_tol, opt);
}

double edge_state_fraction(const ModelParams& p, int ny, int n_k, double dissipation_tol, EdgeStateOptions opt,
                           int threads)
{
    return edge_state_stats(p, ny, n_k, dissipation_tol, opt, threads).fraction();
}

CriticalDeltaScan edge_state_critical_delta(const ModelParams& p, int ny, int n_k, double dissipation_tol,
                                            double step, double delta_max, double threshold, int threads)
{
    CriticalDeltaScan scan;
    EdgeStateOptions opt;
    const double window = 0.5 * hermitian_bulk_gap(p);
    const auto th = uniform_thetas(n_k);
    ModelParams q = p;
    q.delta = q.gamma = 0.0;
    if (count_edge_states(cylinder_spectrum(q, ny, th, opt.edge_width, threads), window, dissipation_tol, opt)
            .n_edge_states == 0)
        throw NoEdgeStates("Hermitian reference has no in-gap edge states");
    const int nsteps = static_cast<int>(std::floor(delta_max / step + 1e-9));
    for (int s = 1; s <= nsteps; ++s) {
        q.delta = s * step;
        const double f =
            count_edge_states(cylinder_spectrum(q, ny, th, opt.edge_width, threads), window, dissipation_tol, opt)
                .fraction();
        scan.delta.push_back(q.delta);
        scan.fraction.push_back(f);
        if (f < threshold)
            return scan;
        scan.delta_c = q.delta;
    }
    return scan;
}

}  // namespace dice
