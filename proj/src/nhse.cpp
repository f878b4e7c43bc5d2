#include "dice/nhse.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <stdexcept>

#include "dice/errors.hpp"
#include "dice/io.hpp"

namespace dice {

namespace {

struct Raster {
    int res = 0;
    double x0 = 0, y0 = 0, px = 0;
    std::vector<char> occ;

    char& at(int ix, int iy) { return occ[static_cast<size_t>(iy) * res + ix]; }
};

Raster rasterize(const std::vector<cplx>& e, int res, double pad)
{
    Raster r;
    r.res = res;
    double rmin = 1e300, rmax = -1e300, imin = 1e300, imax = -1e300;
    for (const auto& z : e) {
        rmin = std::min(rmin, z.real());
        rmax = std::max(rmax, z.real());
        imin = std::min(imin, z.imag());
        imax = std::max(imax, z.imag());
    }
    double side = std::max(rmax - rmin, imax - imin) * pad;
    if (!(side > 0))
        side = 1e-12;
    r.px = side / res;
    r.x0 = 0.5 * (rmin + rmax) - 0.5 * side;
    r.y0 = 0.5 * (imin + imax) - 0.5 * side;
    r.occ.assign(static_cast<size_t>(res) * res, 0);
    for (const auto& z : e) {
        const int ix = std::clamp(static_cast<int>(std::floor((z.real() - r.x0) / r.px)), 0, res - 1);
        const int iy = std::clamp(static_cast<int>(std::floor((z.imag() - r.y0) / r.px)), 0, res - 1);
        r.at(ix, iy) = 1;
    }
    return r;
}

std::vector<std::pair<int, int>> disk(int radius)
{
    std::vector<std::pair<int, int>> d;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius)
                d.emplace_back(dx, dy);
    return d;
}

std::vector<char> dilate(const std::vector<char>& in, int res, const std::vector<std::pair<int, int>>& se)
{
    std::vector<char> out(in.size(), 0);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            if (!in[static_cast<size_t>(y) * res + x])
                continue;
            for (auto [dx, dy] : se) {
                const int u = x + dx, v = y + dy;
                if (u >= 0 && u < res && v >= 0 && v < res)
                    out[static_cast<size_t>(v) * res + u] = 1;
            }
        }
    return out;
}

// Pixels outside the image count as empty.
std::vector<char> erode(const std::vector<char>& in, int res, const std::vector<std::pair<int, int>>& se)
{
    std::vector<char> out(in.size(), 0);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            if (!in[static_cast<size_t>(y) * res + x])
                continue;
            bool keep = true;
            for (auto [dx, dy] : se) {
                const int u = x + dx, v = y + dy;
                if (u < 0 || u >= res || v < 0 || v >= res || !in[static_cast<size_t>(v) * res + u]) {
                    keep = false;
                    break;
                }
            }
            out[static_cast<size_t>(y) * res + x] = keep;
        }
    return out;
}

// Set pixels plus every empty pixel not 4-connected to the border.
std::vector<char> fill_holes(const std::vector<char>& in, int res)
{
    std::vector<char> outside(in.size(), 0);
    std::deque<int> q;
    auto push = [&](int x, int y) {
        const size_t i = static_cast<size_t>(y) * res + x;
        if (!in[i] && !outside[i]) {
            outside[i] = 1;
            q.push_back(static_cast<int>(i));
        }
    };
    for (int i = 0; i < res; ++i) {
        push(i, 0);
        push(i, res - 1);
        push(0, i);
        push(res - 1, i);
    }
    while (!q.empty()) {
        const int i = q.front();
        q.pop_front();
        const int x = i % res, y = i / res;
        if (x > 0) push(x - 1, y);
        if (x + 1 < res) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < res) push(x, y + 1);
    }
    std::vector<char> out(in.size());
    for (size_t i = 0; i < in.size(); ++i)
        out[i] = !outside[i];
    return out;
}

long count(const std::vector<char>& v)
{
    return static_cast<long>(std::count(v.begin(), v.end(), 1));
}

MatX winding_hamiltonian(const ModelParams& p, WindingGeometry geometry, int n_open, double theta)
{
    if (geometry == WindingGeometry::pbc_y_obc_x) {
        static thread_local RibbonGeometry g;
        if (g.nx != n_open || g.ny != 1 || g.bc_y != Boundary::periodic)
            g = make_geometry(n_open, 1, Boundary::open, Boundary::periodic);
        return build_ribbon_twisted(g, p, std::nullopt, NonreciprocityRegion::bulk, 0.0, theta).dense();
    }
    static thread_local RibbonGeometry g;
    if (g.nx != 2 || g.ny != n_open || g.bc_x != Boundary::periodic)
        g = make_geometry(2, n_open, Boundary::periodic, Boundary::open);
    return build_ribbon_twisted(g, p, std::nullopt, NonreciprocityRegion::bulk, theta, 0.0).dense();
}

double det_arg(const MatX& H, cplx e)
{
    MatX M = H;
    M.diagonal().array() -= e;
    return log_det(M).arg;
}

// Accumulated phase of det along [a, b], subdividing where it jumps.
double phase_increment(const std::function<double(double)>& arg_at, double a, double b, double fa, double fb,
                       int depth)
{
    const double d = std::remainder(fb - fa, 2.0 * M_PI);
    if (std::abs(d) < 0.5 * M_PI || depth > 16)
        return d;
    const double m = 0.5 * (a + b);
    const double fm = arg_at(m);
    return phase_increment(arg_at, a, m, fa, fm, depth + 1) + phase_increment(arg_at, m, b, fm, fb, depth + 1);
}

}  // namespace

std::vector<double> ldos(const RealSpaceHamiltonian& H)
{
    const EigResult r = eig(H.dense());
    std::vector<double> out(H.dimension, 0.0);
    for (int a = 0; a < H.dimension; ++a)
        for (int i = 0; i < H.dimension; ++i)
            out[i] += std::norm(r.vectors(i, a));
    return out;
}

double ipr(const VecX& psi)
{
    double s2 = 0, s4 = 0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const double w = std::norm(psi(i));
        s2 += w;
        s4 += w * w;
    }
    if (!(s2 > 0))
        throw ZeroVector("ipr of a zero vector");
    return s4 / (s2 * s2);
}

double edge_probability(const VecX& psi, const RibbonGeometry& geom, int x_edge)
{
    if (psi.size() != geom.size())
        throw DimensionMismatch("vector has " + std::to_string(psi.size()) + " entries, geometry has " +
                                std::to_string(geom.size()) + " sites");
    double tot = 0, edge = 0;
    for (int i = 0; i < geom.size(); ++i) {
        const double w = std::norm(psi(i));
        tot += w;
        if (geom.site_table[i].x_index < x_edge)
            edge += w;
    }
    if (!(tot > 0))
        throw ZeroVector("edge probability of a zero vector");
    return edge / tot;
}

SkinDiagnostics diagnose(const RealSpaceHamiltonian& H, const RibbonGeometry& geom, int x_edge)
{
    if (H.dimension != geom.size())
        throw DimensionMismatch("Hamiltonian and geometry sizes differ");
    const EigResult r = eig(H.dense());
    const int n = H.dimension;
    SkinDiagnostics d;
    d.ldos.assign(n, 0.0);
    for (int a : sort_order(r.values)) {
        const VecX psi = r.vectors.col(a);
        for (int i = 0; i < n; ++i)
            d.ldos[i] += std::norm(psi(i));
        d.energies.push_back(r.values[a]);
        d.ipr.push_back(ipr(psi));
        d.edge_prob.push_back(edge_probability(psi, geom, x_edge));
    }
    return d;
}

std::vector<double> position_profile(const std::vector<double>& per_site, const RibbonGeometry& geom, int axis)
{
    const int np = axis == 0 ? geom.n_x_positions : geom.n_y_positions;
    std::vector<double> sum(np, 0.0);
    std::vector<int> cnt(np, 0);
    for (int i = 0; i < geom.size(); ++i) {
        const int k = axis == 0 ? geom.site_table[i].x_index : geom.site_table[i].y_index;
        sum[k] += per_site[i];
        ++cnt[k];
    }
    for (int k = 0; k < np; ++k)
        if (cnt[k])
            sum[k] /= cnt[k];
    return sum;
}

SpectralAreaResult spectral_area(const std::vector<cplx>& energies, int resolution, int min_pixels, int closing_radius)
{
    if (energies.empty())
        throw std::invalid_argument("spectral_area needs at least one energy");
    if (resolution < 32)
        throw std::invalid_argument("spectral_area resolution must be >= 32");
    if (closing_radius < 0)
        closing_radius = std::max(1, static_cast<int>(std::lround(2.0 * resolution / 512.0)));
    Raster r = rasterize(energies, resolution, 1.1);
    const auto se = disk(closing_radius);
    const auto filled = fill_holes(dilate(r.occ, resolution, se), resolution);
    const auto closed = erode(filled, resolution, se);
    const auto core = erode(closed, resolution, se);

    SpectralAreaResult out;
    out.resolution = resolution;
    out.closing_radius = closing_radius;
    out.occupied_pixels = count(r.occ);
    out.closed_pixels = count(closed);
    out.core_pixels = count(core);
    out.re_min = r.x0;
    out.re_max = r.x0 + r.px * resolution;
    out.im_min = r.y0;
    out.im_max = r.y0 + r.px * resolution;
    out.area = out.core_pixels < min_pixels ? 0.0 : out.closed_pixels * r.px * r.px;
    return out;
}

double spectral_area_drift(const std::vector<cplx>& energies, int resolution, int min_pixels)
{
    const double a1 = spectral_area(energies, resolution, min_pixels).area;
    const double a2 = spectral_area(energies, 2 * resolution, min_pixels).area;
    if (a1 == 0.0 && a2 == 0.0)
        return 0.0;
    if (a1 == 0.0)
        return 1e300;
    return std::abs(a2 / a1 - 1.0);
}

int spectral_winding(const ModelParams& p, WindingGeometry geometry, cplx e_ref, int n_k, WindingOptions opt)
{
    if (n_k < 4)
        throw std::invalid_argument("spectral_winding needs n_k >= 4");
    std::vector<double> th(n_k + 1), ph(n_k + 1);
    for (int q = 0; q <= n_k; ++q)
        th[q] = 2.0 * M_PI * q / n_k;
    for (int q = 0; q < n_k; ++q) {
        const MatX H = winding_hamiltonian(p, geometry, opt.n_open, th[q]);
        for (const auto& e : eigvals(H))
            if (std::abs(e - e_ref) < 1e-6)
                throw ReferenceOnSpectrum("reference energy within 1e-6 of the spectrum at theta=" + fmt(th[q]));
        ph[q] = det_arg(H, e_ref);
    }
    ph[n_k] = ph[0];
    auto arg_at = [&](double t) { return det_arg(winding_hamiltonian(p, geometry, opt.n_open, t), e_ref); };
    double total = 0.0;
    for (int q = 0; q < n_k; ++q)
        total += phase_increment(arg_at, th[q], th[q + 1], ph[q], ph[q + 1], 0);
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

WindingSummary loop_winding(const ModelParams& p, WindingGeometry geometry, int n_k, WindingOptions opt,
                            int max_references)
{
    std::vector<cplx> spec;
    for (int q = 0; q < n_k; ++q) {
        auto e = eigvals(winding_hamiltonian(p, geometry, opt.n_open, 2.0 * M_PI * q / n_k));
        spec.insert(spec.end(), e.begin(), e.end());
    }
    const int res = 256;
    Raster r = rasterize(spec, res, 1.1);
    const auto se = disk(2);
    const auto dil = dilate(r.occ, res, se);
    const auto filled = fill_holes(dil, res);
    std::vector<cplx> cands;
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const size_t i = static_cast<size_t>(y) * res + x;
            if (filled[i] && !dil[i])
                cands.emplace_back(r.x0 + (x + 0.5) * r.px, r.y0 + (y + 0.5) * r.px);
        }
    WindingSummary out;
    if (cands.empty())
        return out;
    const size_t stride = std::max<size_t>(1, cands.size() / max_references);
    for (size_t c = 0; c < cands.size() && static_cast<int>(out.references.size()) < max_references; c += stride) {
        const cplx e = cands[c];
        double dmin = 1e300;
        for (const auto& z : spec)
            dmin = std::min(dmin, std::abs(z - e));
        if (dmin < 2.0 * r.px)
            continue;
        try {
            const int w = spectral_winding(p, geometry, e, n_k, opt);
            out.references.push_back(e);
            out.windings.push_back(w);
            out.max_abs_winding = std::max(out.max_abs_winding, std::abs(w));
        } catch (const ReferenceOnSpectrum&) {
        }
    }
    out.n_references = static_cast<int>(out.references.size());
    return out;
}

DisorderSweepResult disorder_sweep(const RibbonGeometry& geom, const ModelParams& p, const DisorderSpec& dis_template,
                                   int n_realizations, NonreciprocityRegion region, int x_edge, int threads)
{
    if (n_realizations < 1)
        throw std::invalid_argument("n_realizations must be >= 1");
    const bool clean = !(dis_template.strength > 0);
    const int n_run = clean ? 1 : n_realizations;
    std::vector<SkinDiagnostics> runs(n_run);
    parallel_for(n_run, threads, [&](int i) {
        DisorderSpec d = dis_template;
        d.seed = realization_seed(dis_template.seed, static_cast<std::uint64_t>(i));
        try {
            runs[i] = diagnose(build_ribbon(geom, p, d, region), geom, x_edge);
        } catch (const Error& e) {
            throw Error(e.kind(), "realization " + std::to_string(i) + " (seed " + std::to_string(d.seed) +
                                      ") failed: " + e.what());
        }
    });

    DisorderSweepResult out;
    const int n = geom.size();
    SkinDiagnostics& m = out.mean;
    m.ldos.assign(n, 0.0);
    m.ipr.assign(n, 0.0);
    m.edge_prob.assign(n, 0.0);
    m.energies.assign(n, 0.0);
    for (int k = 0; k < n_realizations; ++k) {
        const SkinDiagnostics& d = runs[clean ? 0 : k];
        double ep = 0;
        for (int i = 0; i < n; ++i) {
            m.ldos[i] += d.ldos[i];
            m.ipr[i] += d.ipr[i];
            m.edge_prob[i] += d.edge_prob[i];
            m.energies[i] += d.energies[i];
            ep += d.edge_prob[i];
            out.pooled_ipr.push_back(d.ipr[i]);
            out.pooled_edge_prob.push_back(d.edge_prob[i]);
        }
        out.realization_mean_edge_prob.push_back(ep / n);
    }
    if (clean) {
        m = runs[0];
    } else {
        for (int i = 0; i < n; ++i) {
            m.ldos[i] /= n_realizations;
            m.ipr[i] /= n_realizations;
            m.edge_prob[i] /= n_realizations;
            m.energies[i] /= static_cast<double>(n_realizations);
        }
    }
    return out;
}

void write_state_csv(std::ostream& os, const SkinDiagnostics& d)
{
    os << "state,reE,imE,ipr,edge_prob\n";
    for (size_t a = 0; a < d.ipr.size(); ++a)
        os << a << ',' << fmt(d.energies[a].real()) << ',' << fmt(d.energies[a].imag()) << ',' << fmt(d.ipr[a])
           << ',' << fmt(d.edge_prob[a]) << '\n';
}

void write_site_csv(std::ostream& os, const SkinDiagnostics& d, const RibbonGeometry& geom)
{
    os << "id,x,y,sublattice,ldos\n";
    for (const auto& s : geom.site_table)
        os << s.id << ',' << fmt(s.x) << ',' << fmt(s.y) << ',' << (s.sublattice == SubA ? 'A' : s.sublattice == SubB ? 'B' : 'C')
           << ',' << fmt(d.ldos[s.id]) << '\n';
}

}  // namespace dice
