#include "dice/ep.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "dice/errors.hpp"
#include "dice/io.hpp"
#include "dice/spectra.hpp"

namespace dice {

namespace {

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

void require_hermitian(const ModelParams& p)
{
    if (!p.hermitian())
        throw std::invalid_argument("Hermitian parameters required (delta = gamma = 0)");
}

struct BandGrid {
    int n;
    std::vector<Eigen::Vector3d> energies;
    std::vector<Mat3> vectors;
};

BandGrid solve_grid(const ModelParams& p, int n)
{
    BandGrid g{n, std::vector<Eigen::Vector3d>(n * n), std::vector<Mat3>(n * n)};
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            es.compute(bloch_reduced(p, double(i) / n, double(j) / n));
            g.energies[i * n + j] = es.eigenvalues();
            g.vectors[i * n + j] = es.eigenvectors();
        }
    return g;
}

int chern_from_grid(const BandGrid& g, int band)
{
    const int n = g.n;
    for (const auto& e : g.energies) {
        if (band > 0 && e(band) - e(band - 1) < 1e-8)
            throw GapClosure("band " + std::to_string(band) + " touches the band below");
        if (band < 2 && e(band + 1) - e(band) < 1e-8)
            throw GapClosure("band " + std::to_string(band) + " touches the band above");
    }
    auto u = [&](int i, int j) -> Eigen::Vector3cd {
        return g.vectors[((i % n + n) % n) * n + ((j % n + n) % n)].col(band);
    };
    auto link = [](const Eigen::Vector3cd& a, const Eigen::Vector3cd& b) {
        cplx z = a.dot(b);
        return z / std::abs(z);
    };
    double flux = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx w = link(u(i, j), u(i + 1, j)) * link(u(i + 1, j), u(i + 1, j + 1)) *
                     link(u(i + 1, j + 1), u(i, j + 1)) * link(u(i, j + 1), u(i, j));
            flux += std::arg(w);
        }
    return static_cast<int>(std::lround(flux / (2.0 * M_PI)));
}

}  // namespace

std::vector<std::pair<int, int>> PhaseDiagramGrid::exceptional_cells(double threshold) const
{
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < rigidity.size(); ++i)
        for (size_t j = 0; j < rigidity[i].size(); ++j)
            if (rigidity[i][j] < threshold)
                out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

PhaseDiagramGrid ep_phase_diagram(const MomentumPoint& k, std::pair<double, double> delta_range,
                                  std::pair<double, double> mass_range, double t2, double phi,
                                  std::pair<int, int> resolution, PhaseDiagramOptions opt)
{
    if (resolution.first < 2 || resolution.second < 2)
        throw std::invalid_argument("phase diagram resolution must be at least 2x2");
    PhaseDiagramGrid g;
    g.absolute_mass = opt.absolute_mass;
    g.delta_axis = linspace(delta_range.first, delta_range.second, resolution.first);
    g.mass_ratio_axis = linspace(mass_range.first, mass_range.second, resolution.second);
    g.rigidity.assign(resolution.first, std::vector<double>(resolution.second));
    const int nm = resolution.second;
    parallel_for(resolution.first * nm, opt.threads, [&](int idx) {
        const int i = idx / nm, j = idx % nm;
        ModelParams p;
        p.t = opt.t;
        p.t2 = t2;
        p.phi = phi;
        p.m = opt.absolute_mass ? g.mass_ratio_axis[j] : g.mass_ratio_axis[j] * t2;
        p.delta = g.delta_axis[i];
        g.rigidity[i][j] = std::min(1.0, min_rigidity(bloch_hamiltonian(p, k)));
    });
    return g;
}

void write_phase_csv(std::ostream& os, const PhaseDiagramGrid& g)
{
    os << (g.absolute_mass ? "delta,mass,rigidity\n" : "delta,mass_ratio,rigidity\n");
    for (size_t i = 0; i < g.delta_axis.size(); ++i)
        for (size_t j = 0; j < g.mass_ratio_axis.size(); ++j)
            os << fmt(g.delta_axis[i]) << ',' << fmt(g.mass_ratio_axis[j]) << ',' << fmt(g.rigidity[i][j]) << '\n';
}

void write_phase_svg(std::ostream& os, const PhaseDiagramGrid& g)
{
    const int nd = static_cast<int>(g.delta_axis.size());
    const int nm = static_cast<int>(g.mass_ratio_axis.size());
    const double W = 480, H = 480, L = 70, B = 50;
    const double cw = W / nd, ch = H / nm;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W + L + 20 << "\" height=\"" << H + B + 20
       << "\">\n";
    for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nm; ++j) {
            const double r = std::clamp(g.rigidity[i][j], 0.0, 1.0);
            const int c = static_cast<int>(std::lround(255 * r));
            os << "<rect x=\"" << L + i * cw << "\" y=\"" << 10 + H - (j + 1) * ch << "\" width=\"" << cw + 0.5
               << "\" height=\"" << ch + 0.5 << "\" fill=\"rgb(" << c << ',' << c / 2 << ',' << 255 - c << ")\"/>\n";
        }
    os << "<text x=\"" << L + W / 2 << "\" y=\"" << H + B << "\" text-anchor=\"middle\">delta ["
       << fmt(g.delta_axis.front()) << ", " << fmt(g.delta_axis.back()) << "]</text>\n";
    os << "<text x=\"15\" y=\"" << 10 + H / 2 << "\" transform=\"rotate(-90 15 " << 10 + H / 2
       << ")\" text-anchor=\"middle\">" << (g.absolute_mass ? "m" : "m/t2") << " ["
       << fmt(g.mass_ratio_axis.front()) << ", " << fmt(g.mass_ratio_axis.back()) << "]</text>\n";
    os << "</svg>\n";
}

EPLocation locate_ep_on_kx_axis(const ModelParams& p, ParamKind kind, std::pair<double, double> kx_bracket,
                                std::pair<double, double> param_bracket)
{
    auto inner = [&](double kx) {
        return minimize_rigidity(bloch_family(p, {kx, 0.0}, kind), param_bracket);
    };
    double a = std::min(kx_bracket.first, kx_bracket.second);
    double b = std::max(kx_bracket.first, kx_bracket.second);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    auto gc = inner(c), gd = inner(d);
    for (int it = 0; it < 80 && (b - a) > 1e-10; ++it) {
        if (gc.second < gd.second) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = inner(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = inner(d);
        }
    }
    const bool left = gc.second < gd.second;
    EPLocation loc;
    loc.kx = left ? c : d;
    loc.value = left ? gc.first : gd.first;
    loc.min_rigidity = left ? gc.second : gd.second;
    if (loc.min_rigidity > 1e-3)
        throw NoEPInBracket("minimal rigidity " + fmt(loc.min_rigidity) + " on the kx axis");
    if (loc.min_rigidity < 1e-6) {
        for (int side : {-1, 1}) {
            try {
                loc.order = rigidity_scaling_fit(p, {loc.kx, 0.0}, kind, loc.value, {}, 40, side).order;
                break;
            } catch (const InsufficientDynamicRange&) {
            }
        }
    }
    return loc;
}

int chern_number(const ModelParams& p, int band, int grid_n)
{
    require_hermitian(p);
    if (band < 0 || band > 2 || grid_n < 2)
        throw std::invalid_argument("bad band index or grid size");
    return chern_from_grid(solve_grid(p, grid_n), band);
}

std::array<int, 3> chern_numbers(const ModelParams& p, int grid_n)
{
    require_hermitian(p);
    BandGrid g = solve_grid(p, grid_n);
    return {chern_from_grid(g, 0), chern_from_grid(g, 1), chern_from_grid(g, 2)};
}

const char* to_string(GapClass g)
{
    switch (g) {
    case GapClass::AG: return "AG";
    case GapClass::VG: return "VG";
    case GapClass::CG: return "CG";
    default: return "metallic";
    }
}

HermitianPhase classify_gap(const ModelParams& p, int grid_n)
{
    require_hermitian(p);
    BandGrid g = solve_grid(p, grid_n);
    HermitianPhase ph;
    for (int b = 0; b < 3; ++b) {
        double lo = 1e300, hi = -1e300;
        for (const auto& e : g.energies) {
            lo = std::min(lo, e(b));
            hi = std::max(hi, e(b));
        }
        ph.band_ranges[b] = {lo, hi};
    }
    const double tol = 1e-6 * p.t;
    const bool lower_open = ph.band_ranges[0].second < ph.band_ranges[1].first - tol;
    const bool upper_open = ph.band_ranges[1].second < ph.band_ranges[2].first - tol;
    ph.gap_class = lower_open && upper_open ? GapClass::AG
                   : lower_open             ? GapClass::VG
                   : upper_open             ? GapClass::CG
                                            : GapClass::metallic;
    try {
        ph.chern_numbers = {chern_from_grid(g, 0), chern_from_grid(g, 1), chern_from_grid(g, 2)};
        ph.chern_defined = true;
    } catch (const GapClosure&) {
        ph.chern_defined = false;
    }
    if (p.t2 != 0.0) {
        try {
            ph.in_topological_region = std::abs(p.m) < critical_mass(p.t2, p.phi, p.t);
        } catch (const NoClosure&) {
            ph.in_topological_region = false;
        }
    }
    return ph;
}

double critical_mass(double t2, double phi, double t)
{
    if (!(t2 > 0))
        throw std::invalid_argument("critical_mass needs t2 > 0");
    // At K and K' the nn block vanishes and H is diagonal; the A and C levels
    // cross (closing the direct gap) where their splitting changes sign.
    const double m_max = 20.0 * t2 + 1.0;
    double best = -1.0;
    for (const MomentumPoint& valley : {hs::K, hs::Kp}) {
        auto split = [&](double m) {
            ModelParams p;
            p.t = t;
            p.t2 = t2;
            p.phi = phi;
            p.m = m;
            Mat3 H = bloch_hamiltonian(p, valley);
            return (H(0, 0) - H(2, 2)).real();
        };
        double lo = 0.0, hi = m_max;
        double flo = split(lo), fhi = split(hi);
        if (std::abs(flo) < 1e-13 * m_max) {
            best = 0.0;
            continue;
        }
        if ((flo > 0) == (fhi > 0))
            continue;
        for (int it = 0; it < 200 && hi - lo > 1e-16 * m_max; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = split(mid);
            if ((fm > 0) == (flo > 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        const double root = 0.5 * (lo + hi);
        if (best < 0 || root < best)
            best = root;
    }
    if (best < 0)
        throw NoClosure("no gap closing at K or K' for m in [0, " + fmt(m_max) + "]");

    ModelParams p;
    p.t = t;
    p.t2 = t2;
    p.phi = phi;
    p.m = best;
    double gap = 1e300;
    for (const MomentumPoint& valley : {hs::K, hs::Kp}) {
        Eigen::SelfAdjointEigenSolver<Mat3> es(bloch_hamiltonian(p, valley), Eigen::EigenvaluesOnly);
        const auto& e = es.eigenvalues();
        gap = std::min({gap, e(1) - e(0), e(2) - e(1)});
    }
    if (gap > 1e-9)
        throw NoClosure("level crossing without direct gap closing");
    return best;
}

}  // namespace dice
