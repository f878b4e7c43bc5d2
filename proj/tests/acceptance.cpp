// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            run all
//   acceptance --only N   run criterion N (exit status reflects it)
#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "dice/ep.hpp"
#include "dice/errors.hpp"
#include "dice/model.hpp"
#include "dice/nhse.hpp"
#include "dice/ribbon.hpp"
#include "dice/spectra.hpp"

using namespace dice;

namespace {

const double kT = 1.0 / std::sqrt(2.0);
const double kT2 = 0.06 * kT;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string strf(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string strf(const char* f, ...)
{
    char buf[2048];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

ModelParams nn(double delta = 0, double gamma = 0)
{
    ModelParams p;
    p.t = kT;
    p.delta = delta;
    p.gamma = gamma;
    return p;
}

ModelParams full(double m = 0, double delta = 0, double gamma = 0)
{
    ModelParams p = nn(delta, gamma);
    p.t2 = kT2;
    p.phi = M_PI / 2;
    p.m = m;
    return p;
}

// nn-only spectrum on ky = 0: a flat level plus
// E^2 = 2 t^2 (3 + 4 cos(pi kx) + 2 cos(2 pi kx)) - delta^2.
std::array<cplx, 3> nn_spectrum_oracle(double t, double kx, double delta)
{
    const double c = std::cos(M_PI * kx), c2 = std::cos(2 * M_PI * kx);
    const cplx s = std::sqrt(cplx(2 * t * t * (3 + 4 * c + 2 * c2) - delta * delta, 0.0));
    std::array<cplx, 3> e{-s, cplx(0), s};
    std::sort(e.begin(), e.end(), less_re_im);
    return e;
}

Outcome c1()
{
    double worst = 0, worst_closed = 0;
    const double deltas[] = {0.0, 0.5, 1.25, 2.0, 2.75};
    for (double d : deltas)
        for (int i = 0; i < 200; ++i) {
            const double kx = -1.0 + 2.0 * (i + 0.5) / 200;
            const auto num = sorted_eigenvalues(bloch_hamiltonian(nn(d), {kx, 0}));
            const auto ref = nn_spectrum_oracle(kT, kx, d);
            // Real parts can tie, so compare as multisets: best of the 6 assignments.
            std::array<int, 3> perm{0, 1, 2};
            double best = 1e300;
            do {
                double e = 0;
                for (int b = 0; b < 3; ++b)
                    e = std::max(e, std::abs(num[b] - ref[perm[b]]));
                best = std::min(best, e);
            } while (std::next_permutation(perm.begin(), perm.end()));
            worst = std::max(worst, best);
            const auto [ep, em] = analytic_dispersion_delta(kx, d);
            worst_closed = std::max(worst_closed, std::min(std::abs(ep - ref[2]) + std::abs(em - ref[0]),
                                                           std::abs(ep - ref[0]) + std::abs(em - ref[2])));
        }
    return {worst < 1e-9 && worst_closed < 1e-9,
            strf("max |E_num - E_closed| = %.3g, library closed form deviation %.3g (tol 1e-9)", worst, worst_closed)};
}

Outcome c2()
{
    struct Case {
        const char* label;
        MomentumPoint k;
        ParamKind kind;
        std::pair<double, double> bracket;
        double expect;
    };
    const Case cases[] = {
        {"delta_EP(M)", hs::M, ParamKind::delta, {0.5, 1.5}, 1.0},
        {"delta_EP(G)", hs::Gamma, ParamKind::delta, {2.5, 3.5}, 3.0},
        {"gamma_EP(M)", hs::M, ParamKind::gamma, {0.4, 1.0}, 1.0 / std::sqrt(2.0)},
        {"gamma_EP(G)", hs::Gamma, ParamKind::gamma, {1.8, 2.6}, 3.0 / std::sqrt(2.0)},
    };
    bool ok = true;
    std::string d;
    for (const auto& c : cases) {
        const EPResult r = find_ep(nn(), c.k, c.kind, c.bracket);
        ok = ok && std::abs(r.value - c.expect) <= 1e-3;
        d += strf("%s=%.6f (expect %.6f) ", c.label, r.value, c.expect);
    }
    return {ok, d + "tol 1e-3"};
}

Outcome c3()
{
    const auto a = rigidity_scaling_fit(nn(), hs::M, ParamKind::delta, 1.0);
    const auto b = rigidity_scaling_fit(nn(), hs::Gamma, ParamKind::delta, 3.0);
    MatrixFamily dimer = [](double g) {
        MatX H(2, 2);
        H << cplx(0, g), 1.0, 1.0, cplx(0, -g);
        return H;
    };
    const auto c = rigidity_scaling_fit(dimer, 1.0);
    const bool ok = std::abs(a.slope - 1) <= 0.05 && std::abs(b.slope - 1) <= 0.05 && std::abs(c.slope - 0.5) <= 0.05;
    return {ok, strf("slope M = %.4f, slope Gamma = %.4f (expect 1 +- 0.05), PT dimer = %.4f (expect 0.5 +- 0.05)",
                     a.slope, b.slope, c.slope)};
}

Outcome c4()
{
    const EPLocation e = locate_ep_on_kx_axis(full(0.06), ParamKind::delta, {0.9, 1.2}, {0.7, 1.2});
    const bool ok = std::abs(e.kx - 1.07) <= 0.02 && std::abs(e.value - 0.94) <= 0.02 && e.order == 3;
    std::string d = strf("kx = %.4f (expect 1.07 +- 0.02), delta_EP = %.4f (expect 0.94 +- 0.02), order %d, r_min %.2g",
                         e.kx, e.value, e.order, e.min_rigidity);
    ModelParams half = full(0.06);
    half.t2 = 0.03;
    const EPLocation h = locate_ep_on_kx_axis(half, ParamKind::delta, {0.9, 1.2}, {0.7, 1.2});
    d += strf("; info: nnn amplitude 0.03 gives kx = %.4f, delta_EP = %.4f", h.kx, h.value);
    return {ok, d};
}

Outcome c5()
{
    bool ok = true;
    std::string d;
    // Boundary from the closed form 3 sqrt(3) t2 |sin phi| (level crossing at a Dirac point).
    // For cos(phi) < 0 (CG side) the valence and flat bands touch inside the lobe, so the
    // isolated band there is the conduction band; that band is the one checked.
    for (double phi : {M_PI / 2, M_PI / 4, -M_PI / 2, -M_PI / 4, 3 * M_PI / 4}) {
        const double mb = 3 * std::sqrt(3.0) * kT2 * std::abs(std::sin(phi));
        const int band = std::cos(phi) < -1e-12 ? 2 : 0;
        d += strf("phi=%.4f band %d:", phi, band);
        for (double f : {0.0, 0.5, 0.9, 1.1, 1.5}) {
            ModelParams p = full(f * mb);
            p.phi = phi;
            const int c = chern_number(p, band, 24);
            const int want = f < 1 ? 2 : 0;
            ok = ok && std::abs(c) == want;
            d += strf(" %d", c);
        }
        d += "; ";
    }
    d = "isolated-band C at m/m_b {0, .5, .9, 1.1, 1.5}: " + d;
    struct Set {
        double phi, m;
        GapClass want;
    };
    for (const Set& s : {Set{M_PI / 2, 0.0, GapClass::AG}, Set{0.0, 0.15, GapClass::VG}, Set{M_PI, 0.15, GapClass::CG}}) {
        ModelParams p = full(s.m);
        p.phi = s.phi;
        const auto ph = classify_gap(p, 96);
        ok = ok && ph.gap_class == s.want;
        d += strf("| phi=%.4f m=%.2f -> %s (expect %s) ", s.phi, s.m, to_string(ph.gap_class), to_string(s.want));
    }
    return {ok, d};
}

Outcome c6()
{
    const double ms = critical_mass(kT2, M_PI / 2, kT);
    // Independent check: the K-point levels must be degenerate at ms.
    ModelParams p = full(ms);
    const auto e = sorted_eigenvalues(bloch_hamiltonian(p, hs::K));
    double split = 1e9;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            split = std::min(split, std::abs(e[i] - e[j]));
    const double in_t2 = ms / kT2;
    const bool abs_ok = std::abs(ms - 0.16) <= 0.05 * 0.16;
    const bool rel_ok = std::abs(in_t2 - 0.16) <= 0.05 * 0.16;
    const double ms_half = critical_mass(0.03, M_PI / 2, kT);
    return {abs_ok || rel_ok,
            strf("m* = %.5f absolute, %.4f in units of t2 (expect 0.16 +- 5%% in one reading), K-point splitting %.1e; "
                 "info: nnn amplitude 0.03 gives m* = %.5f",
                 ms, in_t2, split, ms_half)};
}

Outcome c7()
{
    struct Case {
        const char* label;
        ModelParams p;
        bool nonzero;
    };
    const Case cases[] = {
        {"nn+delta", nn(2, 0), false},
        {"full+delta", full(0, 2, 0), true},
        {"nn+gamma", nn(0, 2), true},
        {"full+gamma", full(0, 0, 2), true},
    };
    bool ok = true;
    std::string d;
    for (const auto& c : cases) {
        const auto a = spectral_area(torus_spectrum(c.p, 12, 12, 8));
        ok = ok && ((a.area > 0) == c.nonzero);
        d += strf("%s: area %.4g core %ld (expect %s) ", c.label, a.area, a.core_pixels, c.nonzero ? "nonzero" : "zero");
    }
    return {ok, d};
}

double row_contrast(const RibbonGeometry& g, const std::vector<double>& ldos)
{
    double e = 0, b = 0;
    int ne = 0, nb = 0;
    for (const auto& s : g.site_table) {
        if (s.row == 0 || s.row == g.ny - 1) {
            e += ldos[s.id];
            ++ne;
        } else if (s.row >= g.ny / 4 && s.row < 3 * g.ny / 4) {
            b += ldos[s.id];
            ++nb;
        }
    }
    return (e / ne) / (b / nb);
}

double mean_left_weight(const RibbonGeometry& g, const ModelParams& p)
{
    const auto d = diagnose(build_ribbon(g, p), g, 5);
    double s = 0;
    for (double v : d.edge_prob)
        s += v;
    return s / d.edge_prob.size();
}

Outcome c8()
{
    const auto gd = make_geometry(8, 48, Boundary::open, Boundary::open);
    const auto dd = diagnose(build_ribbon(gd, full(0, 2)), gd, 5);
    const double contrast = row_contrast(gd, dd.ldos);

    const auto gg = make_geometry(24, 12, Boundary::open, Boundary::open);
    const double w = mean_left_weight(gg, full(0, 0, 2));
    const double w0 = mean_left_weight(gg, full());
    const bool ok = contrast >= 5 && w / w0 >= 5;
    return {ok, strf("delta=2 (8x48): top/bottom LDOS over bulk = %.3f (need >= 5); gamma=2 (24x12): left weight "
                     "%.4f vs Hermitian %.4f, ratio %.3f (need >= 5)",
                     contrast, w, w0, w / w0)};
}

Outcome c9()
{
    WindingOptions oy;
    oy.n_open = 8;
    WindingOptions ox;
    ox.n_open = 12;
    const auto y = loop_winding(full(0, 2), WindingGeometry::pbc_y_obc_x, 400, oy);
    const auto x = loop_winding(full(0, 2), WindingGeometry::pbc_x_obc_y, 400, ox);
    return {y.max_abs_winding == 1 && x.max_abs_winding == 0,
            strf("PBC-y/OBC-x W = %d over %d references (expect 1); PBC-x/OBC-y W = %d over %d references (expect 0)",
                 y.max_abs_winding, y.n_references, x.max_abs_winding, x.n_references)};
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome c10()
{
    const auto g = make_geometry(24, 6, Boundary::open, Boundary::open);
    const ModelParams p = full(0, 0, 2);
    double mean[3];
    double ref_median = 0, med10 = 0;
    const double strengths[] = {0, 1, 10};
    for (int i = 0; i < 3; ++i) {
        const auto r = disorder_sweep(g, p, {strengths[i], DisorderKind::complex, 20240601}, 100);
        double s = 0;
        for (double v : r.pooled_edge_prob)
            s += v;
        mean[i] = s / r.pooled_edge_prob.size();
        if (i == 0) {
            std::vector<double> bulk;
            for (size_t a = 0; a < r.pooled_ipr.size(); ++a)
                if (r.pooled_edge_prob[a] < 0.5)
                    bulk.push_back(r.pooled_ipr[a]);
            ref_median = median(bulk);
        }
        if (i == 2)
            med10 = median(r.pooled_ipr);
    }
    const bool ok = mean[0] > mean[1] && mean[1] > mean[2] && med10 >= 5 * ref_median && mean[2] < 0.1;
    return {ok, strf("mean edge_prob %.4f > %.4f > %.4f; median IPR(D=10) = %.4f vs D=0 bulk median %.4f "
                     "(ratio %.1f, need >= 5); mean edge_prob(D=10) < 0.1",
                     mean[0], mean[1], mean[2], med10, ref_median, med10 / ref_median)};
}

Outcome c11()
{
    double worst = 0;
    const double deltas[] = {0.3, 0.7, 1.0, 2.0, 3.0};
    for (double d : deltas)
        for (int i = 0; i < 50; ++i)
            worst = std::max(worst, pt_commutator_norm(nn(d), {-1.0 + 2.0 * (i + 0.5) / 50, 0}));
    int broken = 0;
    for (double d : deltas) {
        // Near K the dispersive pair becomes a complex-conjugate pair once delta exceeds the splitting.
        const auto e = sorted_eigenvalues(bloch_hamiltonian(nn(d), {hs::K.kx + 0.01, 0}));
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (std::abs(e[i].imag()) > 1e-6 && std::abs(e[i] - std::conj(e[j])) < 1e-9)
                    ++broken;
        if (broken == 0)
            break;
    }
    return {worst < 1e-12 && broken > 0,
            strf("max ||[PT,H]|| = %.2e (need < 1e-12); complex-conjugate pairs near K: %d", worst, broken)};
}

Outcome c12()
{
    struct Size {
        int ny, nk;
    };
    const Size sizes[] = {{12, 4}, {24, 8}, {36, 12}};
    std::vector<double> dc;
    std::string d;
    for (const auto& s : sizes) {
        const auto scan = edge_state_critical_delta(full(0.06), s.ny, s.nk, 5e-3);
        dc.push_back(scan.delta_c);
        d += strf("n=%d: delta_c=%.2f ", 6 * s.ny * s.nk, scan.delta_c);
    }
    const bool range = dc[2] >= 0.7 && dc[2] <= 1.1;
    const bool mono = std::is_sorted(dc.begin(), dc.end());
    return {range && mono, d + strf("(need [0.7, 1.1] at n=2592: %s; nondecreasing: %s)", range ? "yes" : "no",
                                    mono ? "yes" : "no")};
}

struct Criterion {
    int id;
    double budget_s;
    Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {1, 1, c1},   {2, 10, c2},  {3, 30, c3},   {4, 60, c4},  {5, 60, c5},   {6, 10, c6},
    {7, 300, c7}, {8, 300, c8}, {9, 120, c9}, {10, 900, c10}, {11, 1, c11}, {12, 600, c12},
};

}  // namespace

int main(int argc, char** argv)
{
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (!std::strcmp(argv[i], "--only") && i + 1 < argc)
            only = std::atoi(argv[++i]);
    int failures = 0;
    for (const auto& c : kCriteria) {
        if (only && c.id != only)
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = s <= c.budget_s;
        const bool pass = o.pass && in_budget;
        failures += !pass;
        std::printf("criterion %d: %s %s [%.2fs, budget %.0fs%s]\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(), s,
                    c.budget_s, in_budget ? "" : ", exceeded");
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
