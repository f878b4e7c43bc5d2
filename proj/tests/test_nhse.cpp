#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <sstream>

#include "dice/errors.hpp"
#include "dice/nhse.hpp"

using namespace dice;

namespace {

const double kT = 1.0 / std::sqrt(2.0);

ModelParams full(double delta = 0, double gamma = 0)
{
    ModelParams p;
    p.t2 = 0.06 * kT;
    p.phi = M_PI / 2;
    p.delta = delta;
    p.gamma = gamma;
    return p;
}

std::vector<cplx> circle(double r, int n, cplx c = 0)
{
    std::vector<cplx> e;
    for (int i = 0; i < n; ++i)
        e.push_back(c + std::polar(r, 2 * M_PI * i / n));
    return e;
}

}  // namespace

TEST_CASE("inverse participation ratio")
{
    VecX u = VecX::Constant(16, cplx(0.3, 0.1));
    CHECK(ipr(u) == doctest::Approx(1.0 / 16));
    VecX d = VecX::Zero(16);
    d(5) = cplx(0, 2);
    CHECK(ipr(d) == doctest::Approx(1.0));
    CHECK_THROWS_AS(ipr(VecX::Zero(4)), ZeroVector);
}

TEST_CASE("edge probability")
{
    const auto g = make_geometry(4, 2, Boundary::open, Boundary::open);
    VecX psi = VecX::Zero(g.size());
    for (const auto& s : g.site_table)
        if (s.x_index == 0)
            psi(s.id) = 1.0;
    CHECK(edge_probability(psi, g, 5) == doctest::Approx(1.0));
    VecX far = VecX::Zero(g.size());
    for (const auto& s : g.site_table)
        if (s.x_index == g.n_x_positions - 1)
            far(s.id) = 1.0;
    CHECK(edge_probability(far, g, 5) == doctest::Approx(0.0));
    CHECK(edge_probability(VecX::Ones(g.size()), g, g.n_x_positions) == doctest::Approx(1.0));
    CHECK_THROWS_AS(edge_probability(VecX::Ones(3), g, 5), DimensionMismatch);
}

TEST_CASE("LDOS and diagnostics")
{
    const auto g = make_geometry(4, 3, Boundary::open, Boundary::open);
    const auto H = build_ribbon(g, full(0, 1.0));
    const auto l = ldos(H);
    REQUIRE(l.size() == size_t(g.size()));
    CHECK(std::accumulate(l.begin(), l.end(), 0.0) == doctest::Approx(g.size()));
    const auto d = diagnose(H, g, 5);
    CHECK(d.ipr.size() == size_t(g.size()));
    for (size_t i = 1; i < d.energies.size(); ++i)
        CHECK_FALSE(less_re_im(d.energies[i], d.energies[i - 1]));
    const auto prof = position_profile(d.ldos, g, 0);
    CHECK(prof.size() == size_t(g.n_x_positions));
    std::ostringstream a, b;
    write_state_csv(a, d);
    write_site_csv(b, d, g);
    CHECK(a.str().rfind("state,reE,imE,ipr,edge_prob\n", 0) == 0);
    CHECK(b.str().rfind("id,x,y,sublattice,ldos\n", 0) == 0);
}

TEST_CASE("non-reciprocity pushes weight to the left edge")
{
    const auto g = make_geometry(12, 4, Boundary::open, Boundary::open);
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    const double skin = mean(diagnose(build_ribbon(g, full(0, 2)), g).edge_prob);
    const double herm = mean(diagnose(build_ribbon(g, full()), g).edge_prob);
    CHECK(skin > 3 * herm);
}

TEST_CASE("spectral area of simple shapes")
{
    const auto loop = spectral_area(circle(1.0, 4000));
    CHECK(loop.area == doctest::Approx(M_PI).epsilon(0.03));
    std::vector<cplx> arc;
    for (int i = 0; i < 4000; ++i)
        arc.push_back(cplx(-1 + 2.0 * i / 3999, 0.3 * std::sin(3.0 * i / 3999)));
    CHECK(spectral_area(arc).area == 0.0);
    CHECK(spectral_area(std::vector<cplx>(10, cplx(1, 1))).area == 0.0);
    // Two disjoint loops add.
    auto two = circle(1.0, 4000, -2.0);
    const auto other = circle(1.0, 4000, 2.0);
    two.insert(two.end(), other.begin(), other.end());
    CHECK(spectral_area(two).area == doctest::Approx(2 * M_PI).epsilon(0.05));
    CHECK(spectral_area_drift(circle(1.0, 20000)) < 0.05);
    CHECK(spectral_area_drift(arc) == 0.0);
    CHECK_THROWS_AS(spectral_area({}), std::invalid_argument);
}

TEST_CASE("spectral winding")
{
    const ModelParams p = full(2.0);
    CHECK(spectral_winding(p, WindingGeometry::pbc_y_obc_x, cplx(50, 0), 64) == 0);
    const auto s = loop_winding(p, WindingGeometry::pbc_y_obc_x, 200);
    CHECK(s.max_abs_winding == 1);
    CHECK(s.n_references == int(s.references.size()));
    CHECK(s.windings.size() == s.references.size());
    // A reference on the spectrum is rejected.
    const auto g = make_geometry(8, 1, Boundary::open, Boundary::periodic);
    const auto e = eigvals(build_ribbon_twisted(g, p, std::nullopt, NonreciprocityRegion::bulk, 0, 0).dense());
    CHECK_THROWS_AS(spectral_winding(p, WindingGeometry::pbc_y_obc_x, e[3], 64), ReferenceOnSpectrum);
    // Hermitian spectra enclose nothing.
    CHECK(loop_winding(full(), WindingGeometry::pbc_y_obc_x, 100).max_abs_winding == 0);
}

TEST_CASE("disorder sweep is reproducible and thread independent")
{
    const auto g = make_geometry(4, 3, Boundary::open, Boundary::open);
    const DisorderSpec d{1.0, DisorderKind::complex, 99};
    const auto a = disorder_sweep(g, full(0, 2), d, 6, NonreciprocityRegion::bulk, 5, 1);
    const auto b = disorder_sweep(g, full(0, 2), d, 6, NonreciprocityRegion::bulk, 5, 2);
    CHECK(a.pooled_ipr == b.pooled_ipr);
    CHECK(a.mean.ldos == b.mean.ldos);
    CHECK(a.pooled_ipr.size() == size_t(6 * g.size()));
    CHECK(a.realization_mean_edge_prob.size() == 6);
    const auto c = disorder_sweep(g, full(0, 2), {1.0, DisorderKind::complex, 100}, 6);
    CHECK(c.pooled_ipr != a.pooled_ipr);
    // Zero strength: every realization is the clean system.
    const auto z = disorder_sweep(g, full(0, 2), {0.0, DisorderKind::complex, 1}, 3);
    CHECK(z.realization_mean_edge_prob[0] == z.realization_mean_edge_prob[2]);
}
