#include "dice/model.hpp"

#include <algorithm>
#include <ostream>

#include "dice/errors.hpp"
#include "dice/io.hpp"

namespace dice {

namespace {

const double kSqrt3 = std::sqrt(3.0);

struct NnBond {
    int n1, n2;
    bool vertical;
};

// Cell displacement of the A (resp. C) neighbour of the B site in cell 0.
constexpr NnBond kNnA[3] = {{0, 0, true}, {1, -1, false}, {0, -1, false}};
constexpr NnBond kNnC[3] = {{0, 0, true}, {-1, 1, false}, {0, 1, false}};
constexpr int kCcwA[3][2] = {{-1, 1}, {0, -1}, {1, 0}};

}  // namespace

KPath standard_path(int samples_per_segment)
{
    return {{hs::M, hs::Kp, hs::Gamma, hs::K, hs::M}, samples_per_segment};
}

Eigen::Vector2d bravais(int n1, int n2)
{
    return {n1 + 0.5 * n2, 0.5 * kSqrt3 * n2};
}

std::array<Eigen::Vector2d, 3> nn_vectors()
{
    const double d = 1.0 / kSqrt3;
    return {Eigen::Vector2d(0.0, d), Eigen::Vector2d(0.5, -0.5 * d),
            Eigen::Vector2d(-0.5, -0.5 * d)};
}

std::array<Eigen::Vector2d, 6> nnn_vectors()
{
    std::array<Eigen::Vector2d, 6> v;
    for (int i = 0; i < 3; ++i) {
        v[i] = bravais(kCcwA[i][0], kCcwA[i][1]);
        v[i + 3] = -v[i];
    }
    return v;
}

std::vector<Hop> hopping_list(const ModelParams& p)
{
    std::vector<Hop> h;
    h.reserve(26);
    for (const auto& b : kNnA) {
        int g = b.vertical ? 1 : 0;
        h.push_back({SubA, SubB, b.n1, b.n2, p.t, g});
        h.push_back({SubB, SubA, -b.n1, -b.n2, p.t, -g});
    }
    for (const auto& b : kNnC) {
        int g = b.vertical ? 1 : 0;
        h.push_back({SubC, SubB, b.n1, b.n2, p.t, -g});
        h.push_back({SubB, SubC, -b.n1, -b.n2, p.t, g});
    }
    if (p.t2 != 0.0) {
        const cplx ccw = p.t2 * std::polar(1.0, p.phi);
        const cplx cw = std::conj(ccw);
        for (const auto& v : kCcwA) {
            h.push_back({SubA, SubA, v[0], v[1], ccw, 0});
            h.push_back({SubA, SubA, -v[0], -v[1], cw, 0});
            h.push_back({SubC, SubC, -v[0], -v[1], ccw, 0});
            h.push_back({SubC, SubC, v[0], v[1], cw, 0});
        }
    }
    h.push_back({SubA, SubA, 0, 0, cplx(p.m, p.delta), 0});
    h.push_back({SubC, SubC, 0, 0, cplx(-p.m, -p.delta), 0});
    return h;
}

Mat3 bloch_reduced(const ModelParams& p, double f1, double f2)
{
    Mat3 H = Mat3::Zero();
    for (const Hop& hop : hopping_list(p)) {
        const cplx amp = hop.amp + static_cast<double>(hop.gamma_sign) * p.gamma;
        const double ph = 2.0 * M_PI * (f1 * hop.n1 + f2 * hop.n2);
        H(hop.to, hop.from) += amp * cplx(std::cos(ph), std::sin(ph));
    }
    return H;
}

Mat3 bloch_hamiltonian(const ModelParams& p, const MomentumPoint& k)
{
    // k . (n1 a1 + n2 a2) = n1 (k.a1) + n2 (k.a2)
    const double f1 = k.kx;
    const double f2 = 0.5 * k.kx + 0.5 * kSqrt3 * k.ky;
    return bloch_reduced(p, f1, f2);
}

std::pair<cplx, cplx> analytic_dispersion_delta(double kx, double delta)
{
    const double r = 3.0 - delta * delta + 4.0 * std::cos(M_PI * kx) + 2.0 * std::cos(2.0 * M_PI * kx);
    const cplx s = std::sqrt(cplx(r, 0.0));
    return {s, -s};
}

double analytic_ep_locus(double kx, EPKind kind)
{
    double r = 3.0 + 4.0 * std::cos(M_PI * kx) + 2.0 * std::cos(2.0 * M_PI * kx);
    if (r < 0.0) {
        if (r > -1e-12)
            r = 0.0;
        else
            throw NegativeRadicand("no real EP strength at kx=" + fmt(kx));
    }
    const double d = std::sqrt(r);
    return kind == EPKind::gain_loss ? d : d / std::sqrt(2.0);
}

std::array<cplx, 3> sorted_eigenvalues(const Mat3& H)
{
    std::vector<cplx> ev = eigvals(H);
    std::sort(ev.begin(), ev.end(), less_re_im);
    return {ev[0], ev[1], ev[2]};
}

std::vector<BandRow> bands_on_path(const ModelParams& p, const KPath& path)
{
    std::vector<BandRow> rows;
    if (path.vertices.size() < 2 || path.samples_per_segment < 1)
        return rows;
    const int S = path.samples_per_segment;
    double s0 = 0.0;
    for (size_t seg = 0; seg + 1 < path.vertices.size(); ++seg) {
        const auto& a = path.vertices[seg];
        const auto& b = path.vertices[seg + 1];
        const double len = std::hypot(b.kx - a.kx, b.ky - a.ky);
        for (int i = (seg == 0 ? 0 : 1); i <= S; ++i) {
            const double u = static_cast<double>(i) / S;
            MomentumPoint k{a.kx + u * (b.kx - a.kx), a.ky + u * (b.ky - a.ky)};
            rows.push_back({s0 + u * len, k.kx, k.ky, sorted_eigenvalues(bloch_hamiltonian(p, k))});
        }
        s0 += len;
    }
    return rows;
}

void write_bands_csv(std::ostream& os, const std::vector<BandRow>& rows)
{
    os << "s,kx,ky,reE1,imE1,reE2,imE2,reE3,imE3\n";
    for (const auto& r : rows) {
        os << fmt(r.s) << ',' << fmt(r.kx) << ',' << fmt(r.ky);
        for (const auto& e : r.E)
            os << ',' << fmt(e.real()) << ',' << fmt(e.imag());
        os << '\n';
    }
}

Mat3 parity_matrix()
{
    Mat3 P = Mat3::Zero();
    P(0, 2) = 1.0;
    P(1, 1) = 1.0;
    P(2, 0) = 1.0;
    return P;
}

double pt_commutator_norm(const ModelParams& p, const MomentumPoint& k)
{
    // T acts as complex conjugation of the Bloch matrix at the same k.
    const Mat3 H = bloch_hamiltonian(p, k);
    const Mat3 P = parity_matrix();
    return (P * H.conjugate() * P - H).norm();
}

}  // namespace dice
