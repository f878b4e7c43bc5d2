#include "dice/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dice/errors.hpp"
#include "dice/io.hpp"

namespace dice {

namespace {

constexpr double kDegenerateTol = 1e-10;

// Inside a cluster of (numerically) equal eigenvalues the two solvers return
// unrelated bases; re-pick the left vectors so that L^dagger R = 1 on the
// cluster when the overlap is invertible.
void biorthogonalize_cluster(BiorthogonalSystem& sys, const std::vector<int>& idx)
{
    const int c = static_cast<int>(idx.size());
    MatX R(sys.right.rows(), c), L(sys.left.rows(), c);
    for (int j = 0; j < c; ++j) {
        R.col(j) = sys.right.col(idx[j]);
        L.col(j) = sys.left.col(idx[j]);
    }
    MatX S = L.adjoint() * R;
    Eigen::JacobiSVD<MatX> svd(S);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0) || sv(c - 1) < 1e-8 * sv(0))
        return;
    MatX Lnew = L * S.inverse().adjoint();
    for (int j = 0; j < c; ++j) {
        VecX v = Lnew.col(j);
        sys.left.col(idx[j]) = v / v.norm();
    }
}

}  // namespace

BiorthogonalSystem decompose(const MatX& H)
{
    if (H.rows() != H.cols() || H.rows() == 0)
        throw DimensionMismatch("decompose needs a nonempty square matrix");
    if (!H.allFinite())
        throw ConvergenceFailure("matrix has non-finite entries");
    const int n = static_cast<int>(H.rows());
    EigResult r = eig(H);
    EigResult l = eig(H.adjoint());

    struct Cand {
        double d;
        int i, j;
    };
    std::vector<Cand> cands;
    cands.reserve(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cands.push_back({std::abs(std::conj(l.values[j]) - r.values[i]), i, j});
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.d < b.d; });

    std::vector<int> match(n, -1);
    std::vector<char> used(n, 0);
    double residual = 0.0;
    int done = 0;
    for (const auto& c : cands) {
        if (match[c.i] >= 0 || used[c.j])
            continue;
        match[c.i] = c.j;
        used[c.j] = 1;
        residual = std::max(residual, c.d);
        if (++done == n)
            break;
    }

    BiorthogonalSystem sys;
    sys.eigenvalues = r.values;
    sys.right = std::move(r.vectors);
    sys.left.resize(n, n);
    for (int i = 0; i < n; ++i)
        sys.left.col(i) = l.vectors.col(match[i]);
    sys.pairing_residual = residual;

    const double scale = std::max(1.0, H.norm());
    std::vector<char> seen(n, 0);
    for (int i = 0; i < n; ++i) {
        if (seen[i])
            continue;
        std::vector<int> cluster{i};
        for (int j = i + 1; j < n; ++j)
            if (!seen[j] && std::abs(sys.eigenvalues[i] - sys.eigenvalues[j]) < kDegenerateTol * scale)
                cluster.push_back(j);
        for (int j : cluster)
            seen[j] = 1;
        if (cluster.size() > 1) {
            sys.degenerate_pairing = true;
            biorthogonalize_cluster(sys, cluster);
        }
    }
    return sys;
}

double phase_rigidity(const BiorthogonalSystem& sys, int alpha)
{
    return std::abs(sys.left.col(alpha).dot(sys.right.col(alpha)));
}

std::vector<double> phase_rigidities(const BiorthogonalSystem& sys)
{
    std::vector<double> r(sys.size());
    for (int a = 0; a < sys.size(); ++a)
        r[a] = phase_rigidity(sys, a);
    return r;
}

double min_rigidity(const MatX& H)
{
    auto r = phase_rigidities(decompose(H));
    return *std::min_element(r.begin(), r.end());
}

MatrixFamily bloch_family(const ModelParams& p, const MomentumPoint& k, ParamKind kind)
{
    return [p, k, kind](double x) {
        ModelParams q = p;
        (kind == ParamKind::delta ? q.delta : q.gamma) = x;
        return MatX(bloch_hamiltonian(q, k));
    };
}

ScalingFit rigidity_scaling_fit(const MatrixFamily& family, double ep_value, FitWindow window,
                                int n_samples, int side)
{
    if (!(window.lo > 0 && window.lo < window.hi) || n_samples < 3)
        throw InsufficientDynamicRange("invalid fit window");
    ScalingFit fit;
    std::vector<double> lx, ly;
    const double ratio = std::log(window.hi / window.lo);
    for (int i = 0; i < n_samples; ++i) {
        const double off = window.lo * std::exp(ratio * i / (n_samples - 1));
        const double r = min_rigidity(family(ep_value + (side < 0 ? -off : off)));
        fit.offsets.push_back(off);
        fit.rigidity.push_back(r);
        lx.push_back(std::log(off));
        ly.push_back(std::log(std::max(r, 1e-300)));
    }
    const auto [rmin, rmax] = std::minmax_element(fit.rigidity.begin(), fit.rigidity.end());
    if (!(*rmin > 0) || *rmax / *rmin < 10.0)
        throw InsufficientDynamicRange("rigidity varies by less than one decade across the window");

    const double n = n_samples;
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n_samples; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    const double b = my - fit.slope * mx;
    double ssr = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double e = ly[i] - (fit.slope * lx[i] + b);
        ssr += e * e;
    }
    fit.stderr_slope = std::sqrt(ssr / (n - 2) / sxx);
    fit.order = static_cast<int>(std::lround(2.0 * fit.slope + 1.0));
    return fit;
}

ScalingFit rigidity_scaling_fit(const ModelParams& p, const MomentumPoint& k, ParamKind kind,
                                double ep_value, FitWindow window, int n_samples, int side)
{
    return rigidity_scaling_fit(bloch_family(p, k, kind), ep_value, window, n_samples, side);
}

std::pair<double, double> minimize_rigidity(const MatrixFamily& family, std::pair<double, double> bracket)
{
    auto g = [&](double x) { return min_rigidity(family(x)); };
    double a = std::min(bracket.first, bracket.second);
    double b = std::max(bracket.first, bracket.second);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d);
        }
    }
    return gc < gd ? std::make_pair(c, gc) : std::make_pair(d, gd);
}

EPResult find_ep(const MatrixFamily& family, std::pair<double, double> bracket, EPThresholds th)
{
    const auto [xmin, rmin] = minimize_rigidity(family, bracket);
    EPResult res;
    res.value = xmin;
    res.min_rigidity = rmin;
    if (res.min_rigidity > th.no_ep)
        throw NoEPInBracket("minimal rigidity " + fmt(res.min_rigidity) + " in [" + fmt(bracket.first) +
                            ", " + fmt(bracket.second) + "]");
    if (res.min_rigidity < th.rigidity) {
        for (int side : {-1, 1}) {
            try {
                res.order = rigidity_scaling_fit(family, res.value, {}, 40, side).order;
                break;
            } catch (const InsufficientDynamicRange&) {
            }
        }
    }
    return res;
}

EPResult find_ep(const ModelParams& p, const MomentumPoint& k, ParamKind kind,
                 std::pair<double, double> bracket, EPThresholds th)
{
    return find_ep(bloch_family(p, k, kind), bracket, th);
}

RigidityScan rigidity_scan(const ModelParams& p, const MomentumPoint& k, ParamKind kind,
                           const std::vector<double>& values, int threads)
{
    RigidityScan scan;
    scan.parameter_values = values;
    scan.rigidities.resize(values.size());
    std::vector<double> rmin(values.size());
    auto fam = bloch_family(p, k, kind);
    parallel_for(static_cast<int>(values.size()), threads, [&](int i) {
        BiorthogonalSystem sys = decompose(fam(values[i]));
        auto order = sort_order(sys.eigenvalues);
        std::vector<double> r;
        for (int a : order)
            r.push_back(phase_rigidity(sys, a));
        rmin[i] = *std::min_element(r.begin(), r.end());
        scan.rigidities[i] = std::move(r);
    });
    for (size_t i = 1; i + 1 < values.size(); ++i) {
        if (!(rmin[i] <= rmin[i - 1] && rmin[i] <= rmin[i + 1] && rmin[i] < 1e-2))
            continue;
        try {
            EPResult ep = find_ep(fam, {values[i - 1], values[i + 1]});
            BiorthogonalSystem sys = decompose(fam(ep.value));
            auto r = phase_rigidities(sys);
            int a = static_cast<int>(std::min_element(r.begin(), r.end()) - r.begin());
            int cluster = 0;
            for (const auto& e : sys.eigenvalues)
                if (std::abs(e - sys.eigenvalues[a]) < 1e-3)
                    ++cluster;
            scan.ep_candidates.push_back({ep.value, k.kx, k.ky, ep.order, cluster});
        } catch (const NoEPInBracket&) {
        }
    }
    return scan;
}

nlohmann::json to_json(const RigidityScan& scan)
{
    nlohmann::json j;
    j["param"] = scan.parameter_values;
    j["rigidity"] = scan.rigidities;
    j["ep_candidates"] = nlohmann::json::array();
    for (const auto& c : scan.ep_candidates)
        j["ep_candidates"].push_back(
            {{"value", c.value}, {"kx", c.kx}, {"ky", c.ky}, {"order", c.order}, {"cluster_size", c.cluster_size}});
    return j;
}

}  // namespace dice
