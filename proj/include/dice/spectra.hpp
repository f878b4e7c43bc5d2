#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dice/linalg.hpp"
#include "dice/model.hpp"

namespace dice {

struct BiorthogonalSystem {
    std::vector<cplx> eigenvalues;
    MatX right;  // columns psi_a, unit norm
    MatX left;   // columns phi_a, unit norm, phi_a^dagger H = lambda_a phi_a^dagger
    double pairing_residual = 0.0;
    bool degenerate_pairing = false;

    int size() const { return static_cast<int>(eigenvalues.size()); }
};

BiorthogonalSystem decompose(const MatX& H);

double phase_rigidity(const BiorthogonalSystem& sys, int alpha);
std::vector<double> phase_rigidities(const BiorthogonalSystem& sys);
double min_rigidity(const MatX& H);

enum class ParamKind { delta, gamma };

// One-parameter matrix family H(x).
using MatrixFamily = std::function<MatX(double)>;
MatrixFamily bloch_family(const ModelParams& p, const MomentumPoint& k, ParamKind kind);

struct FitWindow {
    double lo = 1e-4;
    double hi = 1e-1;
};

struct ScalingFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    int order = 0;  // round(2 slope + 1)
    std::vector<double> offsets;
    std::vector<double> rigidity;
};

// side = -1 samples below ep_value, +1 above.
ScalingFit rigidity_scaling_fit(const MatrixFamily& family, double ep_value, FitWindow window = {},
                                int n_samples = 40, int side = -1);
ScalingFit rigidity_scaling_fit(const ModelParams& p, const MomentumPoint& k, ParamKind kind,
                                double ep_value, FitWindow window = {}, int n_samples = 40,
                                int side = -1);

struct EPThresholds {
    double rigidity = 1e-6;
    double no_ep = 1e-3;
};

struct EPResult {
    double value = 0.0;
    int order = 0;  // 0 when the scaling fit could not resolve it
    double min_rigidity = 1.0;
};

// Golden-section minimum of the smallest rigidity over the bracket.
std::pair<double, double> minimize_rigidity(const MatrixFamily& family, std::pair<double, double> bracket);

EPResult find_ep(const MatrixFamily& family, std::pair<double, double> bracket,
                 EPThresholds th = {});
EPResult find_ep(const ModelParams& p, const MomentumPoint& k, ParamKind kind,
                 std::pair<double, double> bracket, EPThresholds th = {});

struct EPCandidate {
    double value;
    double kx;
    double ky;
    int order;
    int cluster_size;
};

struct RigidityScan {
    std::vector<double> parameter_values;
    std::vector<std::vector<double>> rigidities;  // per value, per state (eigenvalue order)
    std::vector<EPCandidate> ep_candidates;
};

RigidityScan rigidity_scan(const ModelParams& p, const MomentumPoint& k, ParamKind kind,
                           const std::vector<double>& values, int threads = 0);
nlohmann::json to_json(const RigidityScan& scan);

}  // namespace dice
