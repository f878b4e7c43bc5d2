#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dice/linalg.hpp"

namespace dice {

using Mat3 = Eigen::Matrix3cd;

inline const double kDefaultHopping = 1.0 / std::sqrt(2.0);

struct ModelParams {
    double t = kDefaultHopping;
    double t2 = 0.0;
    double phi = 0.0;
    double m = 0.0;
    double delta = 0.0;
    double gamma = 0.0;

    bool hermitian() const { return delta == 0.0 && gamma == 0.0; }
};

// Momenta in units of 2*pi/a.
struct MomentumPoint {
    double kx = 0.0;
    double ky = 0.0;
};

namespace hs {
inline constexpr MomentumPoint Gamma{0.0, 0.0};
inline constexpr MomentumPoint K{2.0 / 3.0, 0.0};
inline constexpr MomentumPoint Kp{-2.0 / 3.0, 0.0};
inline constexpr MomentumPoint M{1.0, 0.0};
}  // namespace hs

struct KPath {
    std::vector<MomentumPoint> vertices;
    int samples_per_segment = 50;
};

// M - K' - Gamma - K - M
KPath standard_path(int samples_per_segment);

enum Sublattice : int { SubA = 0, SubB = 1, SubC = 2 };

// Lattice geometry, a = 1. B sits at the cell origin, A at +d1, C at -d1.
//   a1 = (1, 0), a2 = (1/2, sqrt(3)/2)
//   d1 = (0, 1/sqrt(3))            vertical bond, carries the non-reciprocity
//   d2 = (1/2, -1/(2 sqrt(3)))
//   d3 = (-1/2, -1/(2 sqrt(3)))
// Next-nearest neighbours of A (and C) are the six +-a-type vectors
//   v1 = -a1 + a2, v2 = -a2, v3 = a1   (counterclockwise about B, e^{+i phi} on A)
// and their negatives; C carries the opposite chirality.
Eigen::Vector2d bravais(int n1, int n2);
std::array<Eigen::Vector2d, 3> nn_vectors();
std::array<Eigen::Vector2d, 6> nnn_vectors();

// One term <to, R| H |from, 0>, with R = n1 a1 + n2 a2 the displacement of
// the target cell. The full amplitude is amp + gamma_sign * gamma.
struct Hop {
    int to;
    int from;
    int n1;
    int n2;
    cplx amp;
    int gamma_sign;
};

std::vector<Hop> hopping_list(const ModelParams& p);

Mat3 bloch_hamiltonian(const ModelParams& p, const MomentumPoint& k);
// Same matrix in reduced coordinates k = f1 b1 + f2 b2.
Mat3 bloch_reduced(const ModelParams& p, double f1, double f2);

std::pair<cplx, cplx> analytic_dispersion_delta(double kx, double delta);

enum class EPKind { gain_loss, nonreciprocal };
double analytic_ep_locus(double kx, EPKind kind);

struct BandRow {
    double s;
    double kx;
    double ky;
    std::array<cplx, 3> E;
};

std::array<cplx, 3> sorted_eigenvalues(const Mat3& H);
std::vector<BandRow> bands_on_path(const ModelParams& p, const KPath& path);
void write_bands_csv(std::ostream& os, const std::vector<BandRow>& rows);

// A <-> C exchange.
Mat3 parity_matrix();
double pt_commutator_norm(const ModelParams& p, const MomentumPoint& k);

}  // namespace dice
