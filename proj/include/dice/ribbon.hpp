#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dice/linalg.hpp"
#include "dice/model.hpp"

namespace dice {

enum class Boundary { open, periodic };

struct Site {
    int id;
    int sublattice;  // SubA, SubB, SubC
    double x;
    double y;
    int col;
    int row;
    int x_index;  // rank of x among distinct x positions
    int y_index;  // rank of y among distinct y positions
};

// Ribbon frame: the lattice rotated by +90 degrees, so the vertical
// (non-reciprocal) bond runs along ribbon x. Cell (col c, row i) is the
// lattice cell n1 = i + ceil(c/2), n2 = -c. Columns are spaced sqrt(3)/2
// along x, odd columns are shifted by 1/2 along y. A, B, C of a column sit
// at x offsets -d, 0, +d (d = 1/sqrt(3)), so nx columns give 3 nx distinct
// x positions and 72 x 36 sites corresponds to nx = 24, ny = 36.
struct RibbonGeometry {
    int nx = 0;
    int ny = 0;
    Boundary bc_x = Boundary::open;
    Boundary bc_y = Boundary::open;
    std::vector<Site> site_table;
    int n_x_positions = 0;
    int n_y_positions = 0;

    int size() const { return static_cast<int>(site_table.size()); }
    static int site_id(int col, int row, int sub, int ny) { return 3 * (col * ny + row) + sub; }
};

RibbonGeometry make_geometry(int nx, int ny, Boundary bc_x, Boundary bc_y);
void validate(const RibbonGeometry& g);
nlohmann::json geometry_json(const RibbonGeometry& g);

enum class NonreciprocityRegion { bulk, edges_only, none };
enum class DisorderKind { real, imaginary, complex };

struct DisorderSpec {
    double strength = 0.0;
    DisorderKind kind = DisorderKind::complex;
    std::uint64_t seed = 0;
};

std::vector<cplx> disorder_potential(int n, const DisorderSpec& dis);
// Seed of realization i derived from a base seed (splitmix64 counter mode).
std::uint64_t realization_seed(std::uint64_t base, std::uint64_t i);

struct Entry {
    int row;
    int col;
    cplx value;
};

struct RealSpaceHamiltonian {
    int dimension = 0;
    std::vector<Entry> entries;  // row-major sorted, duplicates merged

    MatX dense() const;
    void write_coo(std::ostream& os) const;
};

RealSpaceHamiltonian build_ribbon(const RibbonGeometry& geom, const ModelParams& p,
                                  const std::optional<DisorderSpec>& dis = std::nullopt,
                                  NonreciprocityRegion region = NonreciprocityRegion::bulk);
// Twisted boundary conditions on periodic axes (phase per wrap).
RealSpaceHamiltonian build_ribbon_twisted(const RibbonGeometry& geom, const ModelParams& p,
                                          const std::optional<DisorderSpec>& dis,
                                          NonreciprocityRegion region, double twist_x, double twist_y);

// Union of spectra of an nx x ny torus over an n_twist x n_twist grid of twists
// (equivalently an (n_twist nx) x (n_twist ny) momentum mesh).
std::vector<cplx> torus_spectrum(const ModelParams& p, int nx, int ny, int n_twist, int threads = 0);

// Cylinder periodic along ribbon x, open along y; k in units of 2 pi / L with
// L = sqrt(3) the two-column supercell period.
struct RibbonBands {
    int ny = 0;
    std::vector<double> k;
    std::vector<std::vector<cplx>> energies;  // sorted by (Re, Im)
};

RibbonBands ribbon_bands_kx(const ModelParams& p, int ny, int n_k, int threads = 0);
void write_ribbon_bands_csv(std::ostream& os, const RibbonBands& b);

struct EdgeStateOptions {
    double flat_band_cutoff = 0.01;  // |Re E| below this is the flat band
    double edge_weight = 0.5;
    int edge_width = 5;  // y positions counted as edge on each side
};

struct EdgeStateStats {
    int n_edge_states = 0;
    int n_dissipation_free = 0;
    double window = 0.0;  // upper |Re E| bound (half the Hermitian bulk gap)
    double fraction() const { return n_edge_states ? double(n_dissipation_free) / n_edge_states : 0.0; }
};

// Smallest Hermitian direct band separation over a Bloch mesh.
double hermitian_bulk_gap(const ModelParams& p, int grid_n = 96);

EdgeStateStats edge_state_stats(const ModelParams& p, int ny, int n_k, double dissipation_tol,
                                EdgeStateOptions opt = {}, int threads = 0);
double edge_state_fraction(const ModelParams& p, int ny, int n_k, double dissipation_tol,
                           EdgeStateOptions opt = {}, int threads = 0);

struct CriticalDeltaScan {
    std::vector<double> delta;
    std::vector<double> fraction;
    double delta_c = 0.0;  // last delta before the fraction first drops below the threshold
};

CriticalDeltaScan edge_state_critical_delta(const ModelParams& p, int ny, int n_k, double dissipation_tol,
                                            double step = 0.05, double delta_max = 2.0,
                                            double threshold = 0.05, int threads = 0);

}  // namespace dice
