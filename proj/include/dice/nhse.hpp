#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dice/linalg.hpp"
#include "dice/model.hpp"
#include "dice/ribbon.hpp"

namespace dice {

struct SkinDiagnostics {
    std::vector<double> ldos;        // per site
    std::vector<double> ipr;         // per state, states ordered by (Re E, Im E)
    std::vector<double> edge_prob;   // per state
    std::vector<cplx> energies;      // per state
};

std::vector<double> ldos(const RealSpaceHamiltonian& H);
double ipr(const VecX& psi);
double edge_probability(const VecX& psi, const RibbonGeometry& geom, int x_edge = 5);

SkinDiagnostics diagnose(const RealSpaceHamiltonian& H, const RibbonGeometry& geom, int x_edge = 5);

// Mean of a per-site quantity over each distinct x (axis 0) or y (axis 1) position.
std::vector<double> position_profile(const std::vector<double>& per_site, const RibbonGeometry& geom, int axis);

struct SpectralAreaResult {
    double area = 0.0;           // energy^2
    long occupied_pixels = 0;
    long closed_pixels = 0;      // occupied plus enclosed after closing
    long core_pixels = 0;        // closed set eroded once more; arcs leave none
    int resolution = 0;
    int closing_radius = 0;      // pixels
    double re_min = 0, re_max = 0, im_min = 0, im_max = 0;  // square window
};

// closing_radius < 0 picks 2 px at resolution 512, scaled with resolution.
SpectralAreaResult spectral_area(const std::vector<cplx>& energies, int resolution = 512, int min_pixels = 16,
                                 int closing_radius = -1);

// |area(2 res) / area(res) - 1|; 0 when both vanish.
double spectral_area_drift(const std::vector<cplx>& energies, int resolution = 512, int min_pixels = 16);

enum class WindingGeometry { pbc_x_obc_y, pbc_y_obc_x };

struct WindingOptions {
    int n_open = 8;  // open-direction size (columns for pbc_y_obc_x, rows for pbc_x_obc_y)
};

// Phase winding of det(H_1D(theta) - e_ref) over theta in [0, 2 pi).
int spectral_winding(const ModelParams& p, WindingGeometry geometry, cplx e_ref, int n_k, WindingOptions opt = {});

struct WindingSummary {
    int max_abs_winding = 0;
    int n_references = 0;   // reference energies tested inside spectral loops
    std::vector<cplx> references;
    std::vector<int> windings;
};

// Maximum |W| over reference energies sampled inside the loops of the
// mixed-boundary spectrum (0 when the spectrum encloses nothing).
WindingSummary loop_winding(const ModelParams& p, WindingGeometry geometry, int n_k, WindingOptions opt = {},
                            int max_references = 48);

struct DisorderSweepResult {
    SkinDiagnostics mean;                  // rank-order averaged
    std::vector<double> pooled_ipr;        // every state of every realization
    std::vector<double> pooled_edge_prob;
    std::vector<double> realization_mean_edge_prob;
};

DisorderSweepResult disorder_sweep(const RibbonGeometry& geom, const ModelParams& p, const DisorderSpec& dis_template,
                                   int n_realizations, NonreciprocityRegion region = NonreciprocityRegion::bulk,
                                   int x_edge = 5, int threads = 0);

void write_state_csv(std::ostream& os, const SkinDiagnostics& d);
void write_site_csv(std::ostream& os, const SkinDiagnostics& d, const RibbonGeometry& geom);

}  // namespace dice
