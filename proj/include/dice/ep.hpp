#pragma once

#include <array>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dice/model.hpp"
#include "dice/spectra.hpp"

namespace dice {

struct PhaseDiagramGrid {
    std::vector<double> delta_axis;
    std::vector<double> mass_ratio_axis;  // m/t2, or absolute m when absolute_mass is set
    std::vector<std::vector<double>> rigidity;  // [delta][mass]
    bool absolute_mass = false;

    // Cells with rigidity below the threshold.
    std::vector<std::pair<int, int>> exceptional_cells(double threshold = 1e-3) const;
};

struct PhaseDiagramOptions {
    double t = kDefaultHopping;
    bool absolute_mass = false;
    int threads = 0;
};

PhaseDiagramGrid ep_phase_diagram(const MomentumPoint& k, std::pair<double, double> delta_range,
                                  std::pair<double, double> mass_range, double t2, double phi,
                                  std::pair<int, int> resolution, PhaseDiagramOptions opt = {});
void write_phase_csv(std::ostream& os, const PhaseDiagramGrid& g);
void write_phase_svg(std::ostream& os, const PhaseDiagramGrid& g);

struct EPLocation {
    double kx = 0.0;
    double value = 0.0;
    int order = 0;
    double min_rigidity = 1.0;
};

// Joint minimum of the smallest rigidity over kx (ky = 0) and the
// non-Hermitian strength. Throws NoEPInBracket when it stays above 1e-3.
EPLocation locate_ep_on_kx_axis(const ModelParams& p, ParamKind kind, std::pair<double, double> kx_bracket,
                                std::pair<double, double> param_bracket);

// Lattice field-strength Chern number of a Hermitian band (0 = lowest).
int chern_number(const ModelParams& p, int band, int grid_n);
std::array<int, 3> chern_numbers(const ModelParams& p, int grid_n);

enum class GapClass { AG, VG, CG, metallic };
const char* to_string(GapClass g);

struct HermitianPhase {
    std::array<int, 3> chern_numbers{};
    bool chern_defined = false;
    GapClass gap_class = GapClass::metallic;
    bool in_topological_region = false;
    std::array<std::pair<double, double>, 3> band_ranges{};
};

HermitianPhase classify_gap(const ModelParams& p, int grid_n);

// Mass at which the A and C levels cross at K or K' (absolute energy).
double critical_mass(double t2, double phi, double t = kDefaultHopping);

}  // namespace dice
