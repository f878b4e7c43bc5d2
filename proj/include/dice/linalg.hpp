#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace dice {

using cplx = std::complex<double>;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;

struct EigResult {
    std::vector<cplx> values;
    MatX vectors;  // columns, unit-normalized; empty when not requested
};

// General complex eigenproblem (LAPACK zgeev). Throws ConvergenceFailure.
EigResult eig(const MatX& H, bool want_vectors = true);
std::vector<cplx> eigvals(const MatX& H);

// Lexicographic (Re, Im) order.
bool less_re_im(const cplx& a, const cplx& b);
std::vector<int> sort_order(const std::vector<cplx>& values);

// Principal arg of det(M) via LU with partial pivoting; returns log|det| too.
struct LogDet {
    double log_abs;
    double arg;
};
LogDet log_det(const MatX& M);

// Number of worker threads: explicit value if > 0, else DICE_THREADS, else 1.
int resolve_threads(int requested);
void set_default_threads(int n);
int default_threads();

// Calls f(i) for i in [0, n) on up to `threads` workers. f must only write to
// slot i of its outputs.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

}  // namespace dice
