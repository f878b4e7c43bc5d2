#include "dice/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include <lapacke.h>

#include "dice/errors.hpp"

extern "C" void openblas_set_num_threads(int);

namespace dice {

namespace {

std::atomic<int> g_default_threads{0};

void pin_blas_threads()
{
    // Parallelism is over independent problems; keep BLAS serial so results
    // do not depend on the thread count.
    static std::once_flag once;
    std::call_once(once, [] { openblas_set_num_threads(1); });
}

}  // namespace

EigResult eig(const MatX& H, bool want_vectors)
{
    pin_blas_threads();
    const lapack_int n = static_cast<lapack_int>(H.rows());
    if (H.rows() != H.cols())
        throw DimensionMismatch("eig needs a square matrix");
    EigResult out;
    if (n == 0)
        return out;
    MatX a = H;
    std::vector<lapack_complex_double> w(n);
    MatX vr;
    if (want_vectors)
        vr.resize(n, n);
    lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n,
        reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data(), nullptr, 1,
        want_vectors ? reinterpret_cast<lapack_complex_double*>(vr.data()) : nullptr,
        want_vectors ? n : 1);
    if (info != 0)
        throw ConvergenceFailure("zgeev returned info=" + std::to_string(info));
    out.values.resize(n);
    for (lapack_int i = 0; i < n; ++i)
        out.values[i] = reinterpret_cast<const cplx&>(w[i]);
    if (want_vectors) {
        for (lapack_int j = 0; j < n; ++j) {
            double nrm = vr.col(j).norm();
            if (nrm > 0)
                vr.col(j) /= nrm;
        }
        out.vectors = std::move(vr);
    }
    return out;
}

std::vector<cplx> eigvals(const MatX& H)
{
    return eig(H, false).values;
}

bool less_re_im(const cplx& a, const cplx& b)
{
    if (a.real() != b.real())
        return a.real() < b.real();
    return a.imag() < b.imag();
}

std::vector<int> sort_order(const std::vector<cplx>& values)
{
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int i, int j) { return less_re_im(values[i], values[j]); });
    return idx;
}

LogDet log_det(const MatX& M)
{
    Eigen::PartialPivLU<MatX> lu(M);
    const MatX& U = lu.matrixLU();
    double log_abs = 0.0, arg = 0.0;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        cplx u = U(i, i);
        log_abs += std::log(std::abs(u));
        arg += std::arg(u);
    }
    if (lu.permutationP().determinant() < 0)
        arg += M_PI;
    arg = std::remainder(arg, 2 * M_PI);
    return {log_abs, arg};
}

void set_default_threads(int n)
{
    g_default_threads = n;
}

int default_threads()
{
    int n = g_default_threads.load();
    if (n > 0)
        return n;
    if (const char* env = std::getenv("DICE_THREADS")) {
        int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    return 1;
}

int resolve_threads(int requested)
{
    return requested > 0 ? requested : default_threads();
}

void parallel_for(int n, int threads, const std::function<void(int)>& f)
{
    threads = std::max(1, std::min(resolve_threads(threads), n));
    if (threads <= 1) {
        for (int i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mu;
    int failed_at = n;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (err)
        std::rethrow_exception(err);
}

}  // namespace dice
