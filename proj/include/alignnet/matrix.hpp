#ifndef ALIGNNET_MATRIX_HPP
#define ALIGNNET_MATRIX_HPP

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "alignnet/common.hpp"

namespace alignnet {

/// Row-major dense matrix of doubles; the universal numeric carrier.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double value = 0.0)
        : rows(r), cols(c), data(r * c, value) {}

    double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double *row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double *row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return rows * cols; }
    bool same_shape(const DenseMatrix &o) const { return rows == o.rows && cols == o.cols; }
};

/// Counter-free xoshiro256++ state. Value semantics: every stochastic
/// operation takes the state by reference and advances it deterministically,
/// so identical seeds give bit-identical streams.
struct RngState {
    uint64_t s[4];

    explicit RngState(uint64_t seed = 0);

    uint64_t next_u64();
    /// Uniform in [0, 1).
    double next_double();
    /// Uniform integer in [0, n).
    uint64_t next_below(uint64_t n);
    /// Standard normal via Box-Muller (two uniforms per pair, no cached spare).
    void next_normal_pair(double &z0, double &z1);
    double next_normal();
    /// Derive an independent stream, e.g. per probe or per trial.
    RngState derive(uint64_t stream_index) const;
};

// ---- random matrices ----

/// Entries i.i.d. N(mean, std^2). std must be >= 0.
DenseMatrix gaussian(RngState &rng, std::size_t rows, std::size_t cols,
                     double mean, double std);

// ---- matmul kernels ----
//
// Three layouts cover every product in the engine without explicit
// transposes:
//   matmul    C = A * B          (A: m x k, B: k x n)
//   matmul_nt C = A * B^T        (A: m x k, B: n x k)
//   matmul_tn C = A^T * B        (A: k x m, B: k x n)
// The default kernels are OpenMP-parallel over output rows with the same
// per-element accumulation order as the serial versions, so results are
// independent of thread count.

DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b);
DenseMatrix matmul_nt(const DenseMatrix &a, const DenseMatrix &b);
DenseMatrix matmul_tn(const DenseMatrix &a, const DenseMatrix &b);

/// Naive single-threaded reference kernels, kept for testing and benchmarks.
namespace serial {
DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b);
DenseMatrix matmul_nt(const DenseMatrix &a, const DenseMatrix &b);
DenseMatrix matmul_tn(const DenseMatrix &a, const DenseMatrix &b);
} // namespace serial

// ---- small helpers ----

DenseMatrix transpose(const DenseMatrix &a);
double frobenius_norm(const DenseMatrix &a);
double dot(const std::vector<double> &a, const std::vector<double> &b);
double norm2(const std::vector<double> &a);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues returned descending; eigenvectors are the matching columns.
/// Intended for matrices up to a few hundred rows (test oracles, Gram PCA).
std::pair<std::vector<double>, DenseMatrix> sym_eig(const DenseMatrix &a);

} // namespace alignnet

#endif
