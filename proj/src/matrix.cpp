#include "alignnet/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace alignnet {

// ---- RNG: splitmix64 seeding + xoshiro256++ ----

static uint64_t splitmix64(uint64_t &x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngState::RngState(uint64_t seed) {
    uint64_t x = seed;
    for (auto &w : s) w = splitmix64(x);
}

static inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

uint64_t RngState::next_u64() {
    uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double RngState::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t RngState::next_below(uint64_t n) {
    // rejection sampling, unbiased
    uint64_t threshold = (0 - n) % n;
    for (;;) {
        uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

void RngState::next_normal_pair(double &z0, double &z1) {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    z0 = r * std::cos(t);
    z1 = r * std::sin(t);
}

double RngState::next_normal() {
    double z0, z1;
    next_normal_pair(z0, z1);
    return z0;
}

RngState RngState::derive(uint64_t stream_index) const {
    uint64_t x = s[0] ^ rotl(s[2], 17) ^ (stream_index * 0xd1342543de82ef95ULL + 1);
    RngState out(0);
    for (auto &w : out.s) w = splitmix64(x);
    return out;
}

DenseMatrix gaussian(RngState &rng, std::size_t rows, std::size_t cols,
                     double mean, double std) {
    if (std < 0.0) throw InvalidArgument("gaussian: std must be >= 0");
    DenseMatrix m(rows, cols);
    std::size_t n = m.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        double z0, z1;
        rng.next_normal_pair(z0, z1);
        m.data[i] = mean + std * z0;
        m.data[i + 1] = mean + std * z1;
    }
    if (i < n) {
        double z0, z1;
        rng.next_normal_pair(z0, z1);
        m.data[i] = mean + std * z0;
    }
    return m;
}

// ---- matmul ----

static void check_mm(std::size_t ak, std::size_t bk, const char *name) {
    if (ak != bk) {
        throw ShapeError(std::string(name) + ": inner dimensions disagree (" +
                         std::to_string(ak) + " vs " + std::to_string(bk) + ")");
    }
}

namespace serial {

DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b) {
    check_mm(a.cols, b.rows, "matmul");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double av = a(i, k);
            for (std::size_t j = 0; j < b.cols; ++j)
                c(i, j) += av * b(k, j);
        }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix &a, const DenseMatrix &b) {
    check_mm(a.cols, b.cols, "matmul_nt");
    DenseMatrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k)
                s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix &a, const DenseMatrix &b) {
    check_mm(a.rows, b.rows, "matmul_tn");
    DenseMatrix c(a.cols, b.cols);
    for (std::size_t j = 0; j < a.cols; ++j)
        for (std::size_t i = 0; i < a.rows; ++i) {
            double av = a(i, j);
            for (std::size_t k = 0; k < b.cols; ++k)
                c(j, k) += av * b(i, k);
        }
    return c;
}

} // namespace serial

DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b) {
    check_mm(a.cols, b.rows, "matmul");
    DenseMatrix c(a.rows, b.cols);
    const std::size_t m = a.rows, kk = a.cols, n = b.cols;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        double *cr = c.row_ptr(i);
        const double *ar = a.row_ptr(i);
        std::size_t k = 0;
        for (; k + 4 <= kk; k += 4) {
            double a0 = ar[k], a1 = ar[k + 1], a2 = ar[k + 2], a3 = ar[k + 3];
            const double *b0 = b.row_ptr(k), *b1 = b.row_ptr(k + 1);
            const double *b2 = b.row_ptr(k + 2), *b3 = b.row_ptr(k + 3);
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j)
                cr[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (; k < kk; ++k) {
            double av = ar[k];
            const double *br = b.row_ptr(k);
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j)
                cr[j] += av * br[j];
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix &a, const DenseMatrix &b) {
    check_mm(a.cols, b.cols, "matmul_nt");
    DenseMatrix c(a.rows, b.rows);
    const std::size_t m = a.rows, n = b.rows, kk = a.cols;
    // Register-blocked 8x2 dot products; wide row blocks amortize streaming b.
    // Each output element keeps its own reduction, so results do not depend
    // on the thread count or on how rows are grouped into blocks.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ib = 0; ib < static_cast<std::ptrdiff_t>((m + 7) / 8); ++ib) {
        std::size_t i = static_cast<std::size_t>(ib) * 8;
        if (i + 8 <= m) {
            const double *ar[8];
            for (std::size_t r = 0; r < 8; ++r) ar[r] = a.row_ptr(i + r);
            std::size_t j = 0;
            for (; j + 2 <= n; j += 2) {
                const double *b0 = b.row_ptr(j), *b1 = b.row_ptr(j + 1);
                const double *a0 = ar[0], *a1 = ar[1], *a2 = ar[2], *a3 = ar[3];
                const double *a4 = ar[4], *a5 = ar[5], *a6 = ar[6], *a7 = ar[7];
                double s00 = 0, s10 = 0, s20 = 0, s30 = 0;
                double s40 = 0, s50 = 0, s60 = 0, s70 = 0;
                double s01 = 0, s11 = 0, s21 = 0, s31 = 0;
                double s41 = 0, s51 = 0, s61 = 0, s71 = 0;
#pragma omp simd reduction(+ : s00, s10, s20, s30, s40, s50, s60, s70, \
                               s01, s11, s21, s31, s41, s51, s61, s71)
                for (std::size_t t = 0; t < kk; ++t) {
                    double y0 = b0[t], y1 = b1[t];
                    s00 += a0[t] * y0; s01 += a0[t] * y1;
                    s10 += a1[t] * y0; s11 += a1[t] * y1;
                    s20 += a2[t] * y0; s21 += a2[t] * y1;
                    s30 += a3[t] * y0; s31 += a3[t] * y1;
                    s40 += a4[t] * y0; s41 += a4[t] * y1;
                    s50 += a5[t] * y0; s51 += a5[t] * y1;
                    s60 += a6[t] * y0; s61 += a6[t] * y1;
                    s70 += a7[t] * y0; s71 += a7[t] * y1;
                }
                c(i, j) = s00; c(i, j + 1) = s01;
                c(i + 1, j) = s10; c(i + 1, j + 1) = s11;
                c(i + 2, j) = s20; c(i + 2, j + 1) = s21;
                c(i + 3, j) = s30; c(i + 3, j + 1) = s31;
                c(i + 4, j) = s40; c(i + 4, j + 1) = s41;
                c(i + 5, j) = s50; c(i + 5, j + 1) = s51;
                c(i + 6, j) = s60; c(i + 6, j + 1) = s61;
                c(i + 7, j) = s70; c(i + 7, j + 1) = s71;
            }
            for (; j < n; ++j) {
                const double *br = b.row_ptr(j);
                for (std::size_t r = 0; r < 8; ++r) {
                    const double *arow = ar[r];
                    double s = 0;
#pragma omp simd reduction(+ : s)
                    for (std::size_t t = 0; t < kk; ++t) s += arow[t] * br[t];
                    c(i + r, j) = s;
                }
            }
        } else {
            for (; i < m; ++i) {
                const double *arow = a.row_ptr(i);
                for (std::size_t j = 0; j < n; ++j) {
                    const double *br = b.row_ptr(j);
                    double s = 0;
#pragma omp simd reduction(+ : s)
                    for (std::size_t t = 0; t < kk; ++t) s += arow[t] * br[t];
                    c(i, j) = s;
                }
            }
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix &a, const DenseMatrix &b) {
    check_mm(a.rows, b.rows, "matmul_tn");
    DenseMatrix c(a.cols, b.cols);
    const std::size_t m = a.rows, n = a.cols, kk = b.cols;
    // Four output rows share each sweep over b, so b is streamed n/4 times
    // instead of n.  Every c element still accumulates over i in the same
    // 4-term chunks, independent of thread count and of this row grouping.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jb = 0; jb < static_cast<std::ptrdiff_t>((n + 3) / 4); ++jb) {
        std::size_t j = static_cast<std::size_t>(jb) * 4;
        std::size_t jw = std::min<std::size_t>(4, n - j);
        if (jw == 4) {
            double *c0 = c.row_ptr(j), *c1 = c.row_ptr(j + 1);
            double *c2 = c.row_ptr(j + 2), *c3 = c.row_ptr(j + 3);
            std::size_t i = 0;
            for (; i + 4 <= m; i += 4) {
                const double *b0 = b.row_ptr(i), *b1 = b.row_ptr(i + 1);
                const double *b2 = b.row_ptr(i + 2), *b3 = b.row_ptr(i + 3);
                double a00 = a(i, j), a10 = a(i + 1, j), a20 = a(i + 2, j), a30 = a(i + 3, j);
                double a01 = a(i, j + 1), a11 = a(i + 1, j + 1), a21 = a(i + 2, j + 1),
                       a31 = a(i + 3, j + 1);
                double a02 = a(i, j + 2), a12 = a(i + 1, j + 2), a22 = a(i + 2, j + 2),
                       a32 = a(i + 3, j + 2);
                double a03 = a(i, j + 3), a13 = a(i + 1, j + 3), a23 = a(i + 2, j + 3),
                       a33 = a(i + 3, j + 3);
#pragma omp simd
                for (std::size_t k = 0; k < kk; ++k) {
                    double y0 = b0[k], y1 = b1[k], y2 = b2[k], y3 = b3[k];
                    c0[k] += a00 * y0 + a10 * y1 + a20 * y2 + a30 * y3;
                    c1[k] += a01 * y0 + a11 * y1 + a21 * y2 + a31 * y3;
                    c2[k] += a02 * y0 + a12 * y1 + a22 * y2 + a32 * y3;
                    c3[k] += a03 * y0 + a13 * y1 + a23 * y2 + a33 * y3;
                }
            }
            for (; i < m; ++i) {
                const double *br = b.row_ptr(i);
                double a0 = a(i, j), a1 = a(i, j + 1), a2 = a(i, j + 2), a3 = a(i, j + 3);
#pragma omp simd
                for (std::size_t k = 0; k < kk; ++k) {
                    double y = br[k];
                    c0[k] += a0 * y;
                    c1[k] += a1 * y;
                    c2[k] += a2 * y;
                    c3[k] += a3 * y;
                }
            }
        } else {
            for (std::size_t jj = j; jj < j + jw; ++jj) {
                double *cr = c.row_ptr(jj);
                std::size_t i = 0;
                for (; i + 4 <= m; i += 4) {
                    double a0 = a(i, jj), a1 = a(i + 1, jj), a2 = a(i + 2, jj),
                           a3 = a(i + 3, jj);
                    const double *b0 = b.row_ptr(i), *b1 = b.row_ptr(i + 1);
                    const double *b2 = b.row_ptr(i + 2), *b3 = b.row_ptr(i + 3);
#pragma omp simd
                    for (std::size_t k = 0; k < kk; ++k)
                        cr[k] += a0 * b0[k] + a1 * b1[k] + a2 * b2[k] + a3 * b3[k];
                }
                for (; i < m; ++i) {
                    double av = a(i, jj);
                    const double *br = b.row_ptr(i);
#pragma omp simd
                    for (std::size_t k = 0; k < kk; ++k)
                        cr[k] += av * br[k];
                }
            }
        }
    }
    return c;
}

// ---- helpers ----

DenseMatrix transpose(const DenseMatrix &a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            t(j, i) = a(i, j);
    return t;
}

double frobenius_norm(const DenseMatrix &a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double dot(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double> &a) {
    return std::sqrt(dot(a, a));
}

// ---- Jacobi eigensolver ----

std::pair<std::vector<double>, DenseMatrix> sym_eig(const DenseMatrix &a) {
    if (a.rows != a.cols)
        throw ShapeError("sym_eig: matrix must be square");
    const std::size_t n = a.rows;
    double scale = frobenius_norm(a);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(1.0, scale))
                throw ShapeError("sym_eig: matrix not symmetric");

    DenseMatrix w = a;
    DenseMatrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += w(p, q) * w(p, q);
        if (off <= 1e-30 * std::max(1.0, scale * scale)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = w(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double cs = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * cs;
                for (std::size_t k = 0; k < n; ++k) {
                    double wkp = w(k, p), wkq = w(k, q);
                    w(k, p) = cs * wkp - sn * wkq;
                    w(k, q) = sn * wkp + cs * wkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double wpk = w(p, k), wqk = w(q, k);
                    w(p, k) = cs * wpk - sn * wqk;
                    w(q, k) = sn * wpk + cs * wqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = cs * vkp - sn * vkq;
                    v(k, q) = sn * vkp + cs * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return w(x, x) > w(y, y); });

    std::vector<double> eigvals(n);
    DenseMatrix vecs(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        eigvals[c] = w(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) vecs(r, c) = v(r, order[c]);
    }
    return {eigvals, vecs};
}

} // namespace alignnet
