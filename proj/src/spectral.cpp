#include "alignnet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace alignnet {

HessianOracle::HessianOracle(NetworkParams params, DenseMatrix inputs,
                             std::vector<int> labels)
    : params_(std::move(params)), inputs_(std::move(inputs)),
      labels_(std::move(labels)) {
    if (inputs_.rows != labels_.size())
        throw ShapeError("HessianOracle: batch size mismatch");
    dim_ = params_.param_count();
}

double HessianOracle::loss() const {
    ForwardCache cache = forward(params_, inputs_);
    return loss_and_output_delta(cache, labels_).first;
}

std::vector<double> HessianOracle::gradient() const {
    ForwardCache cache = forward(params_, inputs_);
    auto [l, delta] = loss_and_output_delta(cache, labels_);
    (void)l;
    BackwardRule bp{RuleKind::ExactTranspose, nullptr};
    ParamGrads g = backward(bp, params_, cache, delta);
    NetworkParams as_params;
    as_params.W = std::move(g.gW);
    as_params.b = std::move(g.gb);
    return flatten_params(as_params);
}

double HessianOracle::loss_at(const std::vector<double> &flat) const {
    NetworkParams p = unflatten_params(flat, params_);
    ForwardCache cache = forward(p, inputs_);
    return loss_and_output_delta(cache, labels_).first;
}

std::vector<double> HessianOracle::hvp(const std::vector<double> &v) const {
    if (v.size() != dim_)
        throw ShapeError("hvp: vector length " + std::to_string(v.size()) +
                         " != parameter count " + std::to_string(dim_));
    const NetworkParams &p = params_;
    const std::size_t L = p.layer_count();
    NetworkParams dir = unflatten_params(v, p); // (dW, db)

    // Forward pass with tangents.
    std::vector<DenseMatrix> act(L + 1), dact(L + 1), pre(L), dpre(L);
    act[0] = inputs_;
    dact[0] = DenseMatrix(inputs_.rows, inputs_.cols);
    for (std::size_t l = 0; l < L; ++l) {
        pre[l] = matmul_nt(act[l], p.W[l]);
        dpre[l] = matmul_nt(act[l], dir.W[l]);
        DenseMatrix t = matmul_nt(dact[l], p.W[l]);
        for (std::size_t k = 0; k < dpre[l].data.size(); ++k)
            dpre[l].data[k] += t.data[k];
        for (std::size_t i = 0; i < pre[l].rows; ++i) {
            double *o = pre[l].row_ptr(i);
            double *od = dpre[l].row_ptr(i);
            for (std::size_t j = 0; j < pre[l].cols; ++j) {
                o[j] += p.b[l][j];
                od[j] += dir.b[l][j];
            }
        }
        if (l + 1 < L) {
            act[l + 1] = pre[l];
            dact[l + 1] = dpre[l];
            for (std::size_t k = 0; k < pre[l].data.size(); ++k) {
                if (pre[l].data[k] <= 0.0) {
                    act[l + 1].data[k] = 0.0;
                    dact[l + 1].data[k] = 0.0;
                } // relu'(0) := 0, relu'' := 0
            }
        }
    }

    // Softmax tangent: dp = p o (dz - rowdot(p, dz)).
    const DenseMatrix &z = pre[L - 1];
    const DenseMatrix &dz = dpre[L - 1];
    DenseMatrix probs(z.rows, z.cols), dp(z.rows, z.cols);
    for (std::size_t i = 0; i < z.rows; ++i) {
        const double *zr = z.row_ptr(i);
        const double *dzr = dz.row_ptr(i);
        double *pr = probs.row_ptr(i);
        double *dpr = dp.row_ptr(i);
        double mx = zr[0];
        for (std::size_t j = 1; j < z.cols; ++j) mx = std::max(mx, zr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < z.cols; ++j) {
            pr[j] = std::exp(zr[j] - mx);
            sum += pr[j];
        }
        double pdz = 0.0;
        for (std::size_t j = 0; j < z.cols; ++j) {
            pr[j] /= sum;
            pdz += pr[j] * dzr[j];
        }
        for (std::size_t j = 0; j < z.cols; ++j)
            dpr[j] = pr[j] * (dzr[j] - pdz);
    }

    const double inv_batch = 1.0 / double(inputs_.rows);
    DenseMatrix delta = probs;
    for (std::size_t i = 0; i < delta.rows; ++i)
        delta(i, labels_[i]) -= 1.0;
    for (double &x : delta.data) x *= inv_batch;
    DenseMatrix ddelta = dp;
    for (double &x : ddelta.data) x *= inv_batch;

    // Backward pass with tangents (always the exact-transpose rule: the
    // Hessian is that of the true loss regardless of the training rule).
    NetworkParams out;
    out.W.resize(L);
    out.b.resize(L);
    for (std::size_t li = L; li-- > 0;) {
        DenseMatrix dg = matmul_tn(ddelta, act[li]);
        DenseMatrix t = matmul_tn(delta, dact[li]);
        for (std::size_t k = 0; k < dg.data.size(); ++k) dg.data[k] += t.data[k];
        out.W[li] = std::move(dg);
        out.b[li].assign(ddelta.cols, 0.0);
        for (std::size_t i = 0; i < ddelta.rows; ++i) {
            const double *row = ddelta.row_ptr(i);
            for (std::size_t j = 0; j < ddelta.cols; ++j) out.b[li][j] += row[j];
        }
        if (li == 0) break;

        DenseMatrix prev = matmul(delta, p.W[li]);
        DenseMatrix dprev = matmul(ddelta, p.W[li]);
        DenseMatrix dprev2 = matmul(delta, dir.W[li]);
        for (std::size_t k = 0; k < dprev.data.size(); ++k)
            dprev.data[k] += dprev2.data[k];
        const DenseMatrix &o = pre[li - 1];
        for (std::size_t k = 0; k < prev.data.size(); ++k) {
            if (o.data[k] <= 0.0) {
                prev.data[k] = 0.0;
                dprev.data[k] = 0.0;
            }
        }
        delta = std::move(prev);
        ddelta = std::move(dprev);
    }
    return flatten_params(out);
}

TopEigResult top_eigenvalue(const HessianOracle &oracle, RngState &rng,
                            double tol, int max_iters) {
    return top_eigenvalue_deflated(oracle, rng, {}, tol, max_iters);
}

TopEigResult top_eigenvalue_deflated(const HessianOracle &oracle, RngState &rng,
                                     const std::vector<TopEigResult> &deflate,
                                     double tol, int max_iters) {
    if (tol <= 0.0) throw InvalidArgument("top_eigenvalue: tol must be > 0");
    const std::size_t n = oracle.dim();
    std::vector<double> v(n);
    for (auto &x : v) x = rng.next_normal();
    double nv = norm2(v);
    for (auto &x : v) x /= nv;

    auto project_out = [&](std::vector<double> &x) {
        for (const auto &d : deflate) {
            double c = dot(x, d.eigenvector);
            for (std::size_t k = 0; k < n; ++k) x[k] -= c * d.eigenvector[k];
        }
    };
    project_out(v);
    nv = norm2(v);
    for (auto &x : v) x /= nv;

    TopEigResult res;
    double prev_lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        std::vector<double> hv = oracle.hvp(v);
        project_out(hv);
        double lambda = dot(v, hv); // Rayleigh quotient, v unit
        double nhv = norm2(hv);
        res.iterations = it + 1;
        if (nhv < 1e-300) {
            res.eigenvalue = 0.0;
            res.eigenvector = v;
            res.converged = true;
            return res;
        }
        for (std::size_t k = 0; k < n; ++k) v[k] = hv[k] / nhv;
        if (it > 0 && std::abs(lambda - prev_lambda) / (std::abs(lambda) + 1e-12) < tol) {
            res.eigenvalue = lambda;
            res.eigenvector = v;
            res.converged = true;
            return res;
        }
        prev_lambda = lambda;
    }
    res.eigenvalue = prev_lambda;
    res.eigenvector = v;
    res.converged = false;
    return res;
}

TraceEstimate hessian_trace(const HessianOracle &oracle, const RngState &rng,
                            int n_probes, ProbeKind probe) {
    if (n_probes < 1) throw InvalidArgument("hessian_trace: n_probes must be >= 1");
    const std::size_t n = oracle.dim();
    std::vector<double> samples(n_probes);
    for (int i = 0; i < n_probes; ++i) {
        RngState stream = rng.derive(uint64_t(i));
        std::vector<double> v(n);
        if (probe == ProbeKind::Rademacher) {
            for (auto &x : v) x = (stream.next_u64() & 1u) ? 1.0 : -1.0;
        } else {
            for (auto &x : v) x = stream.next_normal();
        }
        samples[i] = dot(v, oracle.hvp(v));
    }
    TraceEstimate est;
    est.n_probes = n_probes;
    double sum = 0.0;
    for (double s : samples) sum += s;
    est.trace = sum / double(n_probes);
    if (n_probes > 1) {
        double var = 0.0;
        for (double s : samples) var += (s - est.trace) * (s - est.trace);
        var /= double(n_probes - 1);
        est.std_error = std::sqrt(var / double(n_probes));
    }
    return est;
}

std::vector<DensitySample> esd_slq(const HessianOracle &oracle, const RngState &rng,
                                   const SlqOptions &opts, double &sigma_used) {
    if (opts.lanczos_steps < 2) throw InvalidArgument("esd_slq: need q >= 2");
    const std::size_t n = oracle.dim();
    const int q = opts.lanczos_steps;

    struct RitzSet {
        std::vector<double> values;
        std::vector<double> weights;
    };
    std::vector<RitzSet> ritz(opts.n_probes);

    for (int pr = 0; pr < opts.n_probes; ++pr) {
        RngState stream = rng.derive(0x51c0ULL + uint64_t(pr));
        std::vector<double> v(n);
        for (auto &x : v) x = stream.next_normal();
        double nv = norm2(v);
        for (auto &x : v) x /= nv;

        std::vector<std::vector<double>> basis;
        basis.push_back(v);
        std::vector<double> alpha, beta;
        int steps = 0;
        for (int j = 0; j < q; ++j) {
            std::vector<double> w = oracle.hvp(basis[j]);
            double a = dot(w, basis[j]);
            alpha.push_back(a);
            ++steps;
            if (j + 1 == q) break;
            for (std::size_t k = 0; k < n; ++k) w[k] -= a * basis[j][k];
            if (j > 0)
                for (std::size_t k = 0; k < n; ++k) w[k] -= beta[j - 1] * basis[j - 1][k];
            // full reorthogonalization
            for (const auto &u : basis) {
                double c = dot(w, u);
                for (std::size_t k = 0; k < n; ++k) w[k] -= c * u[k];
            }
            double b = norm2(w);
            if (b < 1e-12) break; // breakdown: truncate, weights renormalize below
            beta.push_back(b);
            for (auto &x : w) x /= b;
            basis.push_back(std::move(w));
        }

        DenseMatrix T(steps, steps);
        for (int j = 0; j < steps; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < steps) {
                T(j, j + 1) = beta[j];
                T(j + 1, j) = beta[j];
            }
        }
        auto [evals, evecs] = sym_eig(T);
        RitzSet rs;
        double wsum = 0.0;
        for (int i = 0; i < steps; ++i) {
            double tau = evecs(0, i) * evecs(0, i);
            rs.values.push_back(evals[i]);
            rs.weights.push_back(tau);
            wsum += tau;
        }
        for (auto &w : rs.weights) w /= wsum; // sums to 1 per probe
        ritz[pr] = std::move(rs);
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto &rs : ritz)
        for (double v : rs.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) { lo = -1.0; hi = 1.0; }
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1.0, std::abs(hi));
    lo -= opts.pad_fraction * span;
    hi += opts.pad_fraction * span;

    sigma_used = opts.sigma > 0.0 ? opts.sigma : 0.01 * (hi - lo);
    const double norm_const = 1.0 / (sigma_used * std::sqrt(2.0 * std::numbers::pi));

    std::vector<DensitySample> density(opts.grid_points);
    for (int g = 0; g < opts.grid_points; ++g) {
        double t = lo + (hi - lo) * double(g) / double(opts.grid_points - 1);
        double rho = 0.0;
        for (const auto &rs : ritz) {
            for (std::size_t i = 0; i < rs.values.size(); ++i) {
                double d = (t - rs.values[i]) / sigma_used;
                rho += rs.weights[i] * norm_const * std::exp(-0.5 * d * d);
            }
        }
        density[g] = {t, rho / double(opts.n_probes)};
    }
    return density;
}

DenseMatrix perturbed_landscape(const HessianOracle &oracle,
                                const std::vector<double> &dir1,
                                const std::vector<double> &dir2,
                                const std::vector<double> &alpha_grid,
                                const std::vector<double> &beta_grid) {
    if (dir1.size() != oracle.dim() || dir2.size() != oracle.dim())
        throw ShapeError("perturbed_landscape: direction length mismatch");
    if (std::abs(norm2(dir1) - 1.0) > 1e-6 || std::abs(norm2(dir2) - 1.0) > 1e-6)
        throw InvalidArgument("perturbed_landscape: directions must be unit norm");
    if (std::abs(dot(dir1, dir2)) > 1e-6)
        throw InvalidArgument("perturbed_landscape: directions must be orthogonal");

    std::vector<double> base = flatten_params(oracle.params());
    DenseMatrix grid(alpha_grid.size(), beta_grid.size());
    std::vector<double> theta(base.size());
    for (std::size_t ia = 0; ia < alpha_grid.size(); ++ia) {
        for (std::size_t ib = 0; ib < beta_grid.size(); ++ib) {
            double a = alpha_grid[ia], b = beta_grid[ib];
            for (std::size_t k = 0; k < base.size(); ++k)
                theta[k] = base[k] + a * dir1[k] + b * dir2[k];
            grid(ia, ib) = oracle.loss_at(theta);
        }
    }
    return grid;
}

PcaTrajectory pca_trajectory(const std::vector<std::vector<double>> &checkpoints,
                             const std::vector<double> &theta_final,
                             const std::function<double(const std::vector<double> &)> &loss_fn,
                             int grid_n) {
    if (checkpoints.size() < 3)
        throw InvalidArgument("pca_trajectory: need at least 3 checkpoints");
    const std::size_t k = checkpoints.size();
    const std::size_t P = theta_final.size();

    // difference vectors d_i = theta_i - theta_final; PCA via the k x k Gram
    std::vector<std::vector<double>> diffs(k, std::vector<double>(P));
    for (std::size_t i = 0; i < k; ++i) {
        if (checkpoints[i].size() != P)
            throw ShapeError("pca_trajectory: checkpoint length mismatch");
        for (std::size_t j = 0; j < P; ++j)
            diffs[i][j] = checkpoints[i][j] - theta_final[j];
    }
    DenseMatrix gram(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j)
            gram(i, j) = gram(j, i) = dot(diffs[i], diffs[j]);

    auto [evals, evecs] = sym_eig(gram);
    double total = 0.0;
    for (double e : evals) total += std::max(e, 0.0);

    PcaTrajectory out;
    out.explained1 = total > 0.0 ? std::max(evals[0], 0.0) / total : 0.0;
    out.explained2 = total > 0.0 ? std::max(evals[1], 0.0) / total : 0.0;

    auto build_dir = [&](std::size_t comp) {
        std::vector<double> d(P, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            double w = evecs(i, comp);
            for (std::size_t j = 0; j < P; ++j) d[j] += w * diffs[i][j];
        }
        return d;
    };
    out.dir1 = build_dir(0);
    double n1 = norm2(out.dir1);
    if (n1 < 1e-300) throw InvalidArgument("pca_trajectory: trajectory is a point");
    for (auto &x : out.dir1) x /= n1;

    out.dir2 = build_dir(1);
    double c = dot(out.dir2, out.dir1);
    for (std::size_t j = 0; j < P; ++j) out.dir2[j] -= c * out.dir1[j];
    double n2 = norm2(out.dir2);
    if (n2 < 1e-10 * n1 || evals[1] <= 1e-12 * std::max(evals[0], 1.0)) {
        out.degenerate = true;
        std::fill(out.dir2.begin(), out.dir2.end(), 0.0);
    } else {
        for (auto &x : out.dir2) x /= n2;
    }

    out.path.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.path.emplace_back(dot(diffs[i], out.dir1),
                              out.degenerate ? 0.0 : dot(diffs[i], out.dir2));

    if (grid_n > 0 && loss_fn) {
        double max1 = 0.0, max2 = 0.0;
        for (const auto &[x, y] : out.path) {
            max1 = std::max(max1, std::abs(x));
            max2 = std::max(max2, std::abs(y));
        }
        max1 = max1 > 0 ? 1.1 * max1 : 1.0;
        max2 = max2 > 0 ? 1.1 * max2 : 1.0;
        int rows = grid_n, cols = out.degenerate ? 1 : grid_n;
        out.alpha_grid.resize(rows);
        out.beta_grid.resize(cols);
        for (int i = 0; i < rows; ++i)
            out.alpha_grid[i] = -max1 + 2.0 * max1 * double(i) / double(rows - 1);
        for (int j = 0; j < cols; ++j)
            out.beta_grid[j] = cols == 1 ? 0.0
                                         : -max2 + 2.0 * max2 * double(j) / double(cols - 1);
        out.loss_surface = DenseMatrix(rows, cols);
        std::vector<double> theta(P);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                for (std::size_t kk = 0; kk < P; ++kk)
                    theta[kk] = theta_final[kk] + out.alpha_grid[i] * out.dir1[kk] +
                                out.beta_grid[j] * out.dir2[kk];
                out.loss_surface(i, j) = loss_fn(theta);
            }
    }
    return out;
}

} // namespace alignnet
