#ifndef ALIGNNET_SPECTRAL_HPP
#define ALIGNNET_SPECTRAL_HPP

#include <functional>

#include "alignnet/metrics.hpp"
#include "alignnet/network.hpp"

namespace alignnet {

/// Matrix-free access to the Hessian of the true (softmax cross-entropy,
/// exact-transpose) loss at fixed parameters over a fixed batch. The batch
/// stays fixed for the oracle's lifetime so every probe sees the same H.
class HessianOracle {
public:
    HessianOracle(NetworkParams params, DenseMatrix inputs, std::vector<int> labels);

    std::size_t dim() const { return dim_; }
    const NetworkParams &params() const { return params_; }

    double loss() const;
    /// Analytic BP gradient, flattened.
    std::vector<double> gradient() const;
    /// Exact H*v by tangent (forward-over-reverse) propagation. The ReLU
    /// masks are held fixed (relu'' = 0), giving the exact Hessian of the
    /// piecewise-linear network almost everywhere.
    std::vector<double> hvp(const std::vector<double> &v) const;

    /// Loss at params + flat offset, for landscape grids.
    double loss_at(const std::vector<double> &flat) const;

private:
    NetworkParams params_;
    DenseMatrix inputs_;
    std::vector<int> labels_;
    std::size_t dim_;
};

struct TopEigResult {
    double eigenvalue = 0.0;
    std::vector<double> eigenvector;
    bool converged = false;
    int iterations = 0;
};

/// Power iteration; converges to the largest-magnitude eigenvalue. Returns
/// the Rayleigh quotient and the final unit vector, flagged if max_iters
/// ran out before |lambda| stabilized to tol.
TopEigResult top_eigenvalue(const HessianOracle &oracle, RngState &rng,
                            double tol = 1e-3, int max_iters = 100);

/// Power iteration on H minus the listed eigenpairs (deflation); used to
/// pull out the second-largest direction for landscape grids.
TopEigResult top_eigenvalue_deflated(const HessianOracle &oracle, RngState &rng,
                                     const std::vector<TopEigResult> &deflate,
                                     double tol = 1e-3, int max_iters = 100);

enum class ProbeKind { Rademacher, Gaussian };

struct TraceEstimate {
    double trace = 0.0;
    double std_error = 0.0;
    int n_probes = 0;
};

/// Hutchinson estimator: mean of v^T H v over probes. Probe i uses the
/// stream derived from (rng, i) so the estimate is schedule-independent.
TraceEstimate hessian_trace(const HessianOracle &oracle, const RngState &rng,
                            int n_probes = 100,
                            ProbeKind probe = ProbeKind::Rademacher);

struct DensitySample {
    double t;
    double rho;
};

struct SlqOptions {
    int n_probes = 10;
    int lanczos_steps = 80;
    /// <= 0 means 1% of the grid span
    double sigma = -1.0;
    int grid_points = 1024;
    /// grid span padding as a fraction of the eigenvalue range
    double pad_fraction = 0.05;
};

struct SpectrumReport {
    TopEigResult top;
    TraceEstimate trace;
    std::vector<DensitySample> density;
    double sigma_used = 0.0;
};

/// Smoothed spectral density via stochastic Lanczos quadrature with full
/// reorthogonalization. Grid spans the Ritz value range padded by
/// pad_fraction.
std::vector<DensitySample> esd_slq(const HessianOracle &oracle, const RngState &rng,
                                   const SlqOptions &opts, double &sigma_used);

/// Loss grid over the plane theta + alpha*dir1 + beta*dir2; dir1 and dir2
/// must be unit norm and orthogonal within 1e-6.
DenseMatrix perturbed_landscape(const HessianOracle &oracle,
                                const std::vector<double> &dir1,
                                const std::vector<double> &dir2,
                                const std::vector<double> &alpha_grid,
                                const std::vector<double> &beta_grid);

struct PcaTrajectory {
    /// (PC1, PC2) coordinates per checkpoint; final checkpoint maps to (0,0)
    std::vector<std::pair<double, double>> path;
    std::vector<double> dir1, dir2; // orthonormal directions in parameter space
    double explained1 = 0.0, explained2 = 0.0;
    bool degenerate = false; // trajectory rank < 2, dir2 unusable
    DenseMatrix loss_surface; // loss over (alpha_grid x beta_grid), empty if not requested
    std::vector<double> alpha_grid, beta_grid;
};

/// Top-2 principal directions of the difference vectors theta_i - theta_final
/// via the k x k Gram matrix, mapped back to parameter space. When grid_n > 0
/// the training loss is evaluated over a grid spanning the projected path.
PcaTrajectory pca_trajectory(const std::vector<std::vector<double>> &checkpoints,
                             const std::vector<double> &theta_final,
                             const std::function<double(const std::vector<double> &)> &loss_fn,
                             int grid_n = 0);

} // namespace alignnet

#endif
