#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "alignnet/experiment.hpp"
#include "helpers.hpp"
#include "synth_data.hpp"

using namespace alignnet;
using testutil::TempDir;

namespace {

// One pass/fail line per criterion; failed expectations also fail doctest.
struct Criterion {
    int id;
    std::string name;
    bool ok = true;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    Criterion(int id_, std::string name_) : id(id_), name(std::move(name_)) {}
    void expect(bool cond, const std::string &what) {
        CHECK_MESSAGE(cond, "criterion ", id, ": ", what);
        if (!cond) ok = false;
    }
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    ~Criterion() {
        std::printf("[criterion %2d] %-34s %s  (%.1fs)\n", id, name.c_str(),
                    ok ? "PASS" : "FAIL", seconds());
        std::fflush(stdout);
    }
};

std::vector<double> flatten_grads(const ParamGrads &g) {
    std::vector<double> out;
    for (const auto &W : g.gW) out.insert(out.end(), W.data.begin(), W.data.end());
    for (const auto &b : g.gb) out.insert(out.end(), b.begin(), b.end());
    return out;
}

bool away_from_kinks(const ForwardCache &cache, double margin) {
    for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l)
        for (double v : cache.pre[l].data)
            if (std::abs(v) < margin) return false;
    return true;
}

// ---- small Hessian problem (shared with criterion 3) ----

struct SmallProblem {
    NetworkParams params;
    DenseMatrix x;
    std::vector<int> labels;
};

SmallProblem make_problem(uint64_t seed, const std::vector<std::size_t> &dims = {6, 5, 4},
                          std::size_t batch = 5) {
    RngState rng(seed);
    for (int attempt = 0; attempt < 50; ++attempt) {
        SmallProblem p;
        p.params = testutil::random_net(dims, rng);
        p.x = gaussian(rng, batch, dims.front(), 0.0, 1.0);
        for (std::size_t i = 0; i < batch; ++i)
            p.labels.push_back(int(rng.next_below(dims.back())));
        if (away_from_kinks(forward(p.params, p.x), 5e-3)) return p;
        p.labels.clear();
    }
    FAIL("could not find a kink-free problem");
    return {};
}

DenseMatrix fd_hessian(const SmallProblem &p, double eps = 1e-5) {
    HessianOracle base(p.params, p.x, p.labels);
    std::size_t n = base.dim();
    std::vector<double> theta = flatten_params(p.params);
    DenseMatrix h(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        auto tp = theta, tm = theta;
        tp[j] += eps;
        tm[j] -= eps;
        HessianOracle op(unflatten_params(tp, p.params), p.x, p.labels);
        HessianOracle om(unflatten_params(tm, p.params), p.x, p.labels);
        auto gp = op.gradient();
        auto gm = om.gradient();
        for (std::size_t i = 0; i < n; ++i) h(i, j) = (gp[i] - gm[i]) / (2 * eps);
    }
    return h;
}

DenseMatrix dense_hessian(const HessianOracle &oracle) {
    std::size_t n = oracle.dim();
    DenseMatrix h(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        auto col = oracle.hvp(e);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) h(i, j) = col[i];
    }
    return h;
}

double rel_frob(const DenseMatrix &a, const DenseMatrix &b) {
    DenseMatrix d = a;
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] -= b.data[i];
    return frobenius_norm(d) / std::max(1e-300, frobenius_norm(b));
}

// ---- shared desk-scale training runs (criteria 5-8) ----

constexpr int kSeeds = 3;

struct DeskRuns {
    Dataset train_norm, test_norm, test_raw;
    NormalizationStats stats;
    // rule label -> one TrainResult per seed
    std::map<std::string, std::vector<TrainResult>> runs;
    double build_seconds = 0.0;

    double mean_acc(const std::string &key) const {
        const auto &v = runs.at(key);
        double s = 0;
        for (const auto &r : v) s += r.final_test_acc;
        return 100.0 * s / double(v.size());
    }
};

TrainConfig desk_train_config(Rule rule, double theta, uint64_t seed) {
    TrainConfig tc;
    tc.dims = {3072, 512, 512, 10};
    tc.rule = rule;
    tc.theta_init_deg = theta;
    tc.epochs = 15;
    tc.seed = seed;
    tc.eval_train_cap = 2000; // telemetry only; keeps the epoch loop affordable
    return tc;
}

const DeskRuns &desk() {
    static DeskRuns d = [] {
        DeskRuns r;
        auto t0 = std::chrono::steady_clock::now();
        testutil::SynthSpec sp;
        Dataset train_raw = testutil::make_synth(sp, 10000, 100);
        r.test_raw = testutil::make_synth(sp, 2000, 200);
        r.stats = compute_stats(train_raw);
        r.train_norm = normalize(train_raw, r.stats);
        r.test_norm = normalize(r.test_raw, r.stats);

        const std::vector<std::tuple<std::string, Rule, double>> kinds = {
            {"bp", Rule::Bp, 0.0},     {"fa", Rule::Fa, 0.0},
            {"ifa0", Rule::Ifa, 0.0},  {"ifa30", Rule::Ifa, 30.0},
            {"ifa60", Rule::Ifa, 60.0},
        };
        for (const auto &[key, rule, theta] : kinds)
            for (uint64_t seed = 0; seed < kSeeds; ++seed)
                r.runs[key].push_back(
                    train(desk_train_config(rule, theta, seed), r.train_norm, r.test_norm));
        r.build_seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
        return r;
    }();
    return d;
}

std::pair<double, double> mean_se(const std::vector<double> &v) {
    double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var /= double(v.size() - 1);
    return {m, std::sqrt(var / double(v.size()))};
}

} // namespace

TEST_CASE("criterion 1: gradient exactness vs finite differences") {
    Criterion c(1, "gradient exactness");
    RngState rng(101);
    int checked = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 30 && checked < 10; ++trial) {
        auto params = testutil::random_net({8, 6, 4}, rng);
        DenseMatrix x = gaussian(rng, 5, 8, 0.0, 1.0);
        std::vector<int> labels;
        for (int i = 0; i < 5; ++i) labels.push_back(int(rng.next_below(4)));

        ForwardCache cache = forward(params, x);
        if (!away_from_kinks(cache, 1e-3)) continue; // stay >= 1e-3 from ReLU kinks
        ++checked;

        auto [loss, delta] = loss_and_output_delta(cache, labels);
        (void)loss;
        auto analytic = flatten_grads(backward(BackwardRule{}, params, cache, delta));
        auto numeric = testutil::fd_gradient(params, x, labels);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            double rel = std::abs(analytic[i] - numeric[i]) /
                         std::max(1e-3, std::abs(numeric[i]));
            worst = std::max(worst, rel);
        }
    }
    c.expect(checked >= 10, "enough kink-free batches sampled");
    c.expect(worst < 1e-5, "per-coordinate relative error < 1e-5 (worst " +
                               std::to_string(worst) + ")");
    c.expect(c.seconds() < 10.0, "runtime < 10 s");
}

TEST_CASE("criterion 2: FA with B = W^T reproduces BP") {
    Criterion c(2, "FA/BP coincidence at alignment");
    RngState rng(102);
    double worst = 0.0;
    for (int net = 0; net < 100; ++net) {
        auto params = testutil::random_net({7, 5, 6, 3}, rng);
        FeedbackParams fb;
        fb.B.resize(params.layer_count());
        for (std::size_t l = 1; l < params.layer_count(); ++l)
            fb.B[l] = transpose(params.W[l]);

        DenseMatrix x = gaussian(rng, 4, 7, 0.0, 1.0);
        std::vector<int> labels;
        for (int i = 0; i < 4; ++i) labels.push_back(int(rng.next_below(3)));

        ForwardCache cache = forward(params, x);
        auto [loss, delta] = loss_and_output_delta(cache, labels);
        (void)loss;
        auto g_bp = flatten_grads(backward(BackwardRule{}, params, cache, delta));
        auto g_fa = flatten_grads(
            backward(BackwardRule{RuleKind::FixedFeedback, &fb}, params, cache, delta));
        for (std::size_t i = 0; i < g_bp.size(); ++i)
            worst = std::max(worst, std::abs(g_bp[i] - g_fa[i]) /
                                        std::max(1e-12, std::abs(g_bp[i])));
    }
    c.expect(worst < 1e-12, "gradients match to 1e-12 relative on 100 nets");
    c.expect(c.seconds() < 10.0, "runtime < 10 s");
}

TEST_CASE("criterion 3: Hessian oracle equivalence on small nets") {
    Criterion c(3, "Hessian oracle equivalence");
    SmallProblem p = make_problem(103);
    HessianOracle oracle(p.params, p.x, p.labels);
    c.expect(oracle.dim() <= 200, "net has <= 200 params");

    DenseMatrix exact = dense_hessian(oracle);
    DenseMatrix fd = fd_hessian(p);
    c.expect(rel_frob(exact, fd) < 1e-6,
             "HVP columns match FD Hessian within 1e-6 relative Frobenius");

    auto [evals, evecs] = sym_eig(exact);
    double lam_dense = 0.0, tr_dense = 0.0;
    for (double ev : evals) {
        if (std::abs(ev) > std::abs(lam_dense)) lam_dense = ev;
        tr_dense += ev;
    }

    RngState rng(1031);
    TopEigResult top = top_eigenvalue(oracle, rng, 1e-5, 2000);
    c.expect(top.converged, "power iteration converged");
    c.expect(std::abs(top.eigenvalue - lam_dense) / std::abs(lam_dense) < 1e-3,
             "lambda_max within 1e-3 relative of dense eig");

    TraceEstimate tr = hessian_trace(oracle, RngState(1032), 1000);
    c.expect(std::abs(tr.trace - tr_dense) <= 3.0 * tr.std_error,
             "trace within 3 standard errors at 1000 probes");
    c.expect(std::abs(tr.trace - tr_dense) <= 0.05 * std::abs(tr_dense),
             "trace within 5% at 1000 probes");

    SlqOptions opts;
    opts.n_probes = 200;
    opts.lanczos_steps = int(oracle.dim());
    opts.grid_points = 2048;
    double sigma = 0.0;
    auto density = esd_slq(oracle, RngState(1033), opts, sigma);
    double dt = density[1].t - density[0].t;
    double l1 = 0.0;
    for (const auto &s : density) {
        double rho = 0.0;
        for (double ev : evals) {
            double d = (s.t - ev) / sigma;
            rho += std::exp(-0.5 * d * d) / (sigma * std::sqrt(2.0 * std::numbers::pi));
        }
        rho /= double(evals.size());
        l1 += std::abs(rho - s.rho) * dt;
    }
    c.expect(l1 < 0.05, "SLQ density within L1 0.05 of exact smoothed density");
    c.expect(c.seconds() < 120.0, "runtime < 2 min");
}

TEST_CASE("criterion 4: initialization-angle calibration at fan_in 512") {
    Criterion c(4, "initialization-angle calibration");
    auto spec = mlp_spec({512, 512, 512});
    for (double theta : {0.0, 30.0, 60.0, 90.0}) {
        RngState rng(104 + uint64_t(theta));
        FeedbackParams fb = init_feedback(spec, std::numbers::sqrt2, rng);
        NetworkParams params = soft_align_init(spec, fb, theta, std::numbers::sqrt2, rng);
        AlignmentReport rep = alignment_angles(params.W[1], fb.B[1]);
        c.expect(std::abs(rep.mean_deg - theta) <= 2.0,
                 "mean angle " + std::to_string(rep.mean_deg) + " within 2 deg of " +
                     std::to_string(theta));
    }
    c.expect(c.seconds() < 5.0, "runtime < 5 s");
}

TEST_CASE("criterion 5: desk-scale learning ordering") {
    Criterion c(5, "desk-scale learning ordering");
    const DeskRuns &d = desk();

    double bp = d.mean_acc("bp"), fa = d.mean_acc("fa"), ifa0 = d.mean_acc("ifa0");
    double ifa30 = d.mean_acc("ifa30"), ifa60 = d.mean_acc("ifa60");
    std::printf("    test acc (%%): bp %.2f  ifa0 %.2f  ifa30 %.2f  ifa60 %.2f  fa %.2f\n",
                bp, ifa0, ifa30, ifa60, fa);

    c.expect(ifa0 - fa >= 2.0, "IFA-0 beats FA by >= 2 points");
    c.expect(std::abs(bp - ifa0) <= 2.0, "BP and IFA-0 within 2 points");
    // theta = 90 is the FA init (sin 90 = 1): accuracy non-increasing in theta
    const double accs[4] = {ifa0, ifa30, ifa60, fa};
    for (int i = 0; i + 1 < 4; ++i)
        c.expect(accs[i + 1] <= accs[i] + 1.0,
                 "accuracy non-increasing in theta within 1-point noise");
    c.expect(d.build_seconds < 1800.0, "training runs complete in < 30 min");
}

TEST_CASE("criterion 6: alignment dynamics direction") {
    Criterion c(6, "alignment dynamics direction");
    const DeskRuns &d = desk();

    for (const auto &run : d.runs.at("fa")) {
        double init = run.log.entries.front().angles.back().first;
        double last = run.log.entries.back().angles.back().first;
        c.expect(std::abs(init - 90.0) <= 3.0, "FA final-layer angle starts near 90");
        c.expect(init - last >= 10.0, "FA final-layer angle drops >= 10 deg (drop " +
                                          std::to_string(init - last) + ")");
    }

    // IFA-0 over the first epoch, logged every few steps
    TrainConfig tc = desk_train_config(Rule::Ifa, 0.0, 0);
    tc.epochs = 1;
    tc.log_every_steps = 8;
    TrainResult first = train(tc, d.train_norm, d.test_norm);
    const auto &es = first.log.entries;
    c.expect(es.size() >= 5, "enough intra-epoch log points");
    c.expect(es.front().angles.back().first <= 1.0, "IFA-0 angle starts at 0");
    bool rises = true;
    for (std::size_t i = 0; i + 1 < es.size(); ++i)
        rises = rises &&
                es[i + 1].angles.back().first >= es[i].angles.back().first - 0.05;
    c.expect(rises, "IFA-0 final-layer angle rises monotonically over epoch 1");
    c.expect(es.back().angles.back().first > es.front().angles.back().first,
             "IFA-0 angle net increase over epoch 1");
}

TEST_CASE("criterion 7: curvature ordering FA vs IFA-0") {
    Criterion c(7, "curvature ordering");
    const DeskRuns &d = desk();

    // fixed probe batch from the training set
    const std::size_t nb = 512;
    DenseMatrix xb(nb, d.train_norm.images.cols);
    std::vector<int> yb(d.train_norm.labels.begin(), d.train_norm.labels.begin() + nb);
    std::copy(d.train_norm.images.data.begin(),
              d.train_norm.images.data.begin() + nb * d.train_norm.images.cols,
              xb.data.begin());

    std::map<std::string, std::vector<double>> traces, lams;
    for (const std::string key : {"fa", "ifa0"}) {
        for (int seed = 0; seed < kSeeds; ++seed) {
            HessianOracle oracle(d.runs.at(key)[seed].params, xb, yb);
            TraceEstimate tr = hessian_trace(oracle, RngState(1070 + seed), 12);
            RngState prng(1080 + seed);
            TopEigResult top = top_eigenvalue(oracle, prng, 1e-3, 60);
            traces[key].push_back(tr.trace);
            lams[key].push_back(top.eigenvalue);
        }
    }
    auto [tr_fa, tr_fa_se] = mean_se(traces["fa"]);
    auto [tr_ifa, tr_ifa_se] = mean_se(traces["ifa0"]);
    auto [lm_fa, lm_fa_se] = mean_se(lams["fa"]);
    auto [lm_ifa, lm_ifa_se] = mean_se(lams["ifa0"]);
    std::printf("    trace: fa %.3g+-%.2g  ifa0 %.3g+-%.2g | lambda_max: fa %.3g+-%.2g"
                "  ifa0 %.3g+-%.2g\n",
                tr_fa, tr_fa_se, tr_ifa, tr_ifa_se, lm_fa, lm_fa_se, lm_ifa, lm_ifa_se);

    c.expect(tr_fa - 2 * tr_fa_se > tr_ifa + 2 * tr_ifa_se,
             "FA trace exceeds IFA-0 trace, +-2 SE intervals disjoint");
    c.expect(lm_fa - 2 * lm_fa_se > lm_ifa + 2 * lm_ifa_se,
             "FA lambda_max exceeds IFA-0 lambda_max, +-2 SE intervals disjoint");
    c.expect(c.seconds() < 600.0, "runtime < 10 min");
}

TEST_CASE("criterion 8: attack sanity and robustness direction") {
    Criterion c(8, "attack sanity + robustness");
    const DeskRuns &d = desk();

    const std::vector<double> eps = {0.0, 0.005, 0.01, 0.02, 0.03};
    AttackConfig acfg;
    std::map<std::string, std::vector<std::pair<double, double>>> curves;
    for (const std::string key : {"bp", "fa"}) {
        RawPixelModel model{&d.runs.at(key)[0].params, &d.stats};
        RngState rng(1084);
        curves[key] = attack_curve(model, d.test_raw, AttackMethod::Fgsm, eps, acfg, rng);

        auto [clean, clean_loss] = evaluate(d.runs.at(key)[0].params, d.test_norm, 512);
        (void)clean_loss;
        c.expect(curves[key][0].second == clean, "epsilon 0 equals clean accuracy exactly");
        for (std::size_t i = 0; i + 1 < eps.size(); ++i)
            c.expect(curves[key][i + 1].second <= curves[key][i].second + 0.005,
                     "accuracy non-increasing in epsilon (<= 0.5-point violations)");
    }
    std::printf("    fgsm acc at eps=0.03: bp %.3f  fa %.3f\n",
                curves["bp"].back().second, curves["fa"].back().second);
    c.expect(curves["fa"].back().second >= curves["bp"].back().second,
             "FA (theta 90) adversarial accuracy >= BP at eps = 0.03");

    // ball-containment and clipping invariants on 1000 random cases
    RngState rng(1085);
    int cases = 0;
    bool ball_ok = true, clip_ok = true;
    NormalizationStats small_stats;
    small_stats.mean.assign(6, 0.4);
    small_stats.std.assign(6, 0.25);
    while (cases < 1000) {
        auto params = testutil::random_net({6, 5, 3}, rng);
        RawPixelModel model{&params, &small_stats};
        DenseMatrix x(2, 6);
        for (auto &v : x.data) v = rng.next_double();
        std::vector<int> labels = {int(rng.next_below(3)), int(rng.next_below(3))};
        AttackConfig cfg;
        cfg.epsilon = 0.3 * rng.next_double();
        cfg.iterations = 1 + int(rng.next_below(5));
        DenseMatrix adv = rng.next_below(2) == 0
                              ? bim(model, x, labels, cfg)
                              : pgd(model, x, labels, cfg, rng);
        for (std::size_t i = 0; i < adv.data.size(); ++i) {
            ball_ok = ball_ok &&
                      std::abs(adv.data[i] - x.data[i]) <= cfg.epsilon + 1e-12;
            clip_ok = clip_ok && adv.data[i] >= 0.0 && adv.data[i] <= 1.0;
        }
        ++cases;
    }
    c.expect(ball_ok, "all 1000 attacks stay inside the epsilon ball");
    c.expect(clip_ok, "all 1000 attacks stay inside [0,1]");
}

TEST_CASE("criterion 9: format fidelity") {
    Criterion c(9, "format fidelity");
    TempDir tmp("accept_fmt");
    RngState rng(109);

    // CIFAR byte-exact round trip
    std::vector<std::vector<uint8_t>> imgs(5, std::vector<uint8_t>(3072));
    for (auto &img : imgs)
        for (auto &px : img) px = uint8_t(rng.next_below(256));
    std::vector<int> labels = {0, 9, 3, 7, 1};
    write_cifar_file(tmp.file("b1.bin"), imgs, labels, CifarVariant::Cifar10);
    Dataset ds = load_cifar({tmp.file("b1.bin")}, CifarVariant::Cifar10);
    bool cifar_ok = ds.labels == labels;
    std::vector<std::vector<uint8_t>> back(5, std::vector<uint8_t>(3072));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 3072; ++k)
            back[i][k] = uint8_t(ds.images(i, k) * 255.0 + 0.5);
    write_cifar_file(tmp.file("b2.bin"), back, ds.labels, CifarVariant::Cifar10);
    cifar_ok = cifar_ok &&
               testutil::read_bytes(tmp.file("b1.bin")) ==
                   testutil::read_bytes(tmp.file("b2.bin"));
    c.expect(cifar_ok, "CIFAR fixture round-trips byte-exact");

    // MNIST IDX
    auto be32 = [](std::vector<uint8_t> &v, uint32_t x) {
        v.push_back(uint8_t(x >> 24));
        v.push_back(uint8_t(x >> 16));
        v.push_back(uint8_t(x >> 8));
        v.push_back(uint8_t(x));
    };
    std::vector<uint8_t> pix(3 * 4 * 4);
    for (auto &p : pix) p = uint8_t(rng.next_below(256));
    std::vector<uint8_t> img_bytes, lab_bytes;
    be32(img_bytes, 0x803);
    be32(img_bytes, 3);
    be32(img_bytes, 4);
    be32(img_bytes, 4);
    img_bytes.insert(img_bytes.end(), pix.begin(), pix.end());
    be32(lab_bytes, 0x801);
    be32(lab_bytes, 3);
    lab_bytes.insert(lab_bytes.end(), {2, 0, 9});
    testutil::write_bytes(tmp.file("img"), img_bytes);
    testutil::write_bytes(tmp.file("lab"), lab_bytes);
    Dataset mn = load_mnist_idx(tmp.file("img"), tmp.file("lab"));
    bool mnist_ok = mn.size() == 3 && mn.labels == std::vector<int>{2, 0, 9};
    for (std::size_t i = 0; i < 3 && mnist_ok; ++i)
        for (std::size_t k = 0; k < 16; ++k)
            mnist_ok = mnist_ok &&
                       uint8_t(mn.images(i, k) * 255.0 + 0.5) == pix[i * 16 + k];
    c.expect(mnist_ok, "MNIST IDX fixture loads byte-exact");

    // NPY u8
    std::string header = "{'descr': '|u1', 'fortran_order': False, 'shape': (2, 3), }";
    std::size_t total = 10 + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header.push_back('\n');
    std::vector<uint8_t> npy = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
    npy.push_back(uint8_t(header.size() & 0xff));
    npy.push_back(uint8_t(header.size() >> 8));
    npy.insert(npy.end(), header.begin(), header.end());
    std::vector<uint8_t> payload = {1, 2, 3, 250, 251, 252};
    npy.insert(npy.end(), payload.begin(), payload.end());
    testutil::write_bytes(tmp.file("a.npy"), npy);
    NpyArray arr = load_npy_u8(tmp.file("a.npy"));
    c.expect(arr.shape == std::vector<std::size_t>{2, 3} && arr.bytes == payload,
             "NPY u8 fixture loads byte-exact");

    // malformed inputs raise the documented error classes
    bool errors_ok = true;
    auto expect_throw = [&](auto fn, const char *what) {
        try {
            fn();
            errors_ok = false;
            MESSAGE("missing expected error: ", what);
        } catch (const FormatError &) {
        } catch (const IoError &) {
        }
    };
    std::vector<uint8_t> trunc(3073 + 100, 0);
    testutil::write_bytes(tmp.file("trunc.bin"), trunc);
    expect_throw([&] { load_cifar({tmp.file("trunc.bin")}, CifarVariant::Cifar10); },
                 "cifar truncated record");
    expect_throw([&] { load_cifar({tmp.file("missing.bin")}, CifarVariant::Cifar10); },
                 "cifar missing file");
    auto bad_img = img_bytes;
    bad_img[3] = 0x02; // magic 0x802
    testutil::write_bytes(tmp.file("img_bad"), bad_img);
    expect_throw([&] { load_mnist_idx(tmp.file("img_bad"), tmp.file("lab")); },
                 "idx bad magic");
    auto bad_npy = npy;
    bad_npy[0] = 0x92;
    testutil::write_bytes(tmp.file("bad.npy"), bad_npy);
    expect_throw([&] { load_npy_u8(tmp.file("bad.npy")); }, "npy bad magic");
    std::string f8 = "{'descr': '<f8', 'fortran_order': False, 'shape': (6,), }";
    std::size_t t8 = 10 + f8.size() + 1;
    f8.append((64 - t8 % 64) % 64, ' ');
    f8.push_back('\n');
    std::vector<uint8_t> npy_f8 = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
    npy_f8.push_back(uint8_t(f8.size() & 0xff));
    npy_f8.push_back(uint8_t(f8.size() >> 8));
    npy_f8.insert(npy_f8.end(), f8.begin(), f8.end());
    npy_f8.insert(npy_f8.end(), payload.begin(), payload.end());
    testutil::write_bytes(tmp.file("f8.npy"), npy_f8);
    expect_throw([&] { load_npy_u8(tmp.file("f8.npy")); }, "npy wrong dtype");
    c.expect(errors_ok, "malformed inputs raise the specified errors");
    c.expect(c.seconds() < 5.0, "runtime < 5 s");
}

TEST_CASE("criterion 10: experiment determinism") {
    Criterion c(10, "experiment determinism");
    TempDir tmp("accept_det");
    RngState rng(110);

    // small CIFAR-format dataset on disk
    testutil::SynthSpec sp;
    sp.seed = 777;
    Dataset small_train = testutil::make_synth(sp, 300, 1);
    Dataset small_test = testutil::make_synth(sp, 100, 2);
    auto to_files = [&](const Dataset &ds, const std::string &path) {
        std::vector<std::vector<uint8_t>> imgs(ds.size(), std::vector<uint8_t>(3072));
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::size_t k = 0; k < 3072; ++k)
                imgs[i][k] = uint8_t(ds.images(i, k) * 255.0 + 0.5);
        write_cifar_file(path, imgs, ds.labels, CifarVariant::Cifar10);
    };
    to_files(small_train, tmp.file("train.bin"));
    to_files(small_test, tmp.file("test.bin"));

    std::string base = "[data]\ndataset = cifar10\ntrain_files = " + tmp.file("train.bin") +
                       "\ntest_files = " + tmp.file("test.bin") +
                       "\n[model]\nhidden = 32, 16\nrule = ifa\ntheta_init = 30\n"
                       "[optim]\nepochs = 2\n[run]\ntrials = 2\nseed = 5\noutdir = ";
    ExperimentConfig cfg1 = parse_config_text(base + tmp.file("out1") + "\n");
    ExperimentConfig cfg2 = parse_config_text(base + tmp.file("out2") + "\n");
    run_train_experiment(cfg1);
    run_train_experiment(cfg2);

    bool same = true;
    for (int t = 0; t < 2; ++t) {
        std::string name = "train_trial" + std::to_string(t) + ".csv";
        auto a = testutil::read_bytes(tmp.file("out1") + "/" + name);
        auto b = testutil::read_bytes(tmp.file("out2") + "/" + name);
        same = same && !a.empty() && a == b;
    }
    c.expect(same, "re-run with identical config+seed gives byte-identical CSVs");
}
