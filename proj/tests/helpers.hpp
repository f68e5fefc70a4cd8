#ifndef ALIGNNET_TEST_HELPERS_HPP
#define ALIGNNET_TEST_HELPERS_HPP

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <string>
#include <vector>

#include "alignnet/init.hpp"
#include "alignnet/network.hpp"

namespace testutil {

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string &tag) {
        path = std::filesystem::temp_directory_path() /
               ("alignnet_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string &name) const { return (path / name).string(); }
};

inline void write_bytes(const std::string &path, const std::vector<unsigned char> &bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<unsigned char> read_bytes(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                      std::istreambuf_iterator<char>());
}

inline std::string read_text(const std::string &path) {
    std::ifstream f(path);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

/// Random small net for gradient/Hessian oracles.
inline alignnet::NetworkParams random_net(const std::vector<std::size_t> &dims,
                                          alignnet::RngState &rng,
                                          bool random_bias = true) {
    auto spec = alignnet::mlp_spec(dims);
    auto params = alignnet::init_forward_plain(spec, std::numbers::sqrt2, rng);
    if (random_bias)
        for (auto &b : params.b)
            for (auto &v : b) v = 0.1 * rng.next_normal();
    return params;
}

/// Central finite-difference gradient of mean cross-entropy w.r.t. all params.
inline std::vector<double> fd_gradient(const alignnet::NetworkParams &params,
                                       const alignnet::DenseMatrix &x,
                                       const std::vector<int> &labels,
                                       double eps = 1e-6) {
    auto loss_of = [&](const alignnet::NetworkParams &p) {
        auto cache = alignnet::forward(p, x);
        return alignnet::loss_and_output_delta(cache, labels).first;
    };
    alignnet::NetworkParams p = params;
    std::vector<double> g;
    auto bump = [&](double &w) {
        double keep = w;
        w = keep + eps;
        double lp = loss_of(p);
        w = keep - eps;
        double lm = loss_of(p);
        w = keep;
        g.push_back((lp - lm) / (2 * eps));
    };
    for (auto &W : p.W)
        for (auto &w : W.data) bump(w);
    for (auto &b : p.b)
        for (auto &w : b) bump(w);
    return g;
}

} // namespace testutil

#endif
