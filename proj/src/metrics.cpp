#include "alignnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace alignnet {

std::vector<double> flatten_params(const NetworkParams &params) {
    std::vector<double> flat;
    flat.reserve(params.param_count());
    for (const auto &w : params.W)
        flat.insert(flat.end(), w.data.begin(), w.data.end());
    for (const auto &b : params.b)
        flat.insert(flat.end(), b.begin(), b.end());
    return flat;
}

NetworkParams unflatten_params(const std::vector<double> &flat,
                               const NetworkParams &shape_like) {
    if (flat.size() != shape_like.param_count())
        throw ShapeError("unflatten_params: length " + std::to_string(flat.size()) +
                         " != parameter count " + std::to_string(shape_like.param_count()));
    NetworkParams p = shape_like;
    std::size_t off = 0;
    for (auto &w : p.W) {
        std::copy(flat.begin() + off, flat.begin() + off + w.data.size(), w.data.begin());
        off += w.data.size();
    }
    for (auto &b : p.b) {
        std::copy(flat.begin() + off, flat.begin() + off + b.size(), b.begin());
        off += b.size();
    }
    return p;
}

static constexpr char kCheckpointMagic[4] = {'A', 'N', 'C', 'K'};
static constexpr uint8_t kCheckpointVersion = 1;

static void put_u32(std::ofstream &f, uint32_t v) {
    uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
    f.write(reinterpret_cast<const char *>(b), 4);
}

static uint32_t get_u32(std::ifstream &f) {
    uint8_t b[4];
    f.read(reinterpret_cast<char *>(b), 4);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

void save_checkpoint(const std::string &path, const NetworkParams &params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write(kCheckpointMagic, 4);
    f.put(char(kCheckpointVersion));
    put_u32(f, uint32_t(params.layer_count()));
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        put_u32(f, uint32_t(params.W[l].rows));
        put_u32(f, uint32_t(params.W[l].cols));
    }
    auto flat = flatten_params(params);
    static_assert(sizeof(double) == 8);
    f.write(reinterpret_cast<const char *>(flat.data()),
            std::streamsize(flat.size() * 8));
    if (!f) throw IoError("checkpoint write failed: " + path);
}

NetworkParams load_checkpoint(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError("checkpoint " + path + ": bad magic");
    int version = f.get();
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint " + path + ": unsupported version " +
                          std::to_string(version));
    uint32_t layers = get_u32(f);
    NetworkParams shape;
    shape.W.resize(layers);
    shape.b.resize(layers);
    std::size_t count = 0;
    for (uint32_t l = 0; l < layers; ++l) {
        uint32_t out = get_u32(f), in = get_u32(f);
        shape.W[l] = DenseMatrix(out, in);
        shape.b[l].assign(out, 0.0);
        count += std::size_t(out) * in + out;
    }
    std::vector<double> flat(count);
    f.read(reinterpret_cast<char *>(flat.data()), std::streamsize(count * 8));
    if (!f) throw FormatError("checkpoint " + path + ": truncated parameter payload");
    return unflatten_params(flat, shape);
}

AlignmentReport alignment_angles(const DenseMatrix &W, const DenseMatrix &B) {
    // row i of W^T is column i of W; both must have B's shape once transposed
    if (W.rows != B.cols || W.cols != B.rows)
        throw ShapeError("alignment_angles: W^T and B shapes disagree");
    AlignmentReport rep;
    const std::size_t neurons = B.rows;
    rep.per_neuron_deg.resize(neurons);
    std::vector<double> angles;
    angles.reserve(neurons);
    for (std::size_t i = 0; i < neurons; ++i) {
        double dot = 0.0, nw = 0.0, nb = 0.0;
        for (std::size_t j = 0; j < B.cols; ++j) {
            double wv = W(j, i); // (W^T)(i, j)
            double bv = B(i, j);
            dot += wv * bv;
            nw += wv * wv;
            nb += bv * bv;
        }
        if (nw == 0.0 || nb == 0.0) {
            ++rep.skipped;
            continue;
        }
        double cosv = dot / (std::sqrt(nw) * std::sqrt(nb));
        cosv = std::clamp(cosv, -1.0, 1.0);
        double deg = std::acos(cosv) * 180.0 / std::numbers::pi;
        rep.per_neuron_deg[i] = deg;
        angles.push_back(deg);
    }
    if (!angles.empty()) {
        double sum = 0.0;
        for (double a : angles) sum += a;
        rep.mean_deg = sum / double(angles.size());
        double var = 0.0;
        for (double a : angles) var += (a - rep.mean_deg) * (a - rep.mean_deg);
        rep.std_deg = std::sqrt(var / double(angles.size()));
    }
    return rep;
}

std::string format_g9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_csv(const TrainLog &log, const std::string &path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write csv: " + path);
    std::size_t n_angle_layers =
        log.entries.empty() ? 0 : log.entries.front().angles.size();
    f << "epoch,iter,train_loss,train_acc,test_loss,test_acc";
    for (std::size_t l = 0; l < n_angle_layers; ++l)
        f << ",angle_mean_l" << (l + 1) << ",angle_std_l" << (l + 1);
    f << "\n";
    for (const auto &e : log.entries) {
        f << e.epoch << "," << e.iteration << "," << format_g9(e.train_loss) << ","
          << format_g9(e.train_acc) << "," << format_g9(e.test_loss) << ","
          << format_g9(e.test_acc);
        for (const auto &[mean, sd] : e.angles)
            f << "," << format_g9(mean) << "," << format_g9(sd);
        f << "\n";
    }
    if (!f) throw IoError("csv write failed: " + path);
}

TrainLog parse_csv(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open csv: " + path);
    TrainLog log;
    std::string line;
    if (!std::getline(f, line)) return log; // header only or empty
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() < 6 || (vals.size() - 6) % 2 != 0)
            throw FormatError("csv " + path + ": bad column count");
        TrainLogEntry e;
        e.epoch = int(vals[0]);
        e.iteration = long(vals[1]);
        e.train_loss = vals[2];
        e.train_acc = vals[3];
        e.test_loss = vals[4];
        e.test_acc = vals[5];
        for (std::size_t i = 6; i + 1 < vals.size(); i += 2)
            e.angles.emplace_back(vals[i], vals[i + 1]);
        log.entries.push_back(std::move(e));
    }
    return log;
}

} // namespace alignnet
