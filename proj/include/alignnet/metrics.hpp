#ifndef ALIGNNET_METRICS_HPP
#define ALIGNNET_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "alignnet/network.hpp"

namespace alignnet {

// ---- flat parameter vector ----

/// All W[l] row-major in layer order, then all b[l] in layer order.
std::vector<double> flatten_params(const NetworkParams &params);
NetworkParams unflatten_params(const std::vector<double> &flat,
                               const NetworkParams &shape_like);

// ---- checkpoint file format ----
// "ANCK" magic, one version byte, layer count (u32 LE), then per layer
// out_dim/in_dim (u32 LE each), then the flat parameter vector as
// little-endian f64.

void save_checkpoint(const std::string &path, const NetworkParams &params);
NetworkParams load_checkpoint(const std::string &path);

/// In-memory snapshot sequence used by training runs and the PCA trajectory.
struct CheckpointStore {
    std::vector<std::vector<double>> snapshots;

    std::size_t record(const NetworkParams &params) {
        snapshots.push_back(flatten_params(params));
        return snapshots.size() - 1;
    }
};

// ---- alignment angles ----

struct AlignmentReport {
    /// angle per neuron, degrees; missing entries mark all-zero rows
    std::vector<std::optional<double>> per_neuron_deg;
    double mean_deg = 0.0;
    double std_deg = 0.0;
    std::size_t skipped = 0;
};

/// Angle between row i of W^T and row i of B, per neuron.
AlignmentReport alignment_angles(const DenseMatrix &W, const DenseMatrix &B);

// ---- training telemetry ----

struct TrainLogEntry {
    int epoch = 0;
    long iteration = 0;
    double train_loss = 0.0, train_acc = 0.0;
    double test_loss = 0.0, test_acc = 0.0;
    /// per layer 1..L-1: (mean angle, angle std)
    std::vector<std::pair<double, double>> angles;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
};

/// CSV schema: epoch,iter,train_loss,train_acc,test_loss,test_acc,
/// angle_mean_l1,angle_std_l1,... 9 significant digits.
void write_csv(const TrainLog &log, const std::string &path);
TrainLog parse_csv(const std::string &path);

std::string format_g9(double v);

} // namespace alignnet

#endif
