#ifndef ALIGNNET_DATAIO_HPP
#define ALIGNNET_DATAIO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "alignnet/matrix.hpp"

namespace alignnet {

struct Dataset {
    /// n_samples x n_features, raw values in [0,1] until normalize() is applied
    DenseMatrix images;
    std::vector<int> labels;
    int n_classes = 0;
    /// (channels, height, width)
    std::array<int, 3> pixel_shape{0, 0, 0};

    std::size_t size() const { return labels.size(); }
};

struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> std; // zero-variance features get std = 1
};

enum class CifarVariant { Cifar10, Cifar100 };

/// CIFAR binary batches: 1 label byte (+1 coarse byte for CIFAR-100, skipped)
/// followed by 3072 pixel bytes, R/G/B planes row-major. Pixels scaled to [0,1].
Dataset load_cifar(const std::vector<std::string> &paths, CifarVariant variant);

/// MNIST IDX pair: image magic 2051, label magic 2049, big-endian.
Dataset load_mnist_idx(const std::string &image_file, const std::string &label_file);

/// Minimal NPY v1.0 reader for uint8 C-order arrays (CIFAR-10-C ships these).
struct NpyArray {
    std::vector<std::size_t> shape;
    std::vector<uint8_t> bytes;
};
NpyArray load_npy_u8(const std::string &path);

/// Per-feature standardization stats from a training split.
NormalizationStats compute_stats(const Dataset &train);

/// (x - mean) / std per feature. Stats always come from the training split.
Dataset normalize(const Dataset &ds, const NormalizationStats &stats);

struct Batch {
    DenseMatrix images;
    std::vector<int> labels;
};

/// One epoch worth of batches; a permutation of all samples when shuffled,
/// original order otherwise. Final partial batch is kept.
std::vector<Batch> batches(const Dataset &ds, std::size_t batch_size,
                           RngState &rng, bool shuffle);

/// n samples without replacement, stratified per class as evenly as possible;
/// leftover slots assigned by seeded draw.
Dataset subset(const Dataset &ds, std::size_t n, RngState &rng);

/// Writer used by tests and fixtures: emits CIFAR-format records from
/// byte-quantized images.
void write_cifar_file(const std::string &path,
                      const std::vector<std::vector<uint8_t>> &images,
                      const std::vector<int> &labels, CifarVariant variant);

} // namespace alignnet

#endif
