#include "alignnet/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace alignnet {

static std::vector<uint8_t> read_all_bytes(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff len = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> buf(static_cast<std::size_t>(len));
    if (len > 0) f.read(reinterpret_cast<char *>(buf.data()), len);
    if (!f) throw IoError("short read: " + path);
    return buf;
}

Dataset load_cifar(const std::vector<std::string> &paths, CifarVariant variant) {
    const std::size_t pixels = 3072;
    const std::size_t record = variant == CifarVariant::Cifar10 ? 3073 : 3074;
    const int n_classes = variant == CifarVariant::Cifar10 ? 10 : 100;

    std::size_t total = 0;
    std::vector<std::vector<uint8_t>> files;
    for (const auto &p : paths) {
        auto buf = read_all_bytes(p);
        if (buf.size() % record != 0) {
            throw FormatError("cifar file " + p + ": length " +
                              std::to_string(buf.size()) +
                              " is not a multiple of record size " +
                              std::to_string(record) + " (excess at byte offset " +
                              std::to_string(buf.size() - buf.size() % record) + ")");
        }
        total += buf.size() / record;
        files.push_back(std::move(buf));
    }

    Dataset ds;
    ds.n_classes = n_classes;
    ds.pixel_shape = {3, 32, 32};
    ds.images = DenseMatrix(total, pixels);
    ds.labels.reserve(total);

    std::size_t row = 0;
    for (std::size_t fi = 0; fi < files.size(); ++fi) {
        const auto &buf = files[fi];
        for (std::size_t off = 0; off < buf.size(); off += record, ++row) {
            // CIFAR-100 records carry a coarse label first; it is discarded
            int label = variant == CifarVariant::Cifar10 ? buf[off] : buf[off + 1];
            if (label >= n_classes) {
                throw FormatError("cifar file " + paths[fi] + ": label " +
                                  std::to_string(label) + " out of range at byte offset " +
                                  std::to_string(off));
            }
            ds.labels.push_back(label);
            const uint8_t *px = buf.data() + off + (record - pixels);
            double *dst = ds.images.row_ptr(row);
            for (std::size_t k = 0; k < pixels; ++k)
                dst[k] = px[k] / 255.0;
        }
    }
    return ds;
}

static uint32_t read_be32(const uint8_t *p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
           (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

Dataset load_mnist_idx(const std::string &image_file, const std::string &label_file) {
    auto img = read_all_bytes(image_file);
    auto lab = read_all_bytes(label_file);
    if (img.size() < 16) throw FormatError("mnist image file too short: " + image_file);
    if (lab.size() < 8) throw FormatError("mnist label file too short: " + label_file);

    uint32_t img_magic = read_be32(img.data());
    if (img_magic != 0x00000803u) {
        std::ostringstream os;
        os << "mnist image file " << image_file << ": bad magic 0x" << std::hex
           << img_magic << " (expected 0x803)";
        throw FormatError(os.str());
    }
    uint32_t lab_magic = read_be32(lab.data());
    if (lab_magic != 0x00000801u) {
        std::ostringstream os;
        os << "mnist label file " << label_file << ": bad magic 0x" << std::hex
           << lab_magic << " (expected 0x801)";
        throw FormatError(os.str());
    }

    uint32_t n = read_be32(img.data() + 4);
    uint32_t h = read_be32(img.data() + 8);
    uint32_t w = read_be32(img.data() + 12);
    uint32_t nl = read_be32(lab.data() + 4);
    if (n != nl)
        throw FormatError("mnist: image count " + std::to_string(n) +
                          " != label count " + std::to_string(nl));
    std::size_t need = 16 + std::size_t(n) * h * w;
    if (img.size() != need)
        throw FormatError("mnist image file " + image_file + ": expected " +
                          std::to_string(need) + " bytes, got " +
                          std::to_string(img.size()));
    if (lab.size() != 8 + n)
        throw FormatError("mnist label file " + label_file + ": truncated payload");

    Dataset ds;
    ds.n_classes = 10;
    ds.pixel_shape = {1, int(h), int(w)};
    ds.images = DenseMatrix(n, std::size_t(h) * w);
    ds.labels.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        int label = lab[8 + i];
        if (label >= 10)
            throw FormatError("mnist label out of range: " + std::to_string(label));
        ds.labels.push_back(label);
        const uint8_t *px = img.data() + 16 + std::size_t(i) * h * w;
        double *dst = ds.images.row_ptr(i);
        for (std::size_t k = 0; k < std::size_t(h) * w; ++k)
            dst[k] = px[k] / 255.0;
    }
    return ds;
}

NpyArray load_npy_u8(const std::string &path) {
    auto buf = read_all_bytes(path);
    if (buf.size() < 10 || std::memcmp(buf.data(), "\x93NUMPY", 6) != 0)
        throw FormatError("npy file " + path + ": bad magic");
    uint8_t major = buf[6], minor = buf[7];
    if (major != 1 || minor != 0)
        throw FormatError("npy file " + path + ": unsupported version " +
                          std::to_string(major) + "." + std::to_string(minor));
    std::size_t header_len = buf[8] | (std::size_t(buf[9]) << 8);
    if (buf.size() < 10 + header_len)
        throw FormatError("npy file " + path + ": truncated header");
    std::string header(reinterpret_cast<const char *>(buf.data() + 10), header_len);

    auto find_field = [&](const std::string &key) -> std::string {
        auto pos = header.find("'" + key + "'");
        if (pos == std::string::npos)
            throw FormatError("npy file " + path + ": header missing field " + key);
        pos = header.find(':', pos);
        return header.substr(pos + 1);
    };

    std::string descr = find_field("descr");
    if (descr.find("u1") == std::string::npos)
        throw FormatError("npy file " + path + ": unsupported dtype in descr (need uint8)");
    std::string fortran = find_field("fortran_order");
    // skip leading whitespace
    auto fpos = fortran.find_first_not_of(" \t");
    if (fortran.compare(fpos, 5, "False") != 0)
        throw FormatError("npy file " + path + ": fortran_order must be False");

    std::string shape_part = find_field("shape");
    auto lp = shape_part.find('(');
    auto rp = shape_part.find(')');
    if (lp == std::string::npos || rp == std::string::npos)
        throw FormatError("npy file " + path + ": malformed shape tuple");
    std::string tuple = shape_part.substr(lp + 1, rp - lp - 1);

    NpyArray out;
    std::size_t count = 1;
    std::stringstream ss(tuple);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto b = tok.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        std::size_t dim = std::stoull(tok.substr(b));
        out.shape.push_back(dim);
        count *= dim;
    }

    std::size_t payload_off = 10 + header_len;
    if (buf.size() - payload_off != count)
        throw FormatError("npy file " + path + ": payload length " +
                          std::to_string(buf.size() - payload_off) +
                          " does not match shape product " + std::to_string(count));
    out.bytes.assign(buf.begin() + payload_off, buf.end());
    return out;
}

NormalizationStats compute_stats(const Dataset &train) {
    const std::size_t f = train.images.cols;
    const std::size_t n = train.images.rows;
    NormalizationStats st;
    st.mean.assign(f, 0.0);
    st.std.assign(f, 1.0);
    if (n == 0) return st;
    for (std::size_t i = 0; i < n; ++i) {
        const double *row = train.images.row_ptr(i);
        for (std::size_t j = 0; j < f; ++j) st.mean[j] += row[j];
    }
    for (auto &m : st.mean) m /= double(n);
    std::vector<double> var(f, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double *row = train.images.row_ptr(i);
        for (std::size_t j = 0; j < f; ++j) {
            double d = row[j] - st.mean[j];
            var[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < f; ++j) {
        double s = std::sqrt(var[j] / double(n));
        st.std[j] = s > 0.0 ? s : 1.0;
    }
    return st;
}

Dataset normalize(const Dataset &ds, const NormalizationStats &stats) {
    if (stats.mean.size() != ds.images.cols || stats.std.size() != ds.images.cols)
        throw ShapeError("normalize: stats dimension " + std::to_string(stats.mean.size()) +
                         " != feature count " + std::to_string(ds.images.cols));
    Dataset out = ds;
    for (std::size_t i = 0; i < out.images.rows; ++i) {
        double *row = out.images.row_ptr(i);
        for (std::size_t j = 0; j < out.images.cols; ++j)
            row[j] = (row[j] - stats.mean[j]) / stats.std[j];
    }
    return out;
}

std::vector<Batch> batches(const Dataset &ds, std::size_t batch_size,
                           RngState &rng, bool shuffle) {
    if (batch_size < 1) throw InvalidArgument("batches: batch_size must be >= 1");
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) {
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = rng.next_below(i);
            std::swap(order[i - 1], order[j]);
        }
    }
    std::vector<Batch> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        std::size_t bs = std::min(batch_size, n - start);
        Batch b;
        b.images = DenseMatrix(bs, ds.images.cols);
        b.labels.resize(bs);
        for (std::size_t r = 0; r < bs; ++r) {
            std::size_t src = order[start + r];
            std::copy(ds.images.row_ptr(src), ds.images.row_ptr(src) + ds.images.cols,
                      b.images.row_ptr(r));
            b.labels[r] = ds.labels[src];
        }
        out.push_back(std::move(b));
    }
    return out;
}

Dataset subset(const Dataset &ds, std::size_t n, RngState &rng) {
    if (n > ds.size())
        throw InvalidArgument("subset: requested " + std::to_string(n) +
                              " samples from dataset of " + std::to_string(ds.size()));
    std::vector<std::vector<std::size_t>> by_class(ds.n_classes);
    for (std::size_t i = 0; i < ds.size(); ++i)
        by_class[ds.labels[i]].push_back(i);
    for (auto &idx : by_class) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::size_t j = rng.next_below(i);
            std::swap(idx[i - 1], idx[j]);
        }
    }

    // even per-class quota first, then spread the remainder by seeded draw
    std::size_t base = n / ds.n_classes;
    std::vector<std::size_t> take(ds.n_classes);
    std::size_t assigned = 0;
    for (int c = 0; c < ds.n_classes; ++c) {
        take[c] = std::min(base, by_class[c].size());
        assigned += take[c];
    }
    std::vector<int> classes(ds.n_classes);
    std::iota(classes.begin(), classes.end(), 0);
    while (assigned < n) {
        for (std::size_t i = classes.size(); i > 1; --i) {
            std::size_t j = rng.next_below(i);
            std::swap(classes[i - 1], classes[j]);
        }
        bool progress = false;
        for (int c : classes) {
            if (assigned >= n) break;
            if (take[c] < by_class[c].size()) {
                ++take[c];
                ++assigned;
                progress = true;
            }
        }
        if (!progress) break;
    }

    std::vector<std::size_t> pick;
    pick.reserve(n);
    for (int c = 0; c < ds.n_classes; ++c)
        for (std::size_t k = 0; k < take[c]; ++k)
            pick.push_back(by_class[c][k]);

    Dataset out;
    out.n_classes = ds.n_classes;
    out.pixel_shape = ds.pixel_shape;
    out.images = DenseMatrix(pick.size(), ds.images.cols);
    out.labels.resize(pick.size());
    for (std::size_t r = 0; r < pick.size(); ++r) {
        std::copy(ds.images.row_ptr(pick[r]), ds.images.row_ptr(pick[r]) + ds.images.cols,
                  out.images.row_ptr(r));
        out.labels[r] = ds.labels[pick[r]];
    }
    return out;
}

void write_cifar_file(const std::string &path,
                      const std::vector<std::vector<uint8_t>> &images,
                      const std::vector<int> &labels, CifarVariant variant) {
    if (images.size() != labels.size())
        throw InvalidArgument("write_cifar_file: image/label count mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write file: " + path);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].size() != 3072)
            throw InvalidArgument("write_cifar_file: image must have 3072 bytes");
        if (variant == CifarVariant::Cifar100) {
            uint8_t coarse = 0;
            f.put(char(coarse));
        }
        f.put(char(uint8_t(labels[i])));
        f.write(reinterpret_cast<const char *>(images[i].data()), 3072);
    }
    if (!f) throw IoError("write failed: " + path);
}

} // namespace alignnet
