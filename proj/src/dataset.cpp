#include "skyfed/dataset.hpp"

#include "skyfed/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

namespace skyfed {

std::vector<long> class_counts(long n, int classes, double label_skew, int dominant) {
    if (classes < 1) throw ValidationError("classes", "must be >= 1");
    if (!(label_skew >= 0.0 && label_skew <= 1.0)) throw ValidationError("label_skew", "must lie in [0, 1]");
    dominant = ((dominant % classes) + classes) % classes;
    std::vector<double> exact(static_cast<std::size_t>(classes));
    std::vector<long> counts(exact.size());
    long assigned = 0;
    for (int c = 0; c < classes; ++c) {
        double p = (1.0 - label_skew) / classes + (c == dominant ? label_skew : 0.0);
        exact[static_cast<std::size_t>(c)] = p * static_cast<double>(n);
        counts[static_cast<std::size_t>(c)] = static_cast<long>(std::floor(exact[static_cast<std::size_t>(c)] + 1e-9));
        assigned += counts[static_cast<std::size_t>(c)];
    }
    std::vector<int> order(exact.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        auto fa = exact[static_cast<std::size_t>(a)] - static_cast<double>(counts[static_cast<std::size_t>(a)]);
        auto fb = exact[static_cast<std::size_t>(b)] - static_cast<double>(counts[static_cast<std::size_t>(b)]);
        return fa > fb;
    });
    for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size(), ++assigned)
        ++counts[static_cast<std::size_t>(order[k])];
    return counts;
}

LocalDataset make_synthetic(long n, long dim, int classes, double label_skew, Rng& rng, int dominant,
                            std::uint64_t centers_seed) {
    if (n < classes) throw ValidationError("n_samples", "need at least one sample per class");
    if (dim < 1) throw ValidationError("dim", "must be >= 1");
    Rng crng(centers_seed, "class-centers");
    Eigen::MatrixXd centers(classes, dim);
    for (int c = 0; c < classes; ++c)
        for (long j = 0; j < dim; ++j) centers(c, j) = crng.uniform();

    const auto counts = class_counts(n, classes, label_skew, dominant);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n));
    for (int c = 0; c < classes; ++c) labels.insert(labels.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(c)]), c);
    std::shuffle(labels.begin(), labels.end(), rng.engine());

    LocalDataset ds;
    ds.classes = classes;
    ds.source = DataSource::kSynthetic;
    ds.features.resize(n, dim);
    ds.labels.resize(n);
    for (long s = 0; s < n; ++s) {
        const int c = labels[static_cast<std::size_t>(s)];
        ds.labels(s) = c;
        for (long j = 0; j < dim; ++j) ds.features(s, j) = centers(c, j) + rng.normal(0.0, 0.25);
    }
    return ds;
}

LocalDataset add_sensor_noise(const LocalDataset& clean, double var, Rng& rng) {
    if (!(var >= 0.0)) throw ValidationError("noise_var", "must be nonnegative");
    LocalDataset out = clean;
    out.noise_var = clean.noise_var + var;
    if (var == 0.0) return out;
    const double sd = std::sqrt(var);
    for (long s = 0; s < out.size(); ++s)
        for (long j = 0; j < out.dim(); ++j) out.features(s, j) += rng.normal(0.0, sd);
    return out;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path, long offset) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4))
        throw IoError(path + ": truncated header at offset " + std::to_string(offset));
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    return in;
}

}  // namespace

LocalDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    auto img = open_binary(images_path);
    const auto magic = read_be32(img, images_path, 0);
    if (magic != 0x00000803u) throw IoError(images_path + ": bad magic at offset 0 (expected 0x00000803)");
    const auto count = read_be32(img, images_path, 4);
    const auto rows = read_be32(img, images_path, 8);
    const auto cols = read_be32(img, images_path, 12);

    auto lab = open_binary(labels_path);
    const auto lmagic = read_be32(lab, labels_path, 0);
    if (lmagic != 0x00000801u) throw IoError(labels_path + ": bad magic at offset 0 (expected 0x00000801)");
    const auto lcount = read_be32(lab, labels_path, 4);
    if (lcount != count)
        throw IoError("image count " + std::to_string(count) + " does not match label count " + std::to_string(lcount));

    const long n = count;
    const long dim = static_cast<long>(rows) * static_cast<long>(cols);
    std::vector<unsigned char> pixels(static_cast<std::size_t>(n * dim));
    if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
        throw IoError(images_path + ": truncated pixel data");
    std::vector<unsigned char> labels(static_cast<std::size_t>(n));
    if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size())))
        throw IoError(labels_path + ": truncated label data");

    LocalDataset ds;
    ds.source = DataSource::kIdx;
    ds.features.resize(n, dim);
    ds.labels.resize(n);
    int max_label = 0;
    for (long s = 0; s < n; ++s) {
        for (long j = 0; j < dim; ++j) ds.features(s, j) = pixels[static_cast<std::size_t>(s * dim + j)] / 255.0;
        ds.labels(s) = labels[static_cast<std::size_t>(s)];
        max_label = std::max(max_label, ds.labels(s));
    }
    ds.classes = max_label + 1;
    return ds;
}

LocalDataset take_partition(const LocalDataset& pool, long n, double label_skew, int dominant,
                            std::vector<long>& cursor) {
    const int classes = pool.classes;
    cursor.resize(static_cast<std::size_t>(classes), 0);
    std::vector<std::vector<long>> by_class(static_cast<std::size_t>(classes));
    for (long s = 0; s < pool.size(); ++s) by_class[static_cast<std::size_t>(pool.labels(s))].push_back(s);

    const auto counts = class_counts(n, classes, label_skew, dominant);
    std::vector<long> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (int c = 0; c < classes; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        const auto& avail = by_class[cc];
        if (cursor[cc] + counts[cc] > static_cast<long>(avail.size()))
            throw ValidationError("dataset_size", "not enough samples of class " + std::to_string(c) + " in the pool");
        for (long k = 0; k < counts[cc]; ++k) rows.push_back(avail[static_cast<std::size_t>(cursor[cc] + k)]);
        cursor[cc] += counts[cc];
    }
    std::sort(rows.begin(), rows.end());

    LocalDataset out;
    out.source = pool.source;
    out.classes = classes;
    out.noise_var = pool.noise_var;
    out.features.resize(n, pool.dim());
    out.labels.resize(n);
    for (long k = 0; k < n; ++k) {
        out.features.row(k) = pool.features.row(rows[static_cast<std::size_t>(k)]);
        out.labels(k) = pool.labels(rows[static_cast<std::size_t>(k)]);
    }
    return out;
}

}  // namespace skyfed
