#include "robex/dataset.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "robex/model_io.hpp"

namespace robex {

void Dataset::validate() const {
    if (features.size() != labels.size())
        throw std::invalid_argument("dataset: feature/label count mismatch");
    if (n_classes < 1) throw std::invalid_argument("dataset: needs at least one class");
    if (!(x_min < x_max)) throw std::invalid_argument("dataset: empty domain");
    const std::size_t d = dim();
    for (const Vec& f : features) {
        if (f.size() != d) throw std::invalid_argument("dataset: inconsistent feature length");
        for (double v : f)
            if (!(v >= x_min && v <= x_max)) throw std::invalid_argument("dataset: feature outside domain");
    }
    for (int label : labels)
        if (label < 0 || label >= n_classes) throw std::invalid_argument("dataset: label out of range");
    if (image_shape && image_shape->feature_count() != d)
        throw std::invalid_argument("dataset: image shape does not match feature length");
}

Dataset make_blobs(std::size_t n_samples, int n_classes, std::size_t dim, std::uint64_t seed,
                   double separation, std::optional<ImageShape> shape) {
    if (n_classes < 1 || n_samples < static_cast<std::size_t>(n_classes))
        throw std::invalid_argument("make_blobs: need at least one sample per class");
    if (shape) dim = shape->feature_count();
    if (dim == 0) throw std::invalid_argument("make_blobs: zero feature dimension");

    Rng rng(mix_seed(seed, 0x424c4f42));

    // unit-variance blobs; centres rescaled so every class sits at least
    // `separation` standard deviations away from the nearest decision midpoint
    std::vector<Vec> centers(static_cast<std::size_t>(n_classes));
    for (auto& c : centers) c = sample_standard_normal(rng, dim);
    if (n_classes > 1) {
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < centers.size(); ++a)
            for (std::size_t b = a + 1; b < centers.size(); ++b) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < dim; ++j) {
                    const double d = centers[a][j] - centers[b][j];
                    d2 += d * d;
                }
                dmin = std::min(dmin, std::sqrt(d2));
            }
        if (!(dmin > 0.0)) throw std::runtime_error("make_blobs: degenerate centre draw");
        const double scale = 2.0 * separation / dmin;
        for (auto& c : centers)
            for (auto& v : c) v *= scale;
    }

    Dataset ds;
    ds.n_classes = n_classes;
    ds.image_shape = shape;
    ds.features.reserve(n_samples);
    ds.labels.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(n_classes));
        Vec f = sample_standard_normal(rng, dim);
        for (std::size_t j = 0; j < dim; ++j) f[j] += centers[static_cast<std::size_t>(label)][j];
        ds.features.push_back(std::move(f));
        ds.labels.push_back(label);
    }

    // min-max scale into [0, 1]
    double lo = ds.features[0][0], hi = ds.features[0][0];
    for (const Vec& f : ds.features)
        for (double v : f) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double range = hi - lo;
    for (Vec& f : ds.features)
        for (double& v : f) v = (v - lo) / range;
    ds.x_min = 0.0;
    ds.x_max = 1.0;
    ds.validate();
    return ds;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
    ds.validate();
    std::string body;
    body.reserve(ds.size() * (ds.dim() * 20 + 4));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        body += std::to_string(ds.labels[i]);
        for (double v : ds.features[i]) {
            body += ',';
            body += format_real(v);
        }
        body += '\n';
    }
    write_file_atomic(path, body);

    std::string meta;
    meta += "x_min = " + format_real(ds.x_min) + "\n";
    meta += "x_max = " + format_real(ds.x_max) + "\n";
    meta += "n_classes = " + std::to_string(ds.n_classes) + "\n";
    if (ds.image_shape)
        meta += "image_shape = " + std::to_string(ds.image_shape->height) + " " +
                std::to_string(ds.image_shape->width) + " " +
                std::to_string(ds.image_shape->channels) + "\n";
    write_file_atomic(path + ".meta", meta);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    Dataset ds;
    std::string line;
    int max_label = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) throw std::runtime_error("malformed dataset row in " + path);
        const int label = std::stoi(cell);
        Vec f;
        while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
        if (f.empty()) throw std::runtime_error("dataset row without features in " + path);
        ds.labels.push_back(label);
        ds.features.push_back(std::move(f));
        max_label = std::max(max_label, label);
    }
    if (ds.features.empty()) throw std::runtime_error("dataset file is empty: " + path);
    ds.n_classes = max_label + 1;
    ds.x_min = 0.0;
    ds.x_max = 1.0;

    std::ifstream meta(path + ".meta");
    if (meta) {
        while (std::getline(meta, line)) {
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw std::runtime_error("malformed meta line: " + t);
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key == "x_min") ds.x_min = std::stod(value);
            else if (key == "x_max") ds.x_max = std::stod(value);
            else if (key == "n_classes") ds.n_classes = std::stoi(value);
            else if (key == "image_shape") {
                std::stringstream vs(value);
                ImageShape shape;
                if (!(vs >> shape.height >> shape.width >> shape.channels))
                    throw std::runtime_error("malformed image_shape in meta: " + value);
                ds.image_shape = shape;
            } else {
                throw std::runtime_error("unknown meta key: " + key);
            }
        }
    }
    ds.validate();
    return ds;
}

Dataset load_cifar_binary(const std::string& path, std::size_t limit) {
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kPixels = 3072;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open CIFAR batch: " + path);

    Dataset ds;
    ds.n_classes = 10;
    ds.image_shape = ImageShape{32, 32, 3};
    ds.x_min = 0.0;
    ds.x_max = 1.0;

    std::vector<unsigned char> record(kRecord);
    while (in.read(reinterpret_cast<char*>(record.data()), kRecord)) {
        Vec f(kPixels);
        for (std::size_t i = 0; i < kPixels; ++i) f[i] = static_cast<double>(record[1 + i]) / 255.0;
        ds.features.push_back(std::move(f));
        ds.labels.push_back(static_cast<int>(record[0]));
        if (limit != 0 && ds.features.size() >= limit) break;
    }
    if (in.gcount() != 0 && static_cast<std::size_t>(in.gcount()) != kRecord && !(limit && ds.features.size() >= limit))
        throw std::runtime_error("truncated CIFAR record in " + path);
    if (ds.features.empty()) throw std::runtime_error("no CIFAR records in " + path);
    ds.validate();
    return ds;
}

}  // namespace robex
