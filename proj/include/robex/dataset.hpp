#ifndef ROBEX_DATASET_HPP
#define ROBEX_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robex/numerics.hpp"

namespace robex {

struct ImageShape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::size_t feature_count() const { return height * width * channels; }
};

struct Dataset {
    std::vector<Vec> features;
    std::vector<int> labels;
    int n_classes = 0;
    std::optional<ImageShape> image_shape;
    double x_min = 0.0;
    double x_max = 1.0;

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
    void validate() const;
};

/// Gaussian-blob classification data with class centres `separation` blob
/// standard deviations apart, min-max scaled into [0, 1].
Dataset make_blobs(std::size_t n_samples, int n_classes, std::size_t dim, std::uint64_t seed,
                   double separation = 3.0, std::optional<ImageShape> shape = std::nullopt);

/// Header-less CSV rows `label,f1,...,fN` plus a `<path>.meta` sidecar with
/// the domain, class count and optional image shape.
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

/// CIFAR-10 binary batches: 3073-byte records, one label byte followed by
/// 3072 channel-planar pixel bytes, scaled to [0, 1]. limit == 0 reads all.
Dataset load_cifar_binary(const std::string& path, std::size_t limit = 0);

}  // namespace robex

#endif
