#pragma once

#include "gdm/data.hpp"
#include "gdm/random.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace gdm::testkit {

inline std::filesystem::path manifest_dir() { return std::filesystem::path(GDM_SOURCE_DIR) / "data" / "manifests"; }

inline Dataset load_bundled(const std::string& name) { return load_dataset(load_manifest(manifest_dir() / (name + ".manifest"))); }

inline double normal(SeedStream& rng) {
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// m Gaussian clusters in d dimensions, centers `separation` apart along the
/// axes, rows grouped by class.
inline Dataset make_blobs(std::size_t per_class, std::size_t m, std::size_t d, std::uint64_t seed,
                          double separation = 3.0) {
    SeedStream rng(seed);
    FeatureMatrix x(static_cast<Eigen::Index>(per_class * m), static_cast<Eigen::Index>(d));
    std::vector<int> y;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < m; ++c) {
        names.push_back("c" + std::to_string(c));
        for (std::size_t i = 0; i < per_class; ++i) {
            const auto r = static_cast<Eigen::Index>(c * per_class + i);
            for (std::size_t j = 0; j < d; ++j) {
                const double center = (j % m == c) ? separation : 0.0;
                x(r, static_cast<Eigen::Index>(j)) = center + normal(rng);
            }
            y.push_back(static_cast<int>(c));
        }
    }
    return Dataset(std::move(x), std::move(y), std::move(names), {});
}

/// Uniform random labels that cover every class.
inline std::vector<int> random_labels(SeedStream& rng, std::size_t n, std::size_t m) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i < m ? i : rng.below(m));
    rng.shuffle(std::span<int>(y));
    return y;
}

}  // namespace gdm::testkit
