#pragma once

#include <cstdint>
#include <vector>

#include "deepblur/generator.hpp"
#include "deepblur/inversion.hpp"

namespace deepblur {

// Standard inversion benchmark: a target rendered from a known seeded latent
// plus the two canonical starting points.
struct BenchmarkCase {
    LatentCode target_latent;
    ImageTensor target;
    LatentCode mean_init;
    LatentCode random_init;
};

BenchmarkCase make_benchmark_case(std::uint64_t seed, const BlobGeneratorConfig& cfg);

// The suite's pinned generator configuration (the type defaults).
BlobGeneratorConfig benchmark_generator();

// Pinned per-optimizer settings used by the benchmark and the comparison CLI.
OptimizerConfig benchmark_optimizer(OptimizerKind kind);

// First index whose loss is below threshold, or -1 if never reached.
int steps_to_threshold(const std::vector<double>& losses, double threshold);

}  // namespace deepblur
