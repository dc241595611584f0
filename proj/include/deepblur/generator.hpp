#pragma once

#include <cstdint>
#include <vector>

#include "deepblur/image.hpp"
#include "deepblur/rng.hpp"

namespace deepblur {

// L x D real matrix of generator inputs, row-major.
struct LatentCode {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    LatentCode() = default;
    LatentCode(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    bool same_shape(const LatentCode& o) const { return rows == o.rows && cols == o.cols; }
};

// Column layout of one blob row.
enum LatentColumn {
    kCenterX = 0,
    kCenterY = 1,
    kColorR = 2,
    kColorG = 3,
    kColorB = 4,
    kLogScale = 5,
};
inline constexpr int kLatentCols = 6;

struct BlobGeneratorConfig {
    int blobs = 16;          // latent rows L
    int size = 64;           // output is size x size x 3
    double steepness = 4.0;  // k in the logistic squash

    void validate() const;
};

struct LabeledDataset {
    struct Item {
        ImageTensor image;
        int label = 0;
        LatentCode latent;
    };
    std::vector<Item> items;
    int n_ids = 0;
    int n_per_id = 0;
};

// Renders the additive-Gaussian-blob image. For pixel p at normalized
// coordinates ((x+0.5)/S, (y+0.5)/S) and channel c:
//   A_c(p)   = sum_i color[i][c] * exp(-|p - center_i|^2 / (2 * exp(2*log_s_i)))
//   out_c(p) = 1 / (1 + exp(-k * A_c(p)))
ImageTensor synth_generate(const LatentCode& w, const BlobGeneratorConfig& cfg);

// Vector-Jacobian product: d<output, upstream>/dw for an upstream array of the
// generator's output shape.
LatentCode synth_gradient(const LatentCode& w, const BlobGeneratorConfig& cfg,
                          const ImageTensor& upstream);

// Element-wise arithmetic mean of a nonempty list of same-shape latents.
LatentCode mean_latent(const std::vector<LatentCode>& samples);

// One latent with standard-normal entries, consuming blobs*6 values from rng.
LatentCode sample_latent(SeededRng& rng, int blobs);

// Canonical scene prior of this generator: centers inside the frame margin,
// standard-normal colors, bounded radial scales. Targets drawn from it are
// well-posed for inversion.
LatentCode sample_scene_latent(SeededRng& rng, int blobs);

// Canonical search start: mean_latent over a fixed-seed sample of the scene
// prior. Deterministic for a given blob count.
LatentCode mean_init_latent(int blobs);

// Synthetic labeled identities: per identity a standard-normal base latent,
// per image base + jitter * normal, rendered through the generator.
LabeledDataset make_identity_dataset(int n_ids, int n_per_id, double jitter,
                                     std::uint64_t seed, const BlobGeneratorConfig& cfg);

}  // namespace deepblur
