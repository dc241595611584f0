#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepblur/classifier.hpp"
#include "deepblur/generator.hpp"
#include "deepblur/image.hpp"
#include "deepblur/inversion.hpp"

namespace deepblur {

// Truncated discrete 2-D Gaussian, radius ceil(3*sigma), renormalized.
// sigma = 0 degenerates to the single weight 1.
struct GaussianKernel {
    double sigma = 0.0;
    int radius = 0;
    std::vector<double> weights;  // (2*radius+1)^2 row-major, sums to 1

    double at(int dy, int dx) const {
        return weights[static_cast<std::size_t>(dy + radius) * (2 * radius + 1) + (dx + radius)];
    }
};

GaussianKernel gaussian_kernel(double sigma);

// 2-D convolution of the latent matrix with gaussian_kernel(sigma), reflected
// boundary (edge mirrored without repeating the edge element).
LatentCode blur_latent(const LatentCode& w, double sigma);

// Every entry replaced by the global mean of w: the sigma -> infinity limit.
LatentCode average_latent_mode(const LatentCode& w);

struct DeepBlurSettings {
    BlobGeneratorConfig generator;
    ExtractorSpec features;
    OptimizerConfig optimizer;
    bool random_init = false;       // default start is the mean latent
    std::uint64_t init_seed = 0;    // consulted for random_init only
};

struct DeepBlurResult {
    ImageTensor image;
    LatentCode latent_before;  // recovered representation
    LatentCode latent_after;   // filtered representation
    InversionResult inversion;
};

// invert -> blur_latent (or global-mean mode) -> regenerate.
DeepBlurResult deep_blur(const ImageTensor& img, double sigma, bool average,
                         const DeepBlurSettings& settings);

// Same filtering/regeneration applied to an already recovered latent.
DeepBlurResult deep_blur_from_latent(const LatentCode& recovered, double sigma, bool average,
                                     const BlobGeneratorConfig& cfg);

// Pixel-space baselines.
ImageTensor pixel_blur(const ImageTensor& img, double sigma);
ImageTensor pixelate(const ImageTensor& img, int block);
// Half-open rectangle [x0,x1) x [y0,y1) set to black.
ImageTensor mask(const ImageTensor& img, int x0, int y0, int x1, int y1);
// Projected sign-gradient ascent on the surrogate's loss for the true label;
// per-pixel change capped at eps, step size eps/steps.
ImageTensor adv_noise(const ImageTensor& img, const SurrogateClassifier& surrogate,
                      int true_label, double eps, int steps);

enum class ObfuscatorKind { none, deepblur, deepblur_average, pixel_blur, pixelate, mask, advnoise };

std::string obfuscator_kind_name(ObfuscatorKind kind);
ObfuscatorKind obfuscator_kind_from_name(const std::string& name);

struct ObfuscatorSpec {
    ObfuscatorKind kind = ObfuscatorKind::deepblur;
    double sigma = 1.0;                    // deepblur, pixel_blur
    int block = 8;                         // pixelate
    int mask_x0 = 16, mask_y0 = 16, mask_x1 = 48, mask_y1 = 48;
    double eps = 0.08;                     // advnoise
    int steps = 10;                        // advnoise
    DeepBlurSettings inversion;            // deepblur kinds

    void validate() const;
    std::string method_name() const;  // CSV "method" column
    std::string param_string() const; // CSV "param" column
};

struct ObfuscationContext {
    const SurrogateClassifier* surrogate = nullptr;  // advnoise
    int true_label = -1;                             // advnoise
    const LatentCode* recovered = nullptr;           // reuse of a prior inversion
};

ImageTensor apply_obfuscator(const ImageTensor& img, const ObfuscatorSpec& spec,
                             const ObfuscationContext& ctx = {});

}  // namespace deepblur
