#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepblur/image.hpp"

namespace deepblur {

using FeatureVector = std::vector<double>;

enum class ExtractorKind { pixel, randconv };

struct ExtractorSpec {
    ExtractorKind kind = ExtractorKind::pixel;
    std::uint64_t seed = 0;  // randconv only
    int stages = 3;          // randconv only

    std::string describe() const;
};

// pixel: the flattened image. randconv: `stages` repetitions of a fixed
// seeded 3x3 conv bank (8 filters, zero padding), softplus, 2x2 mean-pool,
// then flatten. Weights derive from the seed alone and are never trained.
FeatureVector extract(const ImageTensor& img, const ExtractorSpec& spec);

// Pullback of d<features, upstream> into image space.
ImageTensor extract_vjp(const ImageTensor& img, const ExtractorSpec& spec,
                        const FeatureVector& upstream);

// Mean squared difference (1/F) * sum (y_i - yhat_i)^2.
double feature_loss(const FeatureVector& y, const FeatureVector& yhat);

// Gradient of feature_loss(y, extract(img)) with respect to the image, where
// yhat must equal extract(img, spec).
ImageTensor feature_loss_gradient(const FeatureVector& y, const FeatureVector& yhat,
                                  const ExtractorSpec& spec, const ImageTensor& img);

}  // namespace deepblur
