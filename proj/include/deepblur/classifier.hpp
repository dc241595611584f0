#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepblur/image.hpp"
#include "deepblur/perception.hpp"

namespace deepblur {

struct LabeledImage {
    ImageTensor image;
    int label = 0;
    int source_index = -1;  // position in the originating dataset, -1 if detached
};

struct TrainConfig {
    int epochs = 200;
    double lr = 0.5;
    double momentum = 0.9;
    int batch = 16;
    std::uint64_t seed = 13;
};

// Multinomial logistic model over extracted features with train-set
// standardization. Emits a probability vector (nonnegative, sums to 1).
class SurrogateClassifier {
public:
    ExtractorSpec features;
    TrainConfig config;
    int n_classes = 0;
    int feature_dim = 0;
    std::vector<double> weights;  // feature_dim x n_classes, row-major
    std::vector<double> bias;     // n_classes
    std::vector<double> feat_mean;
    std::vector<double> feat_scale;
    bool trained = false;

    std::vector<double> predict_proba(const ImageTensor& img) const;
    std::vector<double> predict_proba_features(const FeatureVector& f) const;

    // Gradient of -log p[label] with respect to the image pixels.
    ImageTensor input_gradient(const ImageTensor& img, int label) const;

    std::string config_digest() const;
};

// Mini-batch gradient descent with momentum on the cross-entropy objective;
// returns the weights with the best validation top-1 across epochs (the last
// epoch's weights when val is empty). Requires at least two distinct labels.
SurrogateClassifier train_classifier(const std::vector<LabeledImage>& train,
                                     const std::vector<LabeledImage>& val,
                                     const ExtractorSpec& features, const TrainConfig& cfg);

// Degenerate single-class model: always answers `label` with confidence 1.
SurrogateClassifier single_class_classifier(const ExtractorSpec& features, int feature_dim);

}  // namespace deepblur
