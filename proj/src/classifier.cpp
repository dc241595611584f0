#include "deepblur/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "deepblur/inversion.hpp"
#include "deepblur/rng.hpp"

namespace deepblur {

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

}  // namespace

std::vector<double> SurrogateClassifier::predict_proba_features(const FeatureVector& f) const {
    if (!trained) throw std::logic_error("classifier: not trained");
    if (static_cast<int>(f.size()) != feature_dim)
        throw std::invalid_argument("classifier: feature dimension mismatch");
    std::vector<double> logits(n_classes, 0.0);
    for (int j = 0; j < feature_dim; ++j) {
        const double x = (f[j] - feat_mean[j]) / feat_scale[j];
        if (x == 0.0) continue;
        const double* wrow = &weights[static_cast<std::size_t>(j) * n_classes];
        for (int k = 0; k < n_classes; ++k) logits[k] += wrow[k] * x;
    }
    for (int k = 0; k < n_classes; ++k) logits[k] += bias[k];
    return softmax(logits);
}

std::vector<double> SurrogateClassifier::predict_proba(const ImageTensor& img) const {
    return predict_proba_features(extract(img, features));
}

ImageTensor SurrogateClassifier::input_gradient(const ImageTensor& img, int label) const {
    if (!trained) throw std::logic_error("classifier: not trained");
    if (label < 0 || label >= n_classes)
        throw std::invalid_argument("classifier: label out of range");
    const FeatureVector f = extract(img, features);
    const std::vector<double> p = predict_proba_features(f);
    // d(-log p[label])/d feature_j = sum_k w[j][k] (p_k - 1{k=label}) / scale_j
    FeatureVector up(feature_dim, 0.0);
    for (int j = 0; j < feature_dim; ++j) {
        const double* wrow = &weights[static_cast<std::size_t>(j) * n_classes];
        double acc = 0.0;
        for (int k = 0; k < n_classes; ++k) acc += wrow[k] * (p[k] - (k == label ? 1.0 : 0.0));
        up[j] = acc / feat_scale[j];
    }
    return extract_vjp(img, features, up);
}

std::string SurrogateClassifier::config_digest() const {
    return "logreg(" + features.describe() + ";epochs=" + std::to_string(config.epochs) +
           ";lr=" + std::to_string(config.lr) + ";momentum=" + std::to_string(config.momentum) +
           ";batch=" + std::to_string(config.batch) + ";seed=" + std::to_string(config.seed) + ")";
}

SurrogateClassifier single_class_classifier(const ExtractorSpec& features, int feature_dim) {
    SurrogateClassifier c;
    c.features = features;
    c.n_classes = 1;
    c.feature_dim = feature_dim;
    c.weights.assign(feature_dim, 0.0);
    c.bias.assign(1, 0.0);
    c.feat_mean.assign(feature_dim, 0.0);
    c.feat_scale.assign(feature_dim, 1.0);
    c.trained = true;
    return c;
}

SurrogateClassifier train_classifier(const std::vector<LabeledImage>& train,
                                     const std::vector<LabeledImage>& val,
                                     const ExtractorSpec& features, const TrainConfig& cfg) {
    if (train.empty()) throw std::invalid_argument("train_classifier: empty training set");
    if (cfg.epochs < 0) throw std::invalid_argument("train_classifier: epochs must be >= 0");
    if (cfg.batch < 1) throw std::invalid_argument("train_classifier: batch must be >= 1");

    std::set<int> labels;
    for (const auto& s : train) labels.insert(s.label);
    if (labels.size() < 2)
        throw std::invalid_argument("train_classifier: need at least two distinct labels");
    const int K = *labels.rbegin() + 1;
    if (*labels.begin() < 0) throw std::invalid_argument("train_classifier: negative label");

    const int n = static_cast<int>(train.size());
    std::vector<FeatureVector> feats(n);
    for (int i = 0; i < n; ++i) feats[i] = extract(train[i].image, features);
    const int F = static_cast<int>(feats[0].size());

    std::vector<double> mean(F, 0.0), scale(F, 0.0);
    for (const auto& f : feats)
        for (int j = 0; j < F; ++j) mean[j] += f[j];
    for (double& m : mean) m /= n;
    for (const auto& f : feats)
        for (int j = 0; j < F; ++j) scale[j] += (f[j] - mean[j]) * (f[j] - mean[j]);
    for (double& s : scale) s = std::max(std::sqrt(s / n), 1e-8);

    for (auto& f : feats)
        for (int j = 0; j < F; ++j) f[j] = (f[j] - mean[j]) / scale[j];

    SurrogateClassifier model;
    model.features = features;
    model.config = cfg;
    model.n_classes = K;
    model.feature_dim = F;
    model.weights.assign(static_cast<std::size_t>(F) * K, 0.0);
    model.bias.assign(K, 0.0);
    model.feat_mean = mean;
    model.feat_scale = scale;
    model.trained = true;

    std::vector<FeatureVector> val_feats(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) val_feats[i] = extract(val[i].image, features);

    auto val_top1 = [&](const SurrogateClassifier& m) {
        if (val.empty()) return 0.0;
        int hits = 0;
        for (std::size_t i = 0; i < val.size(); ++i) {
            const auto p = m.predict_proba_features(val_feats[i]);
            const int pred =
                static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
            if (pred == val[i].label) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(val.size());
    };

    // parameters flattened as [weights | bias] so the shared momentum update
    // from the inversion module drives training
    OptimizerConfig opt;
    opt.kind = OptimizerKind::sgdm;
    opt.learning_rate = cfg.lr;
    opt.momentum = cfg.momentum;
    SgdmState st;
    st.x.assign(model.weights.size() + model.bias.size(), 0.0);

    auto unpack = [&](SurrogateClassifier& m) {
        std::copy(st.x.begin(), st.x.begin() + m.weights.size(), m.weights.begin());
        std::copy(st.x.begin() + m.weights.size(), st.x.end(), m.bias.begin());
    };

    SurrogateClassifier best = model;
    double best_acc = val_top1(model);

    SeededRng rng(cfg.seed);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);

        for (int start = 0; start < n; start += cfg.batch) {
            const int end = std::min(start + cfg.batch, n);
            Vector grad(st.x.size(), 0.0);
            const double inv_b = 1.0 / (end - start);
            for (int bi = start; bi < end; ++bi) {
                const int idx = order[bi];
                const FeatureVector& x = feats[idx];
                std::vector<double> logits(K, 0.0);
                for (int j = 0; j < F; ++j) {
                    if (x[j] == 0.0) continue;
                    const double* wrow = &st.x[static_cast<std::size_t>(j) * K];
                    for (int k = 0; k < K; ++k) logits[k] += wrow[k] * x[j];
                }
                const double* b = &st.x[static_cast<std::size_t>(F) * K];
                for (int k = 0; k < K; ++k) logits[k] += b[k];
                std::vector<double> p = softmax(logits);
                p[train[idx].label] -= 1.0;
                for (int j = 0; j < F; ++j) {
                    if (x[j] == 0.0) continue;
                    double* grow = &grad[static_cast<std::size_t>(j) * K];
                    for (int k = 0; k < K; ++k) grow[k] += inv_b * x[j] * p[k];
                }
                double* gb = &grad[static_cast<std::size_t>(F) * K];
                for (int k = 0; k < K; ++k) gb[k] += inv_b * p[k];
            }
            sgdm_step(st, grad, opt);
        }

        unpack(model);
        const double acc = val_top1(model);
        if (acc > best_acc) {
            best_acc = acc;
            best = model;
        }
    }

    unpack(model);
    return val.empty() ? model : best;
}

}  // namespace deepblur
