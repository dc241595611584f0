#include "deepblur/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace deepblur {

void BlobGeneratorConfig::validate() const {
    if (blobs < 2) throw std::invalid_argument("generator: blobs must be >= 2");
    if (size < 8) throw std::invalid_argument("generator: size must be >= 8");
    if (!(steepness > 0.0) || !std::isfinite(steepness))
        throw std::invalid_argument("generator: steepness must be positive");
}

namespace {

void check_latent_shape(const LatentCode& w, const BlobGeneratorConfig& cfg) {
    if (w.rows != cfg.blobs || w.cols != kLatentCols)
        throw std::invalid_argument("generator: latent must be blobs x 6");
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ImageTensor synth_generate(const LatentCode& w, const BlobGeneratorConfig& cfg) {
    cfg.validate();
    check_latent_shape(w, cfg);

    const int S = cfg.size;
    const int L = cfg.blobs;
    ImageTensor out(S, S, 3);
    for (int y = 0; y < S; ++y) {
        const double py = (y + 0.5) / S;
        for (int x = 0; x < S; ++x) {
            const double px = (x + 0.5) / S;
            double a[3] = {0.0, 0.0, 0.0};
            for (int i = 0; i < L; ++i) {
                const double dx = px - w.at(i, kCenterX);
                const double dy = py - w.at(i, kCenterY);
                const double s2 = std::exp(2.0 * w.at(i, kLogScale));
                const double e = std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
                a[0] += w.at(i, kColorR) * e;
                a[1] += w.at(i, kColorG) * e;
                a[2] += w.at(i, kColorB) * e;
            }
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = logistic(cfg.steepness * a[c]);
        }
    }
    return out;
}

LatentCode synth_gradient(const LatentCode& w, const BlobGeneratorConfig& cfg,
                          const ImageTensor& upstream) {
    cfg.validate();
    check_latent_shape(w, cfg);
    if (upstream.height != cfg.size || upstream.width != cfg.size || upstream.channels != 3)
        throw std::invalid_argument("generator: upstream shape mismatch");

    const int S = cfg.size;
    const int L = cfg.blobs;
    const double k = cfg.steepness;
    LatentCode grad(L, kLatentCols, 0.0);

    for (int y = 0; y < S; ++y) {
        const double py = (y + 0.5) / S;
        for (int x = 0; x < S; ++x) {
            const double px = (x + 0.5) / S;

            // forward activations at this pixel
            double a[3] = {0.0, 0.0, 0.0};
            for (int i = 0; i < L; ++i) {
                const double dx = px - w.at(i, kCenterX);
                const double dy = py - w.at(i, kCenterY);
                const double s2 = std::exp(2.0 * w.at(i, kLogScale));
                const double e = std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
                a[0] += w.at(i, kColorR) * e;
                a[1] += w.at(i, kColorG) * e;
                a[2] += w.at(i, kColorB) * e;
            }
            // u_c = upstream_c * dout/dA = upstream_c * k * sig * (1 - sig)
            double u[3];
            for (int c = 0; c < 3; ++c) {
                const double sig = logistic(k * a[c]);
                u[c] = upstream.at(y, x, c) * k * sig * (1.0 - sig);
            }

            for (int i = 0; i < L; ++i) {
                const double dx = px - w.at(i, kCenterX);
                const double dy = py - w.at(i, kCenterY);
                const double d2 = dx * dx + dy * dy;
                const double s2 = std::exp(2.0 * w.at(i, kLogScale));
                const double e = std::exp(-d2 / (2.0 * s2));
                const double cdot = u[0] * w.at(i, kColorR) + u[1] * w.at(i, kColorG) +
                                    u[2] * w.at(i, kColorB);
                grad.at(i, kCenterX) += cdot * e * dx / s2;
                grad.at(i, kCenterY) += cdot * e * dy / s2;
                grad.at(i, kColorR) += u[0] * e;
                grad.at(i, kColorG) += u[1] * e;
                grad.at(i, kColorB) += u[2] * e;
                grad.at(i, kLogScale) += cdot * e * d2 / s2;
            }
        }
    }
    return grad;
}

LatentCode mean_latent(const std::vector<LatentCode>& samples) {
    if (samples.empty()) throw std::invalid_argument("mean_latent: empty sample list");
    const LatentCode& first = samples.front();
    LatentCode out(first.rows, first.cols, 0.0);
    for (const LatentCode& s : samples) {
        if (!s.same_shape(first)) throw std::invalid_argument("mean_latent: shape mismatch");
        for (std::size_t i = 0; i < s.v.size(); ++i) out.v[i] += s.v[i];
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (double& x : out.v) x *= inv;
    return out;
}

LatentCode sample_latent(SeededRng& rng, int blobs) {
    LatentCode w(blobs, kLatentCols);
    for (double& x : w.v) x = rng.normal();
    return w;
}

// Calibrated global mean of every scene draw. The whole population then
// shares one canonical averaging limit, and the negative level parks that
// limit in the squash's saturated shoulder where it is insensitive to the
// recovered-mean noise of inversion.
constexpr double kSceneMeanLevel = -0.13;

LatentCode sample_scene_latent(SeededRng& rng, int blobs) {
    const double lo = std::log(0.15);
    const double hi = std::log(0.5);
    LatentCode w(blobs, kLatentCols);
    for (int i = 0; i < blobs; ++i) {
        w.at(i, kCenterX) = rng.uniform(0.1, 0.9);
        w.at(i, kCenterY) = rng.uniform(0.1, 0.9);
        w.at(i, kColorR) = 0.6 * rng.normal();
        w.at(i, kColorG) = 0.6 * rng.normal();
        w.at(i, kColorB) = 0.6 * rng.normal();
        w.at(i, kLogScale) = rng.uniform(lo, hi);
    }
    // shifting the three color columns by delta moves the global mean by
    // delta/2; pin the draw's mean to the canonical level exactly
    double mean = 0.0;
    for (double x : w.v) mean += x;
    mean /= static_cast<double>(w.v.size());
    const double delta = 2.0 * (kSceneMeanLevel - mean);
    for (int i = 0; i < blobs; ++i) {
        w.at(i, kColorR) += delta;
        w.at(i, kColorG) += delta;
        w.at(i, kColorB) += delta;
    }
    return w;
}

LatentCode mean_init_latent(int blobs) {
    constexpr std::uint64_t kInitSeed = 9001;
    constexpr int kInitSamples = 256;
    SeededRng rng(kInitSeed);
    std::vector<LatentCode> draws;
    draws.reserve(kInitSamples);
    for (int i = 0; i < kInitSamples; ++i) draws.push_back(sample_scene_latent(rng, blobs));
    return mean_latent(draws);
}

LabeledDataset make_identity_dataset(int n_ids, int n_per_id, double jitter,
                                     std::uint64_t seed, const BlobGeneratorConfig& cfg) {
    cfg.validate();
    if (n_ids < 2) throw std::invalid_argument("make_identity_dataset: n_ids must be >= 2");
    if (n_per_id < 3) throw std::invalid_argument("make_identity_dataset: n_per_id must be >= 3");
    if (!(jitter > 0.0) || !std::isfinite(jitter))
        throw std::invalid_argument("make_identity_dataset: jitter must be positive");

    SeededRng rng(seed);
    LabeledDataset ds;
    ds.n_ids = n_ids;
    ds.n_per_id = n_per_id;
    ds.items.reserve(static_cast<std::size_t>(n_ids) * n_per_id);
    for (int id = 0; id < n_ids; ++id) {
        const LatentCode base = sample_latent(rng, cfg.blobs);
        for (int j = 0; j < n_per_id; ++j) {
            LatentCode w = base;
            for (double& x : w.v) x += jitter * rng.normal();
            LabeledDataset::Item item;
            item.latent = w;
            item.label = id;
            item.image = synth_generate(w, cfg);
            ds.items.push_back(std::move(item));
        }
    }
    return ds;
}

}  // namespace deepblur
