#include "deepblur/obfuscation.hpp"

#include <cmath>
#include <stdexcept>

#include "deepblur/numfmt.hpp"
#include "deepblur/rng.hpp"

namespace deepblur {

GaussianKernel gaussian_kernel(double sigma) {
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw std::invalid_argument("gaussian_kernel: sigma must be finite and >= 0");
    GaussianKernel k;
    k.sigma = sigma;
    if (sigma == 0.0) {
        k.radius = 0;
        k.weights = {1.0};
        return k;
    }
    k.radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int side = 2 * k.radius + 1;
    k.weights.resize(static_cast<std::size_t>(side) * side);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0;
    for (int y = -k.radius; y <= k.radius; ++y)
        for (int x = -k.radius; x <= k.radius; ++x) {
            const double w = std::exp(-(x * x + y * y) * inv2s2);
            k.weights[static_cast<std::size_t>(y + k.radius) * side + (x + k.radius)] = w;
            sum += w;
        }
    for (double& w : k.weights) w /= sum;
    return k;
}

namespace {

// Mirror index into [0, n) without repeating the edge element.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return (i < n) ? i : period - i;
}

}  // namespace

LatentCode blur_latent(const LatentCode& w, double sigma) {
    if (w.rows < 2 || w.cols < 2)
        throw std::invalid_argument("blur_latent: latent must be at least 2x2");
    const GaussianKernel k = gaussian_kernel(sigma);
    if (k.radius == 0) return w;
    LatentCode out(w.rows, w.cols);
    for (int r = 0; r < w.rows; ++r)
        for (int c = 0; c < w.cols; ++c) {
            double acc = 0.0;
            for (int dy = -k.radius; dy <= k.radius; ++dy) {
                const int rr = reflect_index(r + dy, w.rows);
                for (int dx = -k.radius; dx <= k.radius; ++dx) {
                    const int cc = reflect_index(c + dx, w.cols);
                    acc += k.at(dy, dx) * w.at(rr, cc);
                }
            }
            out.at(r, c) = acc;
        }
    return out;
}

LatentCode average_latent_mode(const LatentCode& w) {
    if (w.v.empty()) throw std::invalid_argument("average_latent_mode: empty latent");
    // constant matrices are the fixed points; returning them unchanged keeps
    // the operator exactly idempotent under floating-point summation
    bool constant = true;
    for (double x : w.v)
        if (x != w.v[0]) {
            constant = false;
            break;
        }
    if (constant) return w;
    double m = 0.0;
    for (double x : w.v) m += x;
    m /= static_cast<double>(w.v.size());
    return LatentCode(w.rows, w.cols, m);
}

DeepBlurResult deep_blur_from_latent(const LatentCode& recovered, double sigma, bool average,
                                     const BlobGeneratorConfig& cfg) {
    DeepBlurResult r;
    r.latent_before = recovered;
    r.latent_after = average ? average_latent_mode(recovered) : blur_latent(recovered, sigma);
    r.image = synth_generate(r.latent_after, cfg);
    return r;
}

DeepBlurResult deep_blur(const ImageTensor& img, double sigma, bool average,
                         const DeepBlurSettings& settings) {
    LatentCode init = settings.random_init
                          ? [&] {
                                SeededRng rng(settings.init_seed);
                                return sample_latent(rng, settings.generator.blobs);
                            }()
                          : mean_init_latent(settings.generator.blobs);
    InversionResult inv =
        invert(img, settings.generator, settings.features, settings.optimizer, init);
    if (inv.status != InvertStatus::ok)
        throw std::runtime_error("deep_blur: inversion aborted on non-finite values");
    DeepBlurResult r = deep_blur_from_latent(inv.latent, sigma, average, settings.generator);
    r.inversion = std::move(inv);
    return r;
}

ImageTensor pixel_blur(const ImageTensor& img, double sigma) {
    validate_image(img);
    const GaussianKernel k = gaussian_kernel(sigma);
    if (k.radius == 0) return img;
    ImageTensor out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int dy = -k.radius; dy <= k.radius; ++dy) {
                    const int yy = reflect_index(y + dy, img.height);
                    for (int dx = -k.radius; dx <= k.radius; ++dx) {
                        const int xx = reflect_index(x + dx, img.width);
                        acc += k.at(dy, dx) * img.at(yy, xx, c);
                    }
                }
                out.at(y, x, c) = acc;
            }
    return out;
}

ImageTensor pixelate(const ImageTensor& img, int block) {
    validate_image(img);
    if (block < 1) throw std::invalid_argument("pixelate: block must be >= 1");
    if (block == 1) return img;
    ImageTensor out = img;
    for (int by = 0; by < img.height; by += block) {
        const int ye = std::min(by + block, img.height);
        for (int bx = 0; bx < img.width; bx += block) {
            const int xe = std::min(bx + block, img.width);
            for (int c = 0; c < img.channels; ++c) {
                double m = 0.0;
                for (int y = by; y < ye; ++y)
                    for (int x = bx; x < xe; ++x) m += img.at(y, x, c);
                m /= static_cast<double>((ye - by) * (xe - bx));
                for (int y = by; y < ye; ++y)
                    for (int x = bx; x < xe; ++x) out.at(y, x, c) = m;
            }
        }
    }
    return out;
}

ImageTensor mask(const ImageTensor& img, int x0, int y0, int x1, int y1) {
    validate_image(img);
    if (x0 < 0 || y0 < 0 || x1 > img.width || y1 > img.height)
        throw std::invalid_argument("mask: rectangle out of bounds");
    if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("mask: empty rectangle");
    ImageTensor out = img;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = 0.0;
    return out;
}

ImageTensor adv_noise(const ImageTensor& img, const SurrogateClassifier& surrogate,
                      int true_label, double eps, int steps) {
    validate_image(img);
    if (!surrogate.trained) throw std::invalid_argument("adv_noise: surrogate is not trained");
    if (!(eps > 0.0) || eps > 0.25)
        throw std::invalid_argument("adv_noise: eps must be in (0, 0.25]");
    if (steps < 1) throw std::invalid_argument("adv_noise: steps must be >= 1");

    const double step = eps / steps;
    ImageTensor x = img;
    for (int t = 0; t < steps; ++t) {
        const ImageTensor g = surrogate.input_gradient(x, true_label);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            double v = x.data[i];
            if (g.data[i] > 0.0)
                v += step;
            else if (g.data[i] < 0.0)
                v -= step;
            v = std::min(std::max(v, img.data[i] - eps), img.data[i] + eps);
            v = std::min(std::max(v, 0.0), 1.0);
            x.data[i] = v;
        }
    }
    return x;
}

std::string obfuscator_kind_name(ObfuscatorKind kind) {
    switch (kind) {
        case ObfuscatorKind::none: return "none";
        case ObfuscatorKind::deepblur: return "deepblur";
        case ObfuscatorKind::deepblur_average: return "deepblur_average";
        case ObfuscatorKind::pixel_blur: return "pixel_blur";
        case ObfuscatorKind::pixelate: return "pixelate";
        case ObfuscatorKind::mask: return "mask";
        case ObfuscatorKind::advnoise: return "advnoise";
    }
    return "?";
}

ObfuscatorKind obfuscator_kind_from_name(const std::string& name) {
    if (name == "none") return ObfuscatorKind::none;
    if (name == "deepblur") return ObfuscatorKind::deepblur;
    if (name == "deepblur_average") return ObfuscatorKind::deepblur_average;
    if (name == "pixel_blur") return ObfuscatorKind::pixel_blur;
    if (name == "pixelate") return ObfuscatorKind::pixelate;
    if (name == "mask") return ObfuscatorKind::mask;
    if (name == "advnoise") return ObfuscatorKind::advnoise;
    throw std::invalid_argument("unknown obfuscator kind: " + name);
}

void ObfuscatorSpec::validate() const {
    switch (kind) {
        case ObfuscatorKind::none:
            break;
        case ObfuscatorKind::deepblur:
        case ObfuscatorKind::pixel_blur:
            if (!std::isfinite(sigma) || sigma < 0.0)
                throw std::invalid_argument("obfuscator: sigma must be finite and >= 0");
            break;
        case ObfuscatorKind::deepblur_average:
            break;
        case ObfuscatorKind::pixelate:
            if (block < 1) throw std::invalid_argument("obfuscator: block must be >= 1");
            break;
        case ObfuscatorKind::mask:
            if (mask_x1 <= mask_x0 || mask_y1 <= mask_y0)
                throw std::invalid_argument("obfuscator: empty mask rectangle");
            break;
        case ObfuscatorKind::advnoise:
            if (!(eps > 0.0) || eps > 0.25)
                throw std::invalid_argument("obfuscator: eps must be in (0, 0.25]");
            if (steps < 1) throw std::invalid_argument("obfuscator: steps must be >= 1");
            break;
    }
}

std::string ObfuscatorSpec::method_name() const { return obfuscator_kind_name(kind); }

std::string ObfuscatorSpec::param_string() const {
    switch (kind) {
        case ObfuscatorKind::none: return "-";
        case ObfuscatorKind::deepblur:
        case ObfuscatorKind::pixel_blur: return format_double(sigma);
        case ObfuscatorKind::deepblur_average: return "avg";
        case ObfuscatorKind::pixelate: return std::to_string(block);
        case ObfuscatorKind::mask:
            return std::to_string(mask_x0) + ":" + std::to_string(mask_y0) + ":" +
                   std::to_string(mask_x1) + ":" + std::to_string(mask_y1);
        case ObfuscatorKind::advnoise:
            return format_double(eps) + ":" + std::to_string(steps);
    }
    return "-";
}

ImageTensor apply_obfuscator(const ImageTensor& img, const ObfuscatorSpec& spec,
                             const ObfuscationContext& ctx) {
    spec.validate();
    switch (spec.kind) {
        case ObfuscatorKind::none:
            return img;
        case ObfuscatorKind::deepblur:
        case ObfuscatorKind::deepblur_average: {
            const bool average = spec.kind == ObfuscatorKind::deepblur_average;
            if (ctx.recovered)
                return deep_blur_from_latent(*ctx.recovered, spec.sigma, average,
                                             spec.inversion.generator)
                    .image;
            return deep_blur(img, spec.sigma, average, spec.inversion).image;
        }
        case ObfuscatorKind::pixel_blur:
            return pixel_blur(img, spec.sigma);
        case ObfuscatorKind::pixelate:
            return pixelate(img, spec.block);
        case ObfuscatorKind::mask:
            return mask(img, spec.mask_x0, spec.mask_y0, spec.mask_x1, spec.mask_y1);
        case ObfuscatorKind::advnoise:
            if (!ctx.surrogate || ctx.true_label < 0)
                throw std::invalid_argument("advnoise: surrogate and true label required");
            return adv_noise(img, *ctx.surrogate, ctx.true_label, spec.eps, spec.steps);
    }
    throw std::logic_error("apply_obfuscator: unreachable");
}

}  // namespace deepblur
