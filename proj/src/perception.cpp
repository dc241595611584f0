#include "deepblur/perception.hpp"

#include <cmath>
#include <stdexcept>

#include "deepblur/rng.hpp"

namespace deepblur {

namespace {

constexpr int kFilters = 8;
constexpr int kKernel = 3;

inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One stage's filter bank: weights[f][cin][ky][kx], flattened.
struct FilterBank {
    int in_channels;
    std::vector<double> w;
    double at(int f, int cin, int ky, int kx) const {
        return w[((static_cast<std::size_t>(f) * in_channels + cin) * kKernel + ky) * kKernel + kx];
    }
};

std::vector<FilterBank> make_banks(std::uint64_t seed, int stages, int image_channels) {
    SeededRng rng(seed);
    std::vector<FilterBank> banks;
    banks.reserve(stages);
    int cin = image_channels;
    for (int s = 0; s < stages; ++s) {
        FilterBank b;
        b.in_channels = cin;
        b.w.resize(static_cast<std::size_t>(kFilters) * cin * kKernel * kKernel);
        const double scale = 1.0 / std::sqrt(9.0 * cin);
        for (double& x : b.w) x = scale * rng.normal();
        banks.push_back(std::move(b));
        cin = kFilters;
    }
    return banks;
}

// Plain HWC buffer; values are unconstrained between stages.
using Plane = ImageTensor;

Plane conv_forward(const Plane& in, const FilterBank& bank) {
    Plane out(in.height, in.width, kFilters);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int f = 0; f < kFilters; ++f) {
                double acc = 0.0;
                for (int ky = 0; ky < kKernel; ++ky) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= in.height) continue;
                    for (int kx = 0; kx < kKernel; ++kx) {
                        const int sx = x + kx - 1;
                        if (sx < 0 || sx >= in.width) continue;
                        for (int c = 0; c < in.channels; ++c)
                            acc += bank.at(f, c, ky, kx) * in.at(sy, sx, c);
                    }
                }
                out.at(y, x, f) = acc;
            }
    return out;
}

Plane conv_backward(const Plane& g_out, const FilterBank& bank, int in_h, int in_w) {
    Plane g_in(in_h, in_w, bank.in_channels, 0.0);
    for (int y = 0; y < in_h; ++y)
        for (int x = 0; x < in_w; ++x)
            for (int f = 0; f < kFilters; ++f) {
                const double g = g_out.at(y, x, f);
                if (g == 0.0) continue;
                for (int ky = 0; ky < kKernel; ++ky) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= in_h) continue;
                    for (int kx = 0; kx < kKernel; ++kx) {
                        const int sx = x + kx - 1;
                        if (sx < 0 || sx >= in_w) continue;
                        for (int c = 0; c < bank.in_channels; ++c)
                            g_in.at(sy, sx, c) += g * bank.at(f, c, ky, kx);
                    }
                }
            }
    return g_in;
}

Plane pool_forward(const Plane& in) {
    Plane out(in.height / 2, in.width / 2, in.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(y, x, c) = 0.25 * (in.at(2 * y, 2 * x, c) + in.at(2 * y, 2 * x + 1, c) +
                                          in.at(2 * y + 1, 2 * x, c) + in.at(2 * y + 1, 2 * x + 1, c));
    return out;
}

Plane pool_backward(const Plane& g_out, int in_h, int in_w) {
    Plane g_in(in_h, in_w, g_out.channels, 0.0);
    for (int y = 0; y < g_out.height; ++y)
        for (int x = 0; x < g_out.width; ++x)
            for (int c = 0; c < g_out.channels; ++c) {
                const double g = 0.25 * g_out.at(y, x, c);
                g_in.at(2 * y, 2 * x, c) = g;
                g_in.at(2 * y, 2 * x + 1, c) = g;
                g_in.at(2 * y + 1, 2 * x, c) = g;
                g_in.at(2 * y + 1, 2 * x + 1, c) = g;
            }
    return g_in;
}

void check_randconv_feasible(const ImageTensor& img, const ExtractorSpec& spec) {
    if (spec.stages < 1) throw std::invalid_argument("extract: stages must be >= 1");
    const int need = 1 << spec.stages;
    if (img.height < need || img.width < need)
        throw std::invalid_argument("extract: image smaller than 2^stages in a dimension");
}

// Runs the stack, keeping per-stage intermediates when trace is non-null.
struct StageTrace {
    std::vector<Plane> pre;     // conv output before softplus
    std::vector<Plane> pooled;  // stage output (input of the next stage)
};

Plane run_randconv(const ImageTensor& img, const ExtractorSpec& spec, StageTrace* trace) {
    const auto banks = make_banks(spec.seed, spec.stages, img.channels);
    Plane cur = img;
    for (int s = 0; s < spec.stages; ++s) {
        Plane pre = conv_forward(cur, banks[s]);
        Plane act(pre.height, pre.width, pre.channels);
        for (std::size_t i = 0; i < pre.data.size(); ++i) act.data[i] = softplus(pre.data[i]);
        Plane pooled = pool_forward(act);
        if (trace) {
            trace->pre.push_back(std::move(pre));
            trace->pooled.push_back(pooled);
        }
        cur = std::move(pooled);
    }
    return cur;
}

}  // namespace

std::string ExtractorSpec::describe() const {
    if (kind == ExtractorKind::pixel) return "pixel";
    return "randconv(seed=" + std::to_string(seed) + ",stages=" + std::to_string(stages) + ")";
}

FeatureVector extract(const ImageTensor& img, const ExtractorSpec& spec) {
    validate_image(img);
    if (spec.kind == ExtractorKind::pixel) return img.data;
    check_randconv_feasible(img, spec);
    return run_randconv(img, spec, nullptr).data;
}

ImageTensor extract_vjp(const ImageTensor& img, const ExtractorSpec& spec,
                        const FeatureVector& upstream) {
    validate_image(img);
    if (spec.kind == ExtractorKind::pixel) {
        if (upstream.size() != img.size())
            throw std::invalid_argument("extract_vjp: upstream size mismatch");
        ImageTensor g = img;
        g.data = upstream;
        return g;
    }

    check_randconv_feasible(img, spec);
    StageTrace trace;
    Plane out = run_randconv(img, spec, &trace);
    if (upstream.size() != out.data.size())
        throw std::invalid_argument("extract_vjp: upstream size mismatch");

    const auto banks = make_banks(spec.seed, spec.stages, img.channels);
    Plane g = out;
    g.data = upstream;
    for (int s = spec.stages - 1; s >= 0; --s) {
        const Plane& pre = trace.pre[s];
        Plane g_act = pool_backward(g, pre.height, pre.width);
        for (std::size_t i = 0; i < g_act.data.size(); ++i)
            g_act.data[i] *= sigmoid(pre.data[i]);
        const int in_h = (s == 0) ? img.height : trace.pooled[s - 1].height;
        const int in_w = (s == 0) ? img.width : trace.pooled[s - 1].width;
        g = conv_backward(g_act, banks[s], in_h, in_w);
    }
    return g;
}

double feature_loss(const FeatureVector& y, const FeatureVector& yhat) {
    if (y.size() != yhat.size() || y.empty())
        throw std::invalid_argument("feature_loss: dimensionality mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(y.size());
}

ImageTensor feature_loss_gradient(const FeatureVector& y, const FeatureVector& yhat,
                                  const ExtractorSpec& spec, const ImageTensor& img) {
    if (y.size() != yhat.size() || y.empty())
        throw std::invalid_argument("feature_loss_gradient: dimensionality mismatch");
    FeatureVector upstream(y.size());
    const double scale = 2.0 / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) upstream[i] = scale * (yhat[i] - y[i]);
    return extract_vjp(img, spec, upstream);
}

}  // namespace deepblur
