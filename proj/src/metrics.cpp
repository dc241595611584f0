#include "deepblur/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "deepblur/numfmt.hpp"

namespace deepblur {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr double kC1 = kK1 * kK1;  // dynamic range 1
constexpr double kC2 = kK2 * kK2;

const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        std::vector<double> v(kWindow * kWindow);
        const int r = kWindow / 2;
        double sum = 0.0;
        for (int y = -r; y <= r; ++y)
            for (int x = -r; x <= r; ++x) {
                const double g = std::exp(-(x * x + y * y) / (2.0 * kWindowSigma * kWindowSigma));
                v[static_cast<std::size_t>(y + r) * kWindow + (x + r)] = g;
                sum += g;
            }
        for (double& g : v) g /= sum;
        return v;
    }();
    return w;
}

void check_pair(const ImageTensor& a, const ImageTensor& b) {
    validate_image(a);
    validate_image(b);
    if (!a.same_shape(b)) throw std::invalid_argument("metrics: image shape mismatch");
}

struct SsimSums {
    double luminance = 0.0;  // mean of the luminance term
    double cs = 0.0;         // mean of the contrast-structure term
    double full = 0.0;       // mean of the complete local SSIM
};

SsimSums ssim_terms(const ImageTensor& a, const ImageTensor& b) {
    if (a.height < kWindow || a.width < kWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    const auto& win = ssim_window();
    const int r = kWindow / 2;
    SsimSums sums;
    std::size_t count = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y = r; y < a.height - r; ++y)
            for (int x = r; x < a.width - r; ++x) {
                double mx = 0.0, my = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double w = win[static_cast<std::size_t>(dy + r) * kWindow + (dx + r)];
                        mx += w * a.at(y + dy, x + dx, c);
                        my += w * b.at(y + dy, x + dx, c);
                    }
                double vx = 0.0, vy = 0.0, vxy = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double w = win[static_cast<std::size_t>(dy + r) * kWindow + (dx + r)];
                        const double da = a.at(y + dy, x + dx, c) - mx;
                        const double db = b.at(y + dy, x + dx, c) - my;
                        vx += w * da * da;
                        vy += w * db * db;
                        vxy += w * da * db;
                    }
                const double lum = (2.0 * mx * my + kC1) / (mx * mx + my * my + kC1);
                const double cs = (2.0 * vxy + kC2) / (vx + vy + kC2);
                sums.luminance += lum;
                sums.cs += cs;
                sums.full += lum * cs;
                ++count;
            }
    sums.luminance /= static_cast<double>(count);
    sums.cs /= static_cast<double>(count);
    sums.full /= static_cast<double>(count);
    return sums;
}

ImageTensor half_pool(const ImageTensor& in) {
    ImageTensor out(in.height / 2, in.width / 2, in.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(y, x, c) = 0.25 * (in.at(2 * y, 2 * x, c) + in.at(2 * y, 2 * x + 1, c) +
                                          in.at(2 * y + 1, 2 * x, c) + in.at(2 * y + 1, 2 * x + 1, c));
    return out;
}

constexpr double kMsExponents[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

}  // namespace

double psnr(const ImageTensor& reference, const ImageTensor& test) {
    check_pair(reference, test);
    double mse = 0.0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double d = reference.data[i] - test.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(reference.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& reference, const ImageTensor& test) {
    check_pair(reference, test);
    return ssim_terms(reference, test).full;
}

int ms_ssim_scale_count(int height, int width) {
    int n = 0;
    int h = height, w = width;
    while (n < 5 && h >= kWindow && w >= kWindow) {
        ++n;
        h /= 2;
        w /= 2;
    }
    return n;
}

double ms_ssim(const ImageTensor& reference, const ImageTensor& test) {
    check_pair(reference, test);
    const int scales = ms_ssim_scale_count(reference.height, reference.width);
    if (scales == 0)
        throw std::invalid_argument("ms_ssim: image smaller than the 11x11 window");

    double expo_sum = 0.0;
    for (int j = 0; j < scales; ++j) expo_sum += kMsExponents[j];

    ImageTensor a = reference, b = test;
    double result = 1.0;
    for (int j = 0; j < scales; ++j) {
        const SsimSums terms = ssim_terms(a, b);
        const double e = kMsExponents[j] / expo_sum;
        if (j == scales - 1) {
            result *= std::pow(std::max(terms.luminance, 0.0), e) *
                      std::pow(std::max(terms.cs, 0.0), e);
        } else {
            result *= std::pow(std::max(terms.cs, 0.0), e);
            a = half_pool(a);
            b = half_pool(b);
        }
    }
    return result;
}

GaussianMoments feature_moments(const std::vector<FeatureVector>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("feature_moments: need >= 2 samples");
    const int dim = static_cast<int>(samples[0].size());
    for (const auto& s : samples)
        if (static_cast<int>(s.size()) != dim)
            throw std::invalid_argument("feature_moments: dimensionality mismatch");

    GaussianMoments m;
    m.mean.assign(dim, 0.0);
    for (const auto& s : samples)
        for (int i = 0; i < dim; ++i) m.mean[i] += s[i];
    for (double& v : m.mean) v /= static_cast<double>(samples.size());

    m.cov.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (const auto& s : samples)
        for (int i = 0; i < dim; ++i) {
            const double di = s[i] - m.mean[i];
            for (int j = i; j < dim; ++j)
                m.cov[static_cast<std::size_t>(i) * dim + j] += di * (s[j] - m.mean[j]);
        }
    const double denom = static_cast<double>(samples.size()) - 1.0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double v = m.cov[static_cast<std::size_t>(i) * dim + j] / denom;
            m.cov[static_cast<std::size_t>(i) * dim + j] = v;
            m.cov[static_cast<std::size_t>(j) * dim + i] = v;
        }
    return m;
}

namespace {

// Symmetric PSD square root; eigenvalues below -1e-8 are rejected.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success) throw std::runtime_error("fid: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-8)
            throw std::domain_error(std::string("fid: materially negative eigenvalue in ") + what);
        if (ev[i] < 0.0) ev[i] = 0.0;
        ev[i] = std::sqrt(ev[i]);
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid_from_moments(const GaussianMoments& real, const GaussianMoments& gen) {
    const int dim = real.dim();
    if (gen.dim() != dim || dim < 1)
        throw std::invalid_argument("fid: moment dimensionality mismatch");

    auto to_eigen = [dim](const GaussianMoments& m) {
        Eigen::MatrixXd c(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) c(i, j) = m.cov[static_cast<std::size_t>(i) * dim + j];
        return c;
    };
    const Eigen::MatrixXd cr = to_eigen(real);
    const Eigen::MatrixXd cg = to_eigen(gen);
    if ((cr - cr.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
        (cg - cg.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("fid: covariance not symmetric");

    double mean_term = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = real.mean[i] - gen.mean[i];
        mean_term += d * d;
    }

    const Eigen::MatrixXd sr_half = psd_sqrt(cr, "real covariance");
    const Eigen::MatrixXd inner = sr_half * cg * sr_half;
    const Eigen::MatrixXd cross = psd_sqrt(inner, "cross product");

    const double value = mean_term + cr.trace() + cg.trace() - 2.0 * cross.trace();
    return std::max(value, 0.0);
}

double fid(const std::vector<FeatureVector>& real_features,
           const std::vector<FeatureVector>& gen_features) {
    return fid_from_moments(feature_moments(real_features), feature_moments(gen_features));
}

std::string quality_csv_header() { return "method,psnr_db,ssim,ms_ssim,fid"; }

std::string to_csv_row(const QualityReport& q) {
    std::string row = q.method;
    row += ',';
    row += format_double(q.psnr_db);
    row += ',';
    row += format_double(q.ssim);
    row += ',';
    row += format_double(q.ms_ssim);
    row += ',';
    row += std::isnan(q.fid) ? std::string("na") : format_double(q.fid);
    return row;
}

}  // namespace deepblur
