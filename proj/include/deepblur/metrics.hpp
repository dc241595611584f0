#pragma once

#include <string>
#include <vector>

#include "deepblur/image.hpp"
#include "deepblur/perception.hpp"

namespace deepblur {

// 10*log10(1/MSE) on the unit pixel scale; identical inputs yield +infinity
// (a distinguished value, not an error).
double psnr(const ImageTensor& reference, const ImageTensor& test);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
// dynamic range 1; windows fully inside the frame; channels averaged.
double ssim(const ImageTensor& reference, const ImageTensor& test);

// Standard multi-scale product with exponents
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333) and 2x mean-pool between scales.
// When fewer than 5 scales fit, the leading exponents are renormalized.
double ms_ssim(const ImageTensor& reference, const ImageTensor& test);

// Number of scales ms_ssim uses for a given image size (1..5).
int ms_ssim_scale_count(int height, int width);

struct GaussianMoments {
    std::vector<double> mean;
    std::vector<double> cov;  // dim x dim, row-major, symmetric
    int dim() const { return static_cast<int>(mean.size()); }
};

// Sample mean and covariance (n-1 denominator); needs >= 2 samples.
GaussianMoments feature_moments(const std::vector<FeatureVector>& samples);

// |mu_r - mu_g|^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}), the matrix square root
// taken via symmetric eigendecomposition of S_r^{1/2} S_g S_r^{1/2}.
// Eigenvalues below -1e-8 are an error; in [-1e-8, 0) they clamp to 0.
double fid_from_moments(const GaussianMoments& real, const GaussianMoments& gen);
double fid(const std::vector<FeatureVector>& real_features,
           const std::vector<FeatureVector>& gen_features);

struct QualityReport {
    std::string method;
    double psnr_db = 0.0;  // may be +infinity
    double ssim = 0.0;
    double ms_ssim = 0.0;
    double fid = 0.0;  // NaN when not computed (needs >= 2 samples per side)
};

std::string quality_csv_header();  // method,psnr_db,ssim,ms_ssim,fid
std::string to_csv_row(const QualityReport& q);

}  // namespace deepblur
