#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "deepblur/generator.hpp"
#include "deepblur/metrics.hpp"
#include "deepblur/rng.hpp"

using namespace deepblur;

namespace {

ImageTensor random_image(SeededRng& rng, int h, int w, int c) {
    ImageTensor img(h, w, c);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

}  // namespace

TEST_CASE("psnr formula cases") {
    SeededRng rng(3);
    const ImageTensor a = random_image(rng, 8, 8, 3);

    SUBCASE("identical images give the infinite flag") {
        CHECK(std::isinf(psnr(a, a)));
        CHECK(psnr(a, a) > 0);
    }
    SUBCASE("MSE equal to MAX^2 gives 0 dB") {
        const ImageTensor black(8, 8, 1, 0.0);
        const ImageTensor white(8, 8, 1, 1.0);
        CHECK(psnr(black, white) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("MSE 1e-4 gives 40 dB") {
        ImageTensor base(8, 8, 1, 0.5);
        ImageTensor noisy = base;
        for (double& v : noisy.data) v += 0.01;  // per-element error 0.01 -> MSE 1e-4
        CHECK(psnr(base, noisy) == doctest::Approx(40.0).epsilon(1e-9));
    }
    SUBCASE("shape mismatch rejected") {
        CHECK_THROWS_AS(psnr(a, ImageTensor(8, 9, 3, 0.5)), std::invalid_argument);
    }
}

TEST_CASE("psnr strictly decreases along a noise sweep") {
    SeededRng rng(5);
    const ImageTensor base(16, 16, 3, 0.5);
    std::vector<double> noise(base.data.size());
    for (double& v : noise) v = rng.uniform() - 0.5;

    double prev = std::numeric_limits<double>::infinity();
    for (int level = 1; level <= 10; ++level) {
        ImageTensor noisy = base;
        const double amp = 0.02 * level;
        for (std::size_t i = 0; i < noisy.data.size(); ++i) noisy.data[i] += amp * noise[i];
        const double v = psnr(base, noisy);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("ssim identity, symmetry, and contrast inversion") {
    BlobGeneratorConfig cfg;
    cfg.blobs = 6;
    cfg.size = 32;
    SeededRng rng(7);
    const ImageTensor x = synth_generate(sample_latent(rng, cfg.blobs), cfg);
    const ImageTensor y = synth_generate(sample_latent(rng, cfg.blobs), cfg);

    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));

    ImageTensor inv = x;
    for (double& v : inv.data) v = 1.0 - v;
    CHECK(ssim(x, inv) < 0.5);

    CHECK_THROWS_AS(ssim(ImageTensor(8, 8, 1, 0.5), ImageTensor(8, 8, 1, 0.5)),
                    std::invalid_argument);
}

TEST_CASE("ms_ssim identity, scale count, and bounds") {
    CHECK(ms_ssim_scale_count(64, 64) == 3);   // 64 -> 32 -> 16, 8 is below the window
    CHECK(ms_ssim_scale_count(11, 11) == 1);
    CHECK(ms_ssim_scale_count(176, 176) == 5);
    CHECK(ms_ssim_scale_count(10, 64) == 0);

    BlobGeneratorConfig cfg;
    SeededRng rng(11);
    const ImageTensor x = synth_generate(sample_latent(rng, cfg.blobs), cfg);
    const ImageTensor y = synth_generate(sample_latent(rng, cfg.blobs), cfg);

    CHECK(ms_ssim(x, x) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ms_ssim(x, y) <= 1.0);
    CHECK(ms_ssim(x, y) == doctest::Approx(ms_ssim(y, x)).epsilon(1e-12));
    CHECK_THROWS_AS(ms_ssim(ImageTensor(8, 8, 1, 0.5), ImageTensor(8, 8, 1, 0.5)),
                    std::invalid_argument);
}

TEST_CASE("fid closed forms on injected moments") {
    SUBCASE("worked 1-D value") {
        GaussianMoments r{{0.0}, {1.0}};
        GaussianMoments g{{1.0}, {4.0}};
        // 1 + (1 + 4 - 2*sqrt(4)) = 2
        CHECK(fid_from_moments(r, g) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("diagonal covariances reduce to sum of squared sigma differences") {
        SeededRng rng(13);
        const int dim = 6;
        GaussianMoments r, g;
        r.mean.resize(dim);
        g.mean.resize(dim);
        r.cov.assign(dim * dim, 0.0);
        g.cov.assign(dim * dim, 0.0);
        double expected = 0.0;
        for (int i = 0; i < dim; ++i) {
            r.mean[i] = rng.normal();
            g.mean[i] = rng.normal();
            const double sr = 0.2 + rng.uniform();
            const double sg = 0.2 + rng.uniform();
            r.cov[i * dim + i] = sr * sr;
            g.cov[i * dim + i] = sg * sg;
            expected += (r.mean[i] - g.mean[i]) * (r.mean[i] - g.mean[i]) + (sr - sg) * (sr - sg);
        }
        CHECK(fid_from_moments(r, g) == doctest::Approx(expected).epsilon(1e-6));
    }
    SUBCASE("symmetry of arguments") {
        GaussianMoments r{{0.0, 1.0}, {1.0, 0.2, 0.2, 0.5}};
        GaussianMoments g{{0.5, -0.5}, {0.7, -0.1, -0.1, 1.3}};
        CHECK(std::abs(fid_from_moments(r, g) - fid_from_moments(g, r)) < 1e-8);
    }
    SUBCASE("materially negative eigenvalue is an error") {
        GaussianMoments r{{0.0, 0.0}, {1.0, 0.0, 0.0, -0.5}};
        GaussianMoments g{{0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}};
        CHECK_THROWS_AS(fid_from_moments(r, g), std::domain_error);
    }
    SUBCASE("asymmetric covariance rejected") {
        GaussianMoments r{{0.0, 0.0}, {1.0, 0.3, -0.3, 1.0}};
        GaussianMoments g{{0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}};
        CHECK_THROWS_AS(fid_from_moments(r, g), std::invalid_argument);
    }
}

TEST_CASE("fid over sampled feature sets") {
    SeededRng rng(17);
    auto draw_set = [&](int n, int dim, double shift) {
        std::vector<FeatureVector> set;
        for (int i = 0; i < n; ++i) {
            FeatureVector f(dim);
            for (double& v : f) v = rng.normal() + shift;
            set.push_back(std::move(f));
        }
        return set;
    };

    SUBCASE("identical sets give zero") {
        const auto x = draw_set(24, 8, 0.0);
        CHECK(fid(x, x) <= 1e-8);
    }
    SUBCASE("swapping sets changes nothing") {
        const auto x = draw_set(24, 8, 0.0);
        const auto y = draw_set(24, 8, 1.0);
        CHECK(std::abs(fid(x, y) - fid(y, x)) < 1e-8);
        CHECK(fid(x, y) > 0.0);
    }
    SUBCASE("fewer than two samples rejected") {
        const auto x = draw_set(1, 4, 0.0);
        const auto y = draw_set(5, 4, 0.0);
        CHECK_THROWS_AS(fid(x, y), std::invalid_argument);
    }
    SUBCASE("dimension mismatch rejected") {
        const auto x = draw_set(5, 4, 0.0);
        const auto y = draw_set(5, 6, 0.0);
        CHECK_THROWS_AS(fid(x, y), std::invalid_argument);
    }
}

TEST_CASE("quality report csv") {
    CHECK(quality_csv_header() == "method,psnr_db,ssim,ms_ssim,fid");
    QualityReport q;
    q.method = "pair";
    q.psnr_db = std::numeric_limits<double>::infinity();
    q.ssim = 1.0;
    q.ms_ssim = 1.0;
    q.fid = std::numeric_limits<double>::quiet_NaN();
    CHECK(to_csv_row(q) == "pair,inf,1,1,na");
}
