#include "deepblur/benchmark.hpp"

namespace deepblur {

BlobGeneratorConfig benchmark_generator() {
    return BlobGeneratorConfig{};  // 16 blobs, 64 px, steepness 4
}

BenchmarkCase make_benchmark_case(std::uint64_t seed, const BlobGeneratorConfig& cfg) {
    BenchmarkCase c;
    SeededRng target_rng(seed);
    c.target_latent = sample_scene_latent(target_rng, cfg.blobs);
    c.target = synth_generate(c.target_latent, cfg);
    c.mean_init = mean_init_latent(cfg.blobs);
    SeededRng init_rng(seed + 1000003);
    c.random_init = sample_latent(init_rng, cfg.blobs);
    return c;
}

OptimizerConfig benchmark_optimizer(OptimizerKind kind) {
    OptimizerConfig opt;
    opt.kind = kind;
    opt.max_steps = 200;
    opt.target_loss = 1e-4;
    // each optimizer's best setting from a learning-rate scan on the
    // standard benchmark (median steps to 1e-3 over seeds 0..19)
    switch (kind) {
        case OptimizerKind::lbfgs:
            opt.learning_rate = 0.05;  // fallback step only
            opt.memory = 10;
            break;
        case OptimizerKind::adam:
            opt.learning_rate = 0.08;
            break;
        case OptimizerKind::adagrad:
            opt.learning_rate = 0.1;
            break;
        case OptimizerKind::sgdm:
            opt.learning_rate = 2.0;
            opt.momentum = 0.9;
            break;
    }
    return opt;
}

int steps_to_threshold(const std::vector<double>& losses, double threshold) {
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] < threshold) return static_cast<int>(i);
    return -1;
}

}  // namespace deepblur
