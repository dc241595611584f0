#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepblur/generator.hpp"
#include "deepblur/inversion.hpp"
#include "deepblur/obfuscation.hpp"
#include "deepblur/threat.hpp"

namespace deepblur {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value run configuration. Every key has a default; unknown keys are
// rejected naming the key and line.
struct RunConfig {
    BlobGeneratorConfig generator;   // gen.blobs gen.size gen.steepness
    ExtractorSpec features;          // feat.kind feat.seed feat.stages (search loss)
    OptimizerConfig optimizer;       // opt.*
    std::string invert_init = "mean";  // invert.init: mean|random
    std::uint64_t invert_seed = 0;     // invert.seed (random init)

    std::string obf_kind = "deepblur";  // obf.kind
    double obf_sigma = 1.0;             // obf.sigma
    int obf_block = 8;                  // obf.block
    // obf.mask_*; negative means the centered half-frame of gen.size
    int obf_mask_x0 = -1, obf_mask_y0 = -1, obf_mask_x1 = -1, obf_mask_y1 = -1;
    double obf_eps = 0.08;              // obf.eps
    int obf_steps = 10;                 // obf.steps

    int data_n_ids = 10;          // data.n_ids
    int data_n_per_id = 10;       // data.n_per_id
    double data_jitter = 0.05;    // data.jitter
    std::uint64_t data_seed = 7;  // data.seed

    SplitSpec split;  // split.train split.val split.test split.seed

    ExtractorSpec attacker{ExtractorKind::randconv, 0, 3};  // attack.kind attack.seed attack.stages
    TrainConfig train;  // train.epochs train.lr train.momentum train.batch train.seed

    std::vector<double> eval_sigmas = {0.5, 1.0, 2.0};  // eval.sigmas (comma separated)

    std::uint64_t bench_seed = 0;    // bench.seed
    int bench_seeds = 20;            // bench.seeds
    double bench_threshold = 1e-3;   // bench.threshold

    bool wall_clock = false;  // timing: none|wall

    // Derived helpers.
    ObfuscatorSpec obfuscator_spec() const;
    DeepBlurSettings deepblur_settings() const;
    HarnessConfig harness_config() const;
};

// Applies one key=value pair; throws ConfigError on unknown keys/bad values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Lines of key=value; blank lines and #-comments are skipped. Errors name the
// offending key and 1-based line.
RunConfig load_config_file(const std::filesystem::path& path);

}  // namespace deepblur
