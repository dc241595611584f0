#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "deepblur/classifier.hpp"
#include "deepblur/generator.hpp"
#include "deepblur/obfuscation.hpp"

namespace deepblur {

// T1: train on clean, test on obfuscated. T2: train on obfuscated with
// labels, test on clean. T3: train on obfuscated, test on an independently
// obfuscated disjoint set.
enum class ThreatModel { T1, T2, T3 };

std::string threat_name(ThreatModel t);
ThreatModel threat_from_name(const std::string& name);

struct SplitSpec {
    int train = 7;
    int val = 1;
    int test = 2;
    std::uint64_t seed = 11;
};

struct Split {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> val;
    std::vector<LabeledImage> test;
};

// Seeded per-identity shuffle, then partition; disjoint and exhaustive.
Split split_dataset(const LabeledDataset& ds, const SplitSpec& spec);

struct EvalResult {
    double top1 = 0.0;
    double top5 = 0.0;
    int n_test = 0;
};

// top-1: argmax match rate; top-5: true label among the 5 highest
// probabilities. Ties rank the lower label index first.
EvalResult evaluate(const SurrogateClassifier& classifier,
                    const std::vector<LabeledImage>& test);

struct ThreatReport {
    ThreatModel threat = ThreatModel::T1;
    std::string method;
    std::string param;
    double top1 = 0.0;
    double top5 = 0.0;
    int n_test = 0;
    std::uint64_t seed = 0;  // split seed of the run
    std::string classifier_digest;
};

std::string threat_csv_header();  // threat,method,param,top1,top5,n_test,seed
std::string to_csv_row(const ThreatReport& r);

// Shared recovered-latent store keyed by dataset item index, so sweeping
// sigma over the same dataset inverts each image once.
using InversionCache = std::map<int, LatentCode>;

struct HarnessConfig {
    ExtractorSpec attacker_features{ExtractorKind::randconv, 0, 3};
    TrainConfig train;
    SplitSpec split;
    std::shared_ptr<InversionCache> inversion_cache;  // optional
};

ThreatReport run_threat_eval(const LabeledDataset& ds, const ObfuscatorSpec& obf,
                             ThreatModel threat, const HarnessConfig& cfg);

}  // namespace deepblur
