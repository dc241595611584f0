#include "deepblur/threat.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "deepblur/numfmt.hpp"
#include "deepblur/rng.hpp"

namespace deepblur {

std::string threat_name(ThreatModel t) {
    switch (t) {
        case ThreatModel::T1: return "T1";
        case ThreatModel::T2: return "T2";
        case ThreatModel::T3: return "T3";
    }
    return "?";
}

ThreatModel threat_from_name(const std::string& name) {
    if (name == "T1") return ThreatModel::T1;
    if (name == "T2") return ThreatModel::T2;
    if (name == "T3") return ThreatModel::T3;
    throw std::invalid_argument("unknown threat model: " + name);
}

Split split_dataset(const LabeledDataset& ds, const SplitSpec& spec) {
    if (spec.train < 0 || spec.val < 0 || spec.test < 0)
        throw std::invalid_argument("split_dataset: negative split size");
    if (spec.train + spec.val + spec.test != ds.n_per_id)
        throw std::invalid_argument("split_dataset: sizes must sum to n_per_id");

    // item indices grouped per identity, in dataset order
    std::vector<std::vector<int>> per_id(ds.n_ids);
    for (int i = 0; i < static_cast<int>(ds.items.size()); ++i)
        per_id[ds.items[i].label].push_back(i);
    for (const auto& g : per_id)
        if (static_cast<int>(g.size()) != ds.n_per_id)
            throw std::invalid_argument("split_dataset: unbalanced dataset");

    SeededRng rng(spec.seed);
    Split out;
    for (auto& group : per_id) {
        for (int i = static_cast<int>(group.size()) - 1; i > 0; --i)
            std::swap(group[i], group[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);
        int pos = 0;
        auto take = [&](std::vector<LabeledImage>& dst, int count) {
            for (int j = 0; j < count; ++j, ++pos) {
                const auto& item = ds.items[group[pos]];
                dst.push_back({item.image, item.label, group[pos]});
            }
        };
        take(out.train, spec.train);
        take(out.val, spec.val);
        take(out.test, spec.test);
    }
    return out;
}

EvalResult evaluate(const SurrogateClassifier& classifier,
                    const std::vector<LabeledImage>& test) {
    if (!classifier.trained) throw std::invalid_argument("evaluate: classifier not trained");
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");

    EvalResult r;
    r.n_test = static_cast<int>(test.size());
    int hits1 = 0, hits5 = 0;
    for (const auto& item : test) {
        const std::vector<double> p = classifier.predict_proba(item.image);
        std::vector<int> order(p.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return p[a] > p[b]; });  // ties keep lower index
        if (order[0] == item.label) ++hits1;
        const std::size_t k = std::min<std::size_t>(5, order.size());
        for (std::size_t j = 0; j < k; ++j)
            if (order[j] == item.label) {
                ++hits5;
                break;
            }
    }
    r.top1 = static_cast<double>(hits1) / r.n_test;
    r.top5 = static_cast<double>(hits5) / r.n_test;
    return r;
}

std::string threat_csv_header() { return "threat,method,param,top1,top5,n_test,seed"; }

std::string to_csv_row(const ThreatReport& r) {
    return threat_name(r.threat) + "," + r.method + "," + r.param + "," + format_double(r.top1) +
           "," + format_double(r.top5) + "," + std::to_string(r.n_test) + "," +
           std::to_string(r.seed);
}

namespace {

std::vector<LabeledImage> obfuscate_set(const std::vector<LabeledImage>& set,
                                        const ObfuscatorSpec& obf, const HarnessConfig& cfg,
                                        const SurrogateClassifier* defender_surrogate) {
    std::vector<LabeledImage> out;
    out.reserve(set.size());
    const bool is_deepblur = obf.kind == ObfuscatorKind::deepblur ||
                             obf.kind == ObfuscatorKind::deepblur_average;
    for (const auto& item : set) {
        ObfuscationContext ctx;
        ctx.surrogate = defender_surrogate;
        ctx.true_label = item.label;
        LatentCode cached;
        if (is_deepblur && cfg.inversion_cache && item.source_index >= 0) {
            auto it = cfg.inversion_cache->find(item.source_index);
            if (it == cfg.inversion_cache->end()) {
                DeepBlurResult probe = deep_blur(item.image, 0.0, false, obf.inversion);
                it = cfg.inversion_cache->emplace(item.source_index, probe.inversion.latent).first;
            }
            cached = it->second;
            ctx.recovered = &cached;
        }
        out.push_back({apply_obfuscator(item.image, obf, ctx), item.label, item.source_index});
    }
    return out;
}

}  // namespace

ThreatReport run_threat_eval(const LabeledDataset& ds, const ObfuscatorSpec& obf,
                             ThreatModel threat, const HarnessConfig& cfg) {
    obf.validate();
    const Split sp = split_dataset(ds, cfg.split);

    // The adversarial-noise baseline perturbs with a defender-side surrogate
    // trained on the clean training split.
    SurrogateClassifier defender;
    const SurrogateClassifier* defender_ptr = nullptr;
    if (obf.kind == ObfuscatorKind::advnoise) {
        TrainConfig dcfg = cfg.train;
        dcfg.seed = cfg.train.seed + 1000;
        defender = train_classifier(sp.train, sp.val, cfg.attacker_features, dcfg);
        defender_ptr = &defender;
    }

    std::vector<LabeledImage> train_set, val_set, test_set;
    switch (threat) {
        case ThreatModel::T1:
            train_set = sp.train;
            val_set = sp.val;
            test_set = obfuscate_set(sp.test, obf, cfg, defender_ptr);
            break;
        case ThreatModel::T2:
            train_set = obfuscate_set(sp.train, obf, cfg, defender_ptr);
            val_set = obfuscate_set(sp.val, obf, cfg, defender_ptr);
            test_set = sp.test;
            break;
        case ThreatModel::T3:
            train_set = obfuscate_set(sp.train, obf, cfg, defender_ptr);
            val_set = obfuscate_set(sp.val, obf, cfg, defender_ptr);
            test_set = obfuscate_set(sp.test, obf, cfg, defender_ptr);
            break;
    }

    const SurrogateClassifier attacker =
        train_classifier(train_set, val_set, cfg.attacker_features, cfg.train);
    const EvalResult ev = evaluate(attacker, test_set);

    ThreatReport report;
    report.threat = threat;
    report.method = obf.method_name();
    report.param = obf.param_string();
    report.top1 = ev.top1;
    report.top5 = ev.top5;
    report.n_test = ev.n_test;
    report.seed = cfg.split.seed;
    report.classifier_digest = attacker.config_digest();
    return report;
}

}  // namespace deepblur
