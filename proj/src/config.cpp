#include "deepblur/config.hpp"

#include <charconv>
#include <fstream>

namespace deepblur {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("invalid numeric value for '" + key + "': " + v);
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("invalid integer value for '" + key + "': " + v);
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("invalid unsigned value for '" + key + "': " + v);
    return out;
}

ExtractorKind parse_extractor_kind(const std::string& key, const std::string& v) {
    if (v == "pixel") return ExtractorKind::pixel;
    if (v == "randconv") return ExtractorKind::randconv;
    throw ConfigError("invalid extractor kind for '" + key + "': " + v);
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        const std::string item =
            trim(v.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (!item.empty()) out.push_back(parse_double(key, item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("empty list for '" + key + "'");
    return out;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "gen.blobs") cfg.generator.blobs = static_cast<int>(parse_int(key, value));
    else if (key == "gen.size") cfg.generator.size = static_cast<int>(parse_int(key, value));
    else if (key == "gen.steepness") cfg.generator.steepness = parse_double(key, value);
    else if (key == "feat.kind") cfg.features.kind = parse_extractor_kind(key, value);
    else if (key == "feat.seed") cfg.features.seed = parse_u64(key, value);
    else if (key == "feat.stages") cfg.features.stages = static_cast<int>(parse_int(key, value));
    else if (key == "opt.kind") cfg.optimizer.kind = optimizer_kind_from_name(value);
    else if (key == "opt.lr") cfg.optimizer.learning_rate = parse_double(key, value);
    else if (key == "opt.momentum") cfg.optimizer.momentum = parse_double(key, value);
    else if (key == "opt.beta1") cfg.optimizer.beta1 = parse_double(key, value);
    else if (key == "opt.beta2") cfg.optimizer.beta2 = parse_double(key, value);
    else if (key == "opt.epsilon") cfg.optimizer.epsilon = parse_double(key, value);
    else if (key == "opt.memory") cfg.optimizer.memory = static_cast<int>(parse_int(key, value));
    else if (key == "opt.max_steps") cfg.optimizer.max_steps = static_cast<int>(parse_int(key, value));
    else if (key == "opt.target_loss") cfg.optimizer.target_loss = parse_double(key, value);
    else if (key == "opt.armijo_c") cfg.optimizer.armijo_c = parse_double(key, value);
    else if (key == "opt.backtrack") cfg.optimizer.backtrack = parse_double(key, value);
    else if (key == "invert.init") {
        if (value != "mean" && value != "random")
            throw ConfigError("invalid value for 'invert.init': " + value);
        cfg.invert_init = value;
    } else if (key == "invert.seed") cfg.invert_seed = parse_u64(key, value);
    else if (key == "obf.kind") {
        obfuscator_kind_from_name(value);  // validates
        cfg.obf_kind = value;
    } else if (key == "obf.sigma") cfg.obf_sigma = parse_double(key, value);
    else if (key == "obf.block") cfg.obf_block = static_cast<int>(parse_int(key, value));
    else if (key == "obf.mask_x0") cfg.obf_mask_x0 = static_cast<int>(parse_int(key, value));
    else if (key == "obf.mask_y0") cfg.obf_mask_y0 = static_cast<int>(parse_int(key, value));
    else if (key == "obf.mask_x1") cfg.obf_mask_x1 = static_cast<int>(parse_int(key, value));
    else if (key == "obf.mask_y1") cfg.obf_mask_y1 = static_cast<int>(parse_int(key, value));
    else if (key == "obf.eps") cfg.obf_eps = parse_double(key, value);
    else if (key == "obf.steps") cfg.obf_steps = static_cast<int>(parse_int(key, value));
    else if (key == "data.n_ids") cfg.data_n_ids = static_cast<int>(parse_int(key, value));
    else if (key == "data.n_per_id") cfg.data_n_per_id = static_cast<int>(parse_int(key, value));
    else if (key == "data.jitter") cfg.data_jitter = parse_double(key, value);
    else if (key == "data.seed") cfg.data_seed = parse_u64(key, value);
    else if (key == "split.train") cfg.split.train = static_cast<int>(parse_int(key, value));
    else if (key == "split.val") cfg.split.val = static_cast<int>(parse_int(key, value));
    else if (key == "split.test") cfg.split.test = static_cast<int>(parse_int(key, value));
    else if (key == "split.seed") cfg.split.seed = parse_u64(key, value);
    else if (key == "attack.kind") cfg.attacker.kind = parse_extractor_kind(key, value);
    else if (key == "attack.seed") cfg.attacker.seed = parse_u64(key, value);
    else if (key == "attack.stages") cfg.attacker.stages = static_cast<int>(parse_int(key, value));
    else if (key == "train.epochs") cfg.train.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "train.lr") cfg.train.lr = parse_double(key, value);
    else if (key == "train.momentum") cfg.train.momentum = parse_double(key, value);
    else if (key == "train.batch") cfg.train.batch = static_cast<int>(parse_int(key, value));
    else if (key == "train.seed") cfg.train.seed = parse_u64(key, value);
    else if (key == "eval.sigmas") cfg.eval_sigmas = parse_double_list(key, value);
    else if (key == "bench.seed") cfg.bench_seed = parse_u64(key, value);
    else if (key == "bench.seeds") cfg.bench_seeds = static_cast<int>(parse_int(key, value));
    else if (key == "bench.threshold") cfg.bench_threshold = parse_double(key, value);
    else if (key == "timing") {
        if (value == "none") cfg.wall_clock = false;
        else if (value == "wall") cfg.wall_clock = true;
        else throw ConfigError("invalid value for 'timing': " + value + " (use none|wall)");
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key=value, got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            apply_config_entry(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ObfuscatorSpec RunConfig::obfuscator_spec() const {
    ObfuscatorSpec spec;
    spec.kind = obfuscator_kind_from_name(obf_kind);
    spec.sigma = obf_sigma;
    spec.block = obf_block;
    const int s = generator.size;
    spec.mask_x0 = obf_mask_x0 >= 0 ? obf_mask_x0 : s / 4;
    spec.mask_y0 = obf_mask_y0 >= 0 ? obf_mask_y0 : s / 4;
    spec.mask_x1 = obf_mask_x1 >= 0 ? obf_mask_x1 : 3 * s / 4;
    spec.mask_y1 = obf_mask_y1 >= 0 ? obf_mask_y1 : 3 * s / 4;
    spec.eps = obf_eps;
    spec.steps = obf_steps;
    spec.inversion = deepblur_settings();
    spec.validate();
    return spec;
}

DeepBlurSettings RunConfig::deepblur_settings() const {
    DeepBlurSettings s;
    s.generator = generator;
    s.features = features;
    s.optimizer = optimizer;
    s.random_init = invert_init == "random";
    s.init_seed = invert_seed;
    return s;
}

HarnessConfig RunConfig::harness_config() const {
    HarnessConfig h;
    h.attacker_features = attacker;
    h.train = train;
    h.split = split;
    return h;
}

}  // namespace deepblur
