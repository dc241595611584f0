#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "deepblur/benchmark.hpp"
#include "deepblur/config.hpp"
#include "deepblur/generator.hpp"
#include "deepblur/image.hpp"
#include "deepblur/inversion.hpp"
#include "deepblur/latent_io.hpp"
#include "deepblur/metrics.hpp"
#include "deepblur/numfmt.hpp"
#include "deepblur/obfuscation.hpp"
#include "deepblur/remote.hpp"
#include "deepblur/threat.hpp"

namespace fs = std::filesystem;
using namespace deepblur;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--set", opts.overrides, "inline config override key=value (repeatable)");
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path);
    for (const std::string& kv : opts.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("short write: " + path.string());
}

LatentCode initial_latent(const RunConfig& cfg) {
    if (cfg.invert_init == "random") {
        SeededRng rng(cfg.invert_seed);
        return sample_latent(rng, cfg.generator.blobs);
    }
    return mean_init_latent(cfg.generator.blobs);
}

InversionResult run_inversion(const RunConfig& cfg, const ImageTensor& target) {
    const InversionResult res =
        invert(target, cfg.generator, cfg.features, cfg.optimizer, initial_latent(cfg));
    if (res.status != InvertStatus::ok)
        throw std::runtime_error("inversion aborted: non-finite loss or gradient");
    return res;
}

std::string two_digit(int v) {
    return (v < 10 ? "0" : "") + std::to_string(v);
}

std::string three_digit(int v) {
    std::string s = std::to_string(v);
    while (s.size() < 3) s.insert(s.begin(), '0');
    return s;
}

// ---------------------------------------------------------------- make-dataset

int cmd_make_dataset(const CommonOpts& common, const std::string& out_dir) {
    const RunConfig cfg = resolve_config(common);
    const LabeledDataset ds = make_identity_dataset(cfg.data_n_ids, cfg.data_n_per_id,
                                                    cfg.data_jitter, cfg.data_seed, cfg.generator);
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "latents");

    std::string index = "path,label,latent_path\n";
    int counter = 0;
    for (const auto& item : ds.items) {
        const std::string stem =
            "id" + three_digit(item.label) + "_im" + two_digit(counter % ds.n_per_id);
        const std::string img_rel = "images/" + stem + ".png";
        const std::string lat_rel = "latents/" + stem + ".dblt";
        save_image(item.image, fs::path(out_dir) / img_rel);
        write_latent_file(item.latent, fs::path(out_dir) / lat_rel);
        index += img_rel + "," + std::to_string(item.label) + "," + lat_rel + "\n";
        ++counter;
    }
    write_text_file(fs::path(out_dir) / "index.csv", index);
    std::cout << "wrote " << ds.items.size() << " images to " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------- invert

int cmd_invert(const CommonOpts& common, const std::string& in_png, const std::string& out_dblt,
               const std::string& trajectory) {
    const RunConfig cfg = resolve_config(common);
    const ImageTensor target = load_image(in_png);
    const InversionResult res = run_inversion(cfg, target);
    write_latent_file(res.latent, out_dblt);
    if (!trajectory.empty()) write_text_file(trajectory, trajectory_csv(res, cfg.wall_clock));
    std::cout << "best_loss=" << format_double(res.best_loss) << " steps=" << res.steps_taken
              << " converged=" << (res.converged ? "true" : "false") << "\n";
    return 0;
}

// ------------------------------------------------------------------------ blur

int cmd_blur(const CommonOpts&, const std::string& in_dblt, const std::string& out_dblt,
             double sigma, bool average) {
    const LatentCode w = read_latent_file(in_dblt);
    const LatentCode out = average ? average_latent_mode(w) : blur_latent(w, sigma);
    write_latent_file(out, out_dblt);
    return 0;
}

// -------------------------------------------------------------------- generate

int cmd_generate(const CommonOpts& common, const std::string& in_dblt,
                 const std::string& out_png) {
    const RunConfig cfg = resolve_config(common);
    const LatentCode w = read_latent_file(in_dblt);
    save_image(synth_generate(w, cfg.generator), out_png);
    return 0;
}

// ------------------------------------------------------------------- obfuscate

int cmd_obfuscate(const CommonOpts& common, const std::string& in_png, const std::string& out_png,
                  double sigma, bool average, const std::string& latent_out,
                  const std::string& latent_blurred_out, const std::string& trajectory) {
    RunConfig cfg = resolve_config(common);
    const ImageTensor img = load_image(in_png);
    const DeepBlurResult r = deep_blur(img, sigma, average, cfg.deepblur_settings());
    save_image(r.image, out_png);
    if (!latent_out.empty()) write_latent_file(r.latent_before, latent_out);
    if (!latent_blurred_out.empty()) write_latent_file(r.latent_after, latent_blurred_out);
    if (!trajectory.empty())
        write_text_file(trajectory, trajectory_csv(r.inversion, cfg.wall_clock));
    return 0;
}

// -------------------------------------------------------------------- baseline

int cmd_baseline(const CommonOpts& common, const std::string& method, const std::string& in_png,
                 const std::string& out_png, int label) {
    RunConfig cfg = resolve_config(common);
    cfg.obf_kind = method;
    const ObfuscatorSpec spec = cfg.obfuscator_spec();
    if (spec.kind == ObfuscatorKind::deepblur || spec.kind == ObfuscatorKind::deepblur_average)
        throw std::invalid_argument("baseline: use the obfuscate command for deepblur kinds");

    const ImageTensor img = load_image(in_png);
    ObfuscationContext ctx;
    SurrogateClassifier defender;
    if (spec.kind == ObfuscatorKind::advnoise) {
        const LabeledDataset ds = make_identity_dataset(
            cfg.data_n_ids, cfg.data_n_per_id, cfg.data_jitter, cfg.data_seed, cfg.generator);
        const Split sp = split_dataset(ds, cfg.split);
        TrainConfig dcfg = cfg.train;
        dcfg.seed = cfg.train.seed + 1000;
        defender = train_classifier(sp.train, sp.val, cfg.attacker, dcfg);
        ctx.surrogate = &defender;
        ctx.true_label = label;
    }
    save_image(apply_obfuscator(img, spec, ctx), out_png);
    return 0;
}

// --------------------------------------------------------------------- metrics

std::vector<fs::path> list_pngs(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_metrics(const CommonOpts& common, const std::string& ref_path,
                const std::string& test_path, const std::string& out_csv,
                const std::string& method) {
    const RunConfig cfg = resolve_config(common);
    QualityReport q;
    q.method = method;

    ExtractorSpec fid_features = cfg.attacker;
    fid_features.kind = ExtractorKind::randconv;  // FID is pinned to randconv features

    if (fs::is_directory(ref_path) != fs::is_directory(test_path))
        throw std::invalid_argument("metrics: ref and test must both be files or directories");

    if (fs::is_directory(ref_path)) {
        const auto refs = list_pngs(ref_path);
        const auto tests = list_pngs(test_path);
        if (refs.size() != tests.size() || refs.empty())
            throw std::invalid_argument("metrics: directories must hold equal nonzero PNG counts");
        double psnr_sum = 0.0, ssim_sum = 0.0, ms_sum = 0.0;
        std::vector<FeatureVector> ref_feats, test_feats;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            const ImageTensor a = load_image(refs[i]);
            const ImageTensor b = load_image(tests[i]);
            psnr_sum += psnr(a, b);
            ssim_sum += ssim(a, b);
            ms_sum += ms_ssim(a, b);
            ref_feats.push_back(extract(a, fid_features));
            test_feats.push_back(extract(b, fid_features));
        }
        const double n = static_cast<double>(refs.size());
        q.psnr_db = psnr_sum / n;
        q.ssim = ssim_sum / n;
        q.ms_ssim = ms_sum / n;
        q.fid = refs.size() >= 2 ? fid(ref_feats, test_feats)
                                 : std::numeric_limits<double>::quiet_NaN();
    } else {
        const ImageTensor a = load_image(ref_path);
        const ImageTensor b = load_image(test_path);
        q.psnr_db = psnr(a, b);
        q.ssim = ssim(a, b);
        q.ms_ssim = ms_ssim(a, b);
        q.fid = std::numeric_limits<double>::quiet_NaN();  // needs >= 2 samples per side
    }

    const std::string csv = quality_csv_header() + "\n" + to_csv_row(q) + "\n";
    if (out_csv.empty())
        std::cout << csv;
    else
        write_text_file(out_csv, csv);
    return 0;
}

// ------------------------------------------------------------------------ eval

int cmd_eval(const CommonOpts& common, const std::string& out_csv, double pixel_sigma) {
    const RunConfig cfg = resolve_config(common);
    const LabeledDataset ds = make_identity_dataset(cfg.data_n_ids, cfg.data_n_per_id,
                                                    cfg.data_jitter, cfg.data_seed, cfg.generator);
    HarnessConfig harness = cfg.harness_config();
    harness.inversion_cache = std::make_shared<InversionCache>();

    std::vector<ObfuscatorSpec> methods;
    {
        ObfuscatorSpec none;
        none.kind = ObfuscatorKind::none;
        methods.push_back(none);

        ObfuscatorSpec blur;
        blur.kind = ObfuscatorKind::pixel_blur;
        blur.sigma = pixel_sigma;
        methods.push_back(blur);

        ObfuscatorSpec pix;
        pix.kind = ObfuscatorKind::pixelate;
        pix.block = cfg.obf_block;
        methods.push_back(pix);

        RunConfig mask_cfg = cfg;
        mask_cfg.obf_kind = "mask";
        methods.push_back(mask_cfg.obfuscator_spec());

        ObfuscatorSpec adv;
        adv.kind = ObfuscatorKind::advnoise;
        adv.eps = cfg.obf_eps;
        adv.steps = cfg.obf_steps;
        methods.push_back(adv);

        for (double s : cfg.eval_sigmas) {
            ObfuscatorSpec db;
            db.kind = ObfuscatorKind::deepblur;
            db.sigma = s;
            db.inversion = cfg.deepblur_settings();
            methods.push_back(db);
        }
        ObfuscatorSpec avg;
        avg.kind = ObfuscatorKind::deepblur_average;
        avg.inversion = cfg.deepblur_settings();
        methods.push_back(avg);
    }

    std::string csv = threat_csv_header() + "\n";
    for (const ThreatModel t : {ThreatModel::T1, ThreatModel::T2, ThreatModel::T3})
        for (const ObfuscatorSpec& m : methods) {
            const ThreatReport r = run_threat_eval(ds, m, t, harness);
            csv += to_csv_row(r) + "\n";
            std::cerr << threat_name(t) << " " << r.method << "(" << r.param
                      << "): top1=" << format_double(r.top1) << " top5=" << format_double(r.top5)
                      << "\n";
        }

    if (out_csv.empty())
        std::cout << csv;
    else
        write_text_file(out_csv, csv);
    return 0;
}

// ---------------------------------------------------------- compare-optimizers

int cmd_compare_optimizers(const CommonOpts& common, const std::string& out_csv) {
    const RunConfig cfg = resolve_config(common);
    const BenchmarkCase bench = make_benchmark_case(cfg.bench_seed, cfg.generator);
    ExtractorSpec pixel;
    pixel.kind = ExtractorKind::pixel;

    std::string csv = "optimizer,step,loss,elapsed_ms\n";
    for (const OptimizerKind kind :
         {OptimizerKind::lbfgs, OptimizerKind::adam, OptimizerKind::adagrad, OptimizerKind::sgdm}) {
        OptimizerConfig opt = benchmark_optimizer(kind);
        opt.max_steps = cfg.optimizer.max_steps;
        opt.target_loss = cfg.optimizer.target_loss;
        const InversionResult res = invert(bench.target, cfg.generator, pixel, opt, bench.mean_init);
        for (std::size_t i = 0; i < res.losses.size(); ++i) {
            csv += optimizer_name(kind);
            csv += ',';
            csv += std::to_string(i);
            csv += ',';
            csv += format_double(res.losses[i]);
            csv += ',';
            csv += cfg.wall_clock ? format_double(res.elapsed_ms[i]) : std::string("0");
            csv += '\n';
        }
    }
    if (out_csv.empty())
        std::cout << csv;
    else
        write_text_file(out_csv, csv);
    return 0;
}

// ------------------------------------------------------------------ serve-mock

int cmd_serve_mock(const CommonOpts& common, int port, bool pretrained) {
    const RunConfig cfg = resolve_config(common);
    std::unique_ptr<MockService> service;
    if (pretrained) {
        const LabeledDataset ds = make_identity_dataset(
            cfg.data_n_ids, cfg.data_n_per_id, cfg.data_jitter, cfg.data_seed, cfg.generator);
        const Split sp = split_dataset(ds, cfg.split);
        SurrogateClassifier model = train_classifier(sp.train, sp.val, cfg.attacker, cfg.train);
        service = std::make_unique<MockService>(std::move(model), port);
    } else {
        service = std::make_unique<MockService>(cfg.attacker, cfg.train, port);
    }
    std::cout << "listening on 127.0.0.1:" << service->port() << std::endl;

    // Runs until stdin closes, so parent processes can stop it cleanly.
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line == "quit") break;
    }
    service->shutdown();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-space image obfuscation toolkit"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* mk = app.add_subcommand("make-dataset", "render a synthetic labeled identity dataset");
    std::string mk_out;
    add_common(mk, common);
    mk->add_option("--out", mk_out, "output directory")->required();

    auto* inv = app.add_subcommand("invert", "recover the latent representation of an image");
    std::string inv_in, inv_out, inv_traj;
    add_common(inv, common);
    inv->add_option("--in", inv_in, "input PNG")->required();
    inv->add_option("--out", inv_out, "output latent file")->required();
    inv->add_option("--trajectory", inv_traj, "per-step loss CSV");

    auto* bl = app.add_subcommand("blur", "low-pass-filter a latent file");
    std::string bl_in, bl_out;
    double bl_sigma = 1.0;
    bool bl_avg = false;
    add_common(bl, common);
    bl->add_option("--in", bl_in, "input latent file")->required();
    bl->add_option("--out", bl_out, "output latent file")->required();
    bl->add_option("--sigma", bl_sigma, "Gaussian sigma");
    bl->add_flag("--average", bl_avg, "global-mean mode (sigma -> infinity limit)");

    auto* gen = app.add_subcommand("generate", "render a latent file to PNG");
    std::string gen_in, gen_out;
    add_common(gen, common);
    gen->add_option("--in", gen_in, "input latent file")->required();
    gen->add_option("--out", gen_out, "output PNG")->required();

    auto* obf = app.add_subcommand("obfuscate", "deep-blur an image end to end");
    std::string obf_in, obf_out, obf_lat, obf_lat_blur, obf_traj;
    double obf_sigma = 1.0;
    bool obf_avg = false;
    add_common(obf, common);
    obf->add_option("--in", obf_in, "input PNG")->required();
    obf->add_option("--out", obf_out, "output PNG")->required();
    obf->add_option("--sigma", obf_sigma, "latent-space sigma");
    obf->add_flag("--average", obf_avg, "global-mean mode");
    obf->add_option("--latent-out", obf_lat, "write the recovered latent");
    obf->add_option("--latent-blurred-out", obf_lat_blur, "write the filtered latent");
    obf->add_option("--trajectory", obf_traj, "per-step loss CSV");

    auto* base = app.add_subcommand("baseline", "apply a pixel-space obfuscation baseline");
    std::string base_method, base_in, base_out;
    int base_label = 0;
    add_common(base, common);
    base->add_option("--method", base_method, "pixel_blur|pixelate|mask|advnoise")->required();
    base->add_option("--in", base_in, "input PNG")->required();
    base->add_option("--out", base_out, "output PNG")->required();
    base->add_option("--label", base_label, "true identity label (advnoise)");

    auto* met = app.add_subcommand("metrics", "fidelity metrics between images or directories");
    std::string met_ref, met_test, met_out, met_method = "pair";
    add_common(met, common);
    met->add_option("--ref", met_ref, "reference PNG or directory")->required();
    met->add_option("--test", met_test, "test PNG or directory")->required();
    met->add_option("--out", met_out, "output CSV (stdout when omitted)");
    met->add_option("--method", met_method, "method column value");

    auto* ev = app.add_subcommand("eval", "run the threat-model evaluation matrix");
    std::string ev_out;
    double ev_pixel_sigma = 2.0;
    add_common(ev, common);
    ev->add_option("--out", ev_out, "output CSV (stdout when omitted)");
    ev->add_option("--pixel-sigma", ev_pixel_sigma, "pixel_blur baseline sigma");

    auto* cmp = app.add_subcommand("compare-optimizers", "trajectories of the four optimizers");
    std::string cmp_out;
    add_common(cmp, common);
    cmp->add_option("--out", cmp_out, "output CSV (stdout when omitted)");

    auto* srv = app.add_subcommand("serve-mock", "serve the mock recognition service");
    int srv_port = 0;
    bool srv_pretrained = false;
    add_common(srv, common);
    srv->add_option("--port", srv_port, "port (0 picks a free one)");
    srv->add_flag("--pretrained", srv_pretrained,
                  "train on the configured dataset before serving");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(mk)) return cmd_make_dataset(common, mk_out);
        if (app.got_subcommand(inv)) return cmd_invert(common, inv_in, inv_out, inv_traj);
        if (app.got_subcommand(bl)) return cmd_blur(common, bl_in, bl_out, bl_sigma, bl_avg);
        if (app.got_subcommand(gen)) return cmd_generate(common, gen_in, gen_out);
        if (app.got_subcommand(obf))
            return cmd_obfuscate(common, obf_in, obf_out, obf_sigma, obf_avg, obf_lat,
                                 obf_lat_blur, obf_traj);
        if (app.got_subcommand(base))
            return cmd_baseline(common, base_method, base_in, base_out, base_label);
        if (app.got_subcommand(met))
            return cmd_metrics(common, met_ref, met_test, met_out, met_method);
        if (app.got_subcommand(ev)) return cmd_eval(common, ev_out, ev_pixel_sigma);
        if (app.got_subcommand(cmp)) return cmd_compare_optimizers(common, cmp_out);
        if (app.got_subcommand(srv)) return cmd_serve_mock(common, srv_port, srv_pretrained);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
