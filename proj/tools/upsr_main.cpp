// upsr: uncertainty-weighted residual-shifting super-resolution toolkit.
//
// Subcommands: degrade, train, sr, verify, metrics, hist. Every command
// honors --seed; all randomness descends from that root seed via purpose-
// tagged stream splitting, so reruns are byte-identical.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "upsr/analysis.hpp"
#include "upsr/degradation.hpp"
#include "upsr/diffusion.hpp"
#include "upsr/image_io.hpp"
#include "upsr/resample.hpp"
#include "upsr/training.hpp"
#include "upsr/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    uint64_t seed = 0;
    // schedule
    int steps = upsr::ScheduleDefaults::T;
    double kappa = upsr::ScheduleDefaults::kappa;
    double eta1 = upsr::ScheduleDefaults::eta1;
    double etaT = upsr::ScheduleDefaults::etaT;
    double p = upsr::ScheduleDefaults::p;
    // weighting
    double bu = upsr::WeightingDefaults::b_u;
    double psimax = upsr::WeightingDefaults::psi_max;
    int smooth = 0;
    // predictor
    std::string predictor = "smooth";
    int predictor_radius = 2;
    std::string predictor_model;
    // degradation
    int scale = 4;
    double blur_lo = 0.2, blur_hi = 2.0;
    double noise_lo = 0.0, noise_hi = 0.06;
    int quality_lo = 30, quality_hi = 95;
    bool jpeg = true;
    bool second_pass = false;
    // training
    int iters = 5000, batch = 4;
    double lr = 0.15, lambda = 1.0;
    int patch = 32, r = 2, hidden = 16, layers = 4;
};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig load_config_file(const std::string& path) {
    RunConfig c;
    if (path.empty()) return c;
    std::ifstream f(path);
    if (!f) throw upsr::IoError("cannot open config file: " + path);
    json j = json::parse(f);
    maybe(j, "seed", c.seed);
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        maybe(s, "steps", c.steps);
        maybe(s, "kappa", c.kappa);
        maybe(s, "eta1", c.eta1);
        maybe(s, "etaT", c.etaT);
        maybe(s, "p", c.p);
    }
    if (j.contains("weighting")) {
        const json& s = j["weighting"];
        maybe(s, "bu", c.bu);
        maybe(s, "psimax", c.psimax);
        maybe(s, "smooth", c.smooth);
    }
    if (j.contains("predictor")) {
        const json& s = j["predictor"];
        maybe(s, "kind", c.predictor);
        maybe(s, "radius", c.predictor_radius);
        maybe(s, "model", c.predictor_model);
    }
    if (j.contains("degradation")) {
        const json& s = j["degradation"];
        maybe(s, "scale", c.scale);
        maybe(s, "blur_lo", c.blur_lo);
        maybe(s, "blur_hi", c.blur_hi);
        maybe(s, "noise_lo", c.noise_lo);
        maybe(s, "noise_hi", c.noise_hi);
        maybe(s, "quality_lo", c.quality_lo);
        maybe(s, "quality_hi", c.quality_hi);
        maybe(s, "jpeg", c.jpeg);
        maybe(s, "second_pass", c.second_pass);
    }
    if (j.contains("training")) {
        const json& s = j["training"];
        maybe(s, "iterations", c.iters);
        maybe(s, "batch", c.batch);
        maybe(s, "lr", c.lr);
        maybe(s, "lambda", c.lambda);
        maybe(s, "patch", c.patch);
        maybe(s, "r", c.r);
        maybe(s, "hidden", c.hidden);
        maybe(s, "layers", c.layers);
    }
    return c;
}

std::string prescan_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") return argv[i + 1];
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return "";
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw upsr::IoError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

upsr::NoiseSchedule schedule_from(const RunConfig& c) {
    return upsr::NoiseSchedule::build(c.steps, c.kappa, c.eta1, c.etaT, c.p);
}

std::unique_ptr<upsr::SRPredictor> predictor_from(const RunConfig& c) {
    if (c.predictor == "identity") return upsr::make_identity_predictor();
    if (c.predictor == "smooth") return upsr::make_smoothing_predictor(c.predictor_radius);
    if (c.predictor == "learned") {
        if (c.predictor_model.empty())
            throw upsr::ParamError("--predictor learned requires --predictor-model");
        return upsr::make_learned_predictor(c.predictor_model);
    }
    throw upsr::ParamError("unknown predictor kind: " + c.predictor);
}

upsr::DegradationConfig degradation_from(const RunConfig& c) {
    upsr::DegradationConfig d;
    d.scale = c.scale;
    d.blur_lo = c.blur_lo;
    d.blur_hi = c.blur_hi;
    d.noise_lo = c.noise_lo;
    d.noise_hi = c.noise_hi;
    d.quality_lo = c.quality_lo;
    d.quality_hi = c.quality_hi;
    d.jpeg_enabled = c.jpeg;
    d.second_pass = c.second_pass;
    d.seed = c.seed;
    return d;
}

void add_schedule_flags(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--steps", c.steps, "diffusion steps T");
    cmd->add_option("--kappa", c.kappa, "noise magnitude kappa");
    cmd->add_option("--eta1", c.eta1, "first shift fraction eta_1");
    cmd->add_option("--etaT", c.etaT, "final shift fraction eta_T");
    cmd->add_option("--p", c.p, "schedule shape exponent");
}

void add_weighting_flags(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--bu", c.bu, "weight floor b_u");
    cmd->add_option("--psimax", c.psimax, "uncertainty saturation psi_max");
    cmd->add_option("--smooth", c.smooth, "box-blur radius for the uncertainty map");
}

void add_predictor_flags(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--predictor", c.predictor, "SR predictor: identity|smooth|learned");
    cmd->add_option("--predictor-radius", c.predictor_radius, "smoothing predictor radius");
    cmd->add_option("--predictor-model", c.predictor_model, "model file for --predictor learned");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw upsr::IoError("cannot write: " + path);
    f << text;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------

int cmd_degrade(const RunConfig& cfg, const std::string& in_dir, const std::string& out_dir) {
    const std::vector<fs::path> inputs = list_pngs(in_dir);
    if (inputs.empty()) {
        std::cerr << "degrade: no input images in " << in_dir << "\n";
        return 1;
    }
    const upsr::DegradationConfig dcfg = degradation_from(cfg);
    fs::create_directories(fs::path(out_dir) / "lr");
    fs::create_directories(fs::path(out_dir) / "y0");

    upsr::Rng root(cfg.seed);
    std::string manifest = "filename,blur_sigma,noise_sigma,quality,blur_sigma2,noise_sigma2,seed\n";
    for (const fs::path& path : inputs) {
        const std::string name = path.filename().string();
        const upsr::Image hr = upsr::read_png(path.string());
        upsr::Rng rng = root.stream("degrade/" + name);
        const upsr::DegradedPair pair = upsr::degrade_pair(hr, dcfg, rng);
        upsr::write_png(pair.lr, (fs::path(out_dir) / "lr" / name).string());
        upsr::write_png(pair.y0, (fs::path(out_dir) / "y0" / name).string());
        manifest += name + "," + fmt(pair.blur_sigma) + "," + fmt(pair.noise_sigma) + "," +
                    std::to_string(pair.quality) + "," + fmt(pair.blur_sigma2) + "," +
                    fmt(pair.noise_sigma2) + "," + std::to_string(cfg.seed) + "\n";
    }
    write_text_file((fs::path(out_dir) / "manifest.csv").string(), manifest);
    std::cerr << "degrade: wrote " << inputs.size() << " pairs to " << out_dir << "\n";
    return 0;
}

std::vector<upsr::TrainPair> load_pairs(const std::string& hr_dir, const std::string& y0_dir) {
    std::vector<upsr::TrainPair> pairs;
    for (const fs::path& hr_path : list_pngs(hr_dir)) {
        const fs::path y0_path = fs::path(y0_dir) / hr_path.filename();
        if (!fs::exists(y0_path)) continue;
        upsr::TrainPair p;
        p.x0 = upsr::read_png(hr_path.string());
        p.y0 = upsr::read_png(y0_path.string());
        pairs.push_back(std::move(p));
    }
    return pairs;
}

int cmd_train(const RunConfig& cfg, const std::string& hr_dir, const std::string& y0_dir,
              const std::string& out_path, const std::string& role, const std::string& log_path) {
    const std::vector<upsr::TrainPair> pairs = load_pairs(hr_dir, y0_dir);
    if (pairs.empty()) {
        std::cerr << "train: no paired images between " << hr_dir << " and " << y0_dir << "\n";
        return 1;
    }
    upsr::TrainConfig tc;
    tc.iterations = cfg.iters;
    tc.batch_size = cfg.batch;
    tc.lr = cfg.lr;
    tc.lambda = cfg.lambda;
    tc.seed = cfg.seed;
    tc.patch = cfg.patch;
    tc.r = cfg.r;
    tc.hidden = cfg.hidden;
    tc.n_layers = cfg.layers;
    tc.b_u = cfg.bu;
    tc.psi_max = cfg.psimax;
    tc.smooth_radius = cfg.smooth;

    upsr::Rng rng = upsr::Rng(cfg.seed).stream("train");
    std::vector<upsr::TrainLogRow> log;
    upsr::TinyNetModel model = [&] {
        if (role == "predictor") return upsr::train_predictor(pairs, tc, rng, &log);
        if (role == "denoiser") {
            const auto predictor = predictor_from(cfg);
            const upsr::NoiseSchedule s = schedule_from(cfg);
            return upsr::train_denoiser(pairs, *predictor, s, tc, rng, &log);
        }
        throw upsr::ParamError("train: --role must be denoiser or predictor");
    }();
    upsr::save_model(model, out_path);

    std::string csv = "iteration,loss,mse,perceptual\n";
    for (const auto& row : log)
        csv += std::to_string(row.iteration) + "," + fmt(row.loss) + "," + fmt(row.mse) + "," +
               fmt(row.perceptual) + "\n";
    write_text_file(log_path.empty() ? out_path + ".log.csv" : log_path, csv);
    std::cerr << "train: " << pairs.size() << " pairs, " << log.size() << " iterations, final loss "
              << (log.empty() ? 0.0 : log.back().loss) << ", model -> " << out_path << "\n";
    return 0;
}

int cmd_sr(const RunConfig& cfg, const std::string& in_path, const std::string& out_path,
           const std::string& model_path, const std::string& oracle_path, bool no_unw, int up_scale,
           const std::string& dump_steps, const std::string& dump_heatmaps,
           const std::string& dump_schedule) {
    const upsr::NoiseSchedule s = schedule_from(cfg);
    if (!dump_schedule.empty()) {
        std::string csv = "t,eta,alpha\n0," + fmt(s.eta(0)) + ",\n";
        for (int t = 1; t <= s.steps(); ++t)
            csv += std::to_string(t) + "," + fmt(s.eta(t)) + "," + fmt(s.alpha(t)) + "\n";
        write_text_file(dump_schedule, csv);
    }

    upsr::Image y0 = upsr::read_png(in_path);
    if (up_scale > 1)
        y0 = upsr::clamp01(upsr::bicubic_resize(y0, y0.height * up_scale, y0.width * up_scale));

    upsr::Rng root(cfg.seed);
    const auto predictor = predictor_from(cfg);
    std::unique_ptr<upsr::Denoiser> denoiser;
    if (!oracle_path.empty()) {
        upsr::Image gt = upsr::read_png(oracle_path);
        if (!gt.same_shape(y0))
            throw upsr::ShapeError("sr: --oracle image shape " + gt.shape_string() +
                                   " does not match the (upsampled) input " + y0.shape_string());
        denoiser = std::make_unique<upsr::OracleDenoiser>(std::move(gt), 0.0, root.stream("oracle"));
    } else if (!model_path.empty()) {
        denoiser = std::make_unique<upsr::TinyNetDenoiser>(upsr::load_model(model_path));
    } else {
        throw upsr::ParamError("sr: need --model or --oracle");
    }

    upsr::WeightingConfig wc;
    wc.b_u = no_unw ? 1.0 : cfg.bu;
    wc.psi_max = cfg.psimax;
    wc.smooth_radius = cfg.smooth;

    std::string steps_csv = "t,eta,alpha,noise_scale,injected_std_emp,weight_min,weight_max\n";
    upsr::ChainObserver observer;
    const upsr::WeightMap* weights_ptr = nullptr;
    if (!dump_steps.empty()) {
        fs::create_directories(dump_steps);
        observer = [&](const upsr::ChainStep& step) {
            double m2 = 0.0, mean = 0.0;
            long n = 0;
            for (size_t i = 0; i < step.x_next.data.size(); ++i) {
                const double noise = static_cast<double>(step.x_next.data[i]) - step.mean_part.data[i];
                ++n;
                const double d = noise - mean;
                mean += d / static_cast<double>(n);
                m2 += d * (noise - mean);
            }
            const double emp_std = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
            float wmin = 1.0f, wmax = 0.0f;
            if (weights_ptr)
                for (float v : weights_ptr->values) {
                    wmin = std::min(wmin, v);
                    wmax = std::max(wmax, v);
                }
            steps_csv += std::to_string(step.t) + "," + fmt(step.eta_t) + "," + fmt(step.alpha_t) +
                         "," + fmt(step.noise_scale) + "," + fmt(emp_std) + "," + fmt(wmin) + "," +
                         fmt(wmax) + "\n";
            upsr::write_png(upsr::clamp01(step.x_next),
                            (fs::path(dump_steps) / ("x_" + std::to_string(step.t - 1) + ".png")).string());
        };
    }

    upsr::Rng chain_rng = root.stream("sr/chain");
    upsr::ChainResult result;
    {
        // observer needs the weight map the chain computes; run detailed
        upsr::ChainResult* slot = &result;
        auto wrapped = observer ? upsr::ChainObserver([&, slot](const upsr::ChainStep& st) {
            weights_ptr = &slot->weights;
            observer(st);
        })
                                : upsr::ChainObserver(nullptr);
        result = upsr::run_reverse_chain_detailed(y0, *predictor, *denoiser, s, wc, chain_rng, wrapped);
    }
    upsr::write_png(result.output, out_path);
    if (!dump_steps.empty())
        write_text_file((fs::path(dump_steps) / "steps.csv").string(), steps_csv);
    if (!dump_heatmaps.empty()) {
        fs::create_directories(dump_heatmaps);
        upsr::write_png(upsr::uncertainty_heatmap(result.psi),
                        (fs::path(dump_heatmaps) / "uncertainty.png").string());
        upsr::write_png(upsr::weight_heatmap(result.weights),
                        (fs::path(dump_heatmaps) / "weights.png").string());
    }
    std::cerr << "sr: wrote " << out_path << "\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& filter, const std::string& out_path,
               bool skip_training, double bug_scale) {
    upsr::verify::Options opt;
    opt.seed = cfg.seed != 0 ? cfg.seed : 0xC0FFEE;
    opt.include_training = !skip_training;
    opt.variance_bug_scale = bug_scale;

    std::vector<upsr::verify::CheckResult> results;
    for (const auto& check : upsr::verify::all_checks()) {
        if (!filter.empty() && check.name.find(filter) == std::string::npos) continue;
        const auto r = check.fn(opt);
        std::cerr << (r.skipped ? "[skip] " : (r.pass ? "[pass] " : "[FAIL] ")) << r.name << " ("
                  << r.seconds << "s)\n";
        results.push_back(r);
    }
    if (results.empty()) {
        std::cerr << "verify: no checks match filter '" << filter << "'\n";
        return 1;
    }
    const json report = upsr::verify::report_json(results);
    if (out_path.empty())
        std::cout << report.dump(2) << "\n";
    else
        write_text_file(out_path, report.dump(2));
    return upsr::verify::all_passed(results) ? 0 : 1;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path, const std::string& dir_a,
                const std::string& dir_b, const std::string& out_path) {
    std::string csv = "name,psnr,ssim\n";
    if (!a_path.empty() && !b_path.empty()) {
        const upsr::Image a = upsr::read_png(a_path);
        const upsr::Image b = upsr::read_png(b_path);
        csv += fs::path(a_path).filename().string() + "," + fmt(upsr::psnr(a, b)) + "," +
               fmt(upsr::ssim(a, b)) + "\n";
    } else if (!dir_a.empty() && !dir_b.empty()) {
        bool any = false;
        for (const fs::path& pa : list_pngs(dir_a)) {
            const fs::path pb = fs::path(dir_b) / pa.filename();
            if (!fs::exists(pb)) continue;
            const upsr::Image a = upsr::read_png(pa.string());
            const upsr::Image b = upsr::read_png(pb.string());
            csv += pa.filename().string() + "," + fmt(upsr::psnr(a, b)) + "," + fmt(upsr::ssim(a, b)) +
                   "\n";
            any = true;
        }
        if (!any) {
            std::cerr << "metrics: no paired images\n";
            return 1;
        }
    } else {
        std::cerr << "metrics: need --a/--b or --dir-a/--dir-b\n";
        return 1;
    }
    if (out_path.empty())
        std::cout << csv;
    else
        write_text_file(out_path, csv);
    return 0;
}

int cmd_hist(const std::string& y0_dir, const std::string& hr_dir, double bin_width, double cutoff,
             const std::string& out_path) {
    upsr::Histogram h = upsr::make_histogram(bin_width, cutoff);
    bool any = false;
    for (const fs::path& py : list_pngs(y0_dir)) {
        const fs::path px = fs::path(hr_dir) / py.filename();
        if (!fs::exists(px)) continue;
        upsr::accumulate_residuals(h, upsr::read_png(py.string()), upsr::read_png(px.string()));
        any = true;
    }
    if (!any) {
        std::cerr << "hist: no paired images\n";
        return 1;
    }
    std::string csv = "bin_lo,bin_hi,count\n";
    for (int i = 0; i < h.bins(); ++i)
        csv += fmt(h.lower + i * h.bin_width) + "," + fmt(h.lower + (i + 1) * h.bin_width) + "," +
               std::to_string(h.counts[static_cast<size_t>(i)]) + "\n";
    csv += fmt(h.upper) + ",inf," + std::to_string(h.overflow) + "\n";
    if (out_path.empty())
        std::cout << csv;
    else
        write_text_file(out_path, csv);
    std::cerr << "hist: " << h.total << " samples, modal bin " << h.modal_bin() << ", overflow "
              << h.overflow << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    try {
        cfg = load_config_file(prescan_config(argc, argv));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    CLI::App app{"uncertainty-weighted residual-shifting diffusion super-resolution"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    app.add_option("--seed", cfg.seed, "root seed for all randomness");

    // degrade
    auto* degrade = app.add_subcommand("degrade", "synthesize paired LR/y0 data from HR PNGs");
    std::string in_dir, out_dir;
    degrade->add_option("--in", in_dir, "directory of HR PNGs")->required();
    degrade->add_option("--out", out_dir, "output directory (lr/, y0/, manifest.csv)")->required();
    degrade->add_option("--scale", cfg.scale, "downsampling factor");
    degrade->add_option("--blur-lo", cfg.blur_lo, "blur sigma range low");
    degrade->add_option("--blur-hi", cfg.blur_hi, "blur sigma range high");
    degrade->add_option("--noise-lo", cfg.noise_lo, "noise sigma range low");
    degrade->add_option("--noise-hi", cfg.noise_hi, "noise sigma range high");
    degrade->add_option("--quality-lo", cfg.quality_lo, "compression quality low");
    degrade->add_option("--quality-hi", cfg.quality_hi, "compression quality high");
    degrade->add_flag("--jpeg,!--no-jpeg", cfg.jpeg, "enable compression stage");
    degrade->add_flag("--second-pass", cfg.second_pass, "enable lighter second blur+noise pass");

    // train
    auto* train = app.add_subcommand("train", "train a denoiser or predictor on paired data");
    std::string hr_dir, y0_dir, model_out, role = "denoiser", log_path;
    train->add_option("--hr", hr_dir, "directory of HR PNGs")->required();
    train->add_option("--y0", y0_dir, "directory of matching y0 PNGs")->required();
    train->add_option("--out", model_out, "output model file")->required();
    train->add_option("--role", role, "denoiser|predictor");
    train->add_option("--log", log_path, "training log CSV (default <out>.log.csv)");
    train->add_option("--iters", cfg.iters, "iterations");
    train->add_option("--batch", cfg.batch, "batch size");
    train->add_option("--lr", cfg.lr, "learning rate");
    train->add_option("--lambda", cfg.lambda, "perceptual loss weight");
    train->add_option("--patch", cfg.patch, "training crop size");
    train->add_option("--r", cfg.r, "unshuffle factor");
    train->add_option("--hidden", cfg.hidden, "hidden channels");
    train->add_option("--layers", cfg.layers, "conv layers");
    add_schedule_flags(train, cfg);
    add_weighting_flags(train, cfg);
    add_predictor_flags(train, cfg);

    // sr
    auto* sr = app.add_subcommand("sr", "run the reverse diffusion chain on one image");
    std::string sr_in, sr_out, sr_model, sr_oracle, dump_steps, dump_heatmaps, dump_schedule;
    bool no_unw = false;
    int up_scale = 1;
    sr->add_option("--in", sr_in, "input y0 PNG (already at output resolution unless --scale)")
        ->required();
    sr->add_option("--out", sr_out, "output PNG")->required();
    sr->add_option("--model", sr_model, "denoiser model file");
    sr->add_option("--oracle", sr_oracle, "ground-truth PNG; use the perfect oracle denoiser");
    sr->add_option("--scale", up_scale, "bicubic-upsample the input by this factor first");
    sr->add_flag("--no-unw", no_unw, "disable uncertainty weighting (b_u = 1, isotropic)");
    sr->add_option("--dump-steps", dump_steps, "directory for per-step PNGs and stats CSV");
    sr->add_option("--dump-heatmaps", dump_heatmaps, "directory for uncertainty/weight heatmaps");
    sr->add_option("--dump-schedule", dump_schedule, "write the eta sequence as CSV");
    add_schedule_flags(sr, cfg);
    add_weighting_flags(sr, cfg);
    add_predictor_flags(sr, cfg);

    // verify
    auto* verify = app.add_subcommand("verify", "run the statistical verification suite");
    std::string filter, verify_out;
    bool skip_training = false;
    double bug_scale = 1.0;
    verify->add_option("--filter", filter, "run only checks whose name contains this substring");
    verify->add_option("--out", verify_out, "write the JSON report here instead of stdout");
    verify->add_flag("--skip-training", skip_training, "skip the long toy-training check");
    verify->add_option("--inject-variance-bug", bug_scale)->group("");  // diagnostic, hidden

    // metrics
    auto* metrics = app.add_subcommand("metrics", "PSNR/SSIM between images or directories");
    std::string m_a, m_b, m_dir_a, m_dir_b, m_out;
    metrics->add_option("--a", m_a, "first image");
    metrics->add_option("--b", m_b, "second image");
    metrics->add_option("--dir-a", m_dir_a, "first directory");
    metrics->add_option("--dir-b", m_dir_b, "second directory");
    metrics->add_option("--out", m_out, "write CSV here instead of stdout");

    // hist
    auto* hist = app.add_subcommand("hist", "residual |y0 - hr| histogram over paired directories");
    std::string h_y0, h_hr, h_out;
    double bin_width = 0.01, cutoff = 0.4;
    hist->add_option("--y0", h_y0, "y0 directory")->required();
    hist->add_option("--hr", h_hr, "HR directory")->required();
    hist->add_option("--bin-width", bin_width, "histogram bin width");
    hist->add_option("--cutoff", cutoff, "overflow threshold");
    hist->add_option("--out", h_out, "write CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*degrade) return cmd_degrade(cfg, in_dir, out_dir);
        if (*train) return cmd_train(cfg, hr_dir, y0_dir, model_out, role, log_path);
        if (*sr)
            return cmd_sr(cfg, sr_in, sr_out, sr_model, sr_oracle, no_unw, up_scale, dump_steps,
                          dump_heatmaps, dump_schedule);
        if (*verify) return cmd_verify(cfg, filter, verify_out, skip_training, bug_scale);
        if (*metrics) return cmd_metrics(m_a, m_b, m_dir_a, m_dir_b, m_out);
        if (*hist) return cmd_hist(h_y0, h_hr, bin_width, cutoff, h_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
