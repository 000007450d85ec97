// End-to-end workflows through the installed CLI binary (path in argv[1]):
// degrade -> train -> sr plus the verify/metrics/hist surfaces, with
// determinism audited over file hashes.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "upsr/analysis.hpp"
#include "upsr/image_io.hpp"
#include "upsr/synth.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("  [%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
    if (!ok) ++g_failures;
}

std::string g_bin;
fs::path g_root;

int run(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
    const fs::path out_path = g_root / "cmd.out";
    const fs::path err_path = g_root / "cmd.err";
    const std::string cmd =
        g_bin + " " + args + " >" + out_path.string() + " 2>" + err_path.string();
    const int status = std::system(cmd.c_str());
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    if (out) *out = slurp(out_path);
    if (err) *err = slurp(err_path);
    return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string file_hash(const fs::path& p) {
    // FNV-1a over the raw bytes; plenty for change detection
    std::ifstream f(p, std::ios::binary);
    uint64_t h = 0xcbf29ce484222325ull;
    char c;
    while (f.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string dir_hash(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) acc += f.filename().string() + ":" + file_hash(f) + ";";
    return acc;
}

size_t count_pngs(const fs::path& dir) {
    size_t n = 0;
    if (!fs::is_directory(dir)) return 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".png") ++n;
    return n;
}

size_t line_count(const fs::path& p) {
    std::ifstream f(p);
    size_t n = 0;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) ++n;
    return n;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-upsr-binary>\n", argv[0]);
        return 2;
    }
    g_bin = argv[1];
    g_root = fs::temp_directory_path() / "upsr_cli_test";
    fs::remove_all(g_root);
    fs::create_directories(g_root);

    // --- fixture: a handful of synthetic HR images -------------------------
    const fs::path hr_dir = g_root / "hr";
    fs::create_directories(hr_dir);
    upsr::Rng rng(31337);
    for (int i = 0; i < 6; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "img%02d.png", i);
        upsr::write_png(upsr::synth_patch(64, 64, 3, rng), (hr_dir / name).string());
    }

    std::printf("degrade:\n");
    const fs::path data1 = g_root / "data1";
    const fs::path data2 = g_root / "data2";
    const std::string degrade_flags =
        " --scale 2 --blur-lo 0.4 --blur-hi 1.2 --noise-lo 0 --noise-hi 0.02 --no-jpeg";
    check(run("--seed 7 degrade --in " + hr_dir.string() + " --out " + data1.string() +
              degrade_flags) == 0,
          "degrade exits 0");
    check(count_pngs(data1 / "lr") == 6 && count_pngs(data1 / "y0") == 6,
          "6 paired outputs written");
    check(line_count(data1 / "manifest.csv") == 7, "manifest has header + 6 rows");
    run("--seed 7 degrade --in " + hr_dir.string() + " --out " + data2.string() + degrade_flags);
    check(dir_hash(data1) == dir_hash(data2), "same seed reruns are byte-identical");

    const fs::path empty_dir = g_root / "empty";
    fs::create_directories(empty_dir);
    std::string err;
    check(run("degrade --in " + empty_dir.string() + " --out " + (g_root / "nope").string(),
              nullptr, &err) != 0 &&
              err.find("no input images") != std::string::npos,
          "empty input dir fails with 'no input images'");

    std::printf("train:\n");
    const fs::path model1 = g_root / "m1.upsr";
    const fs::path model2 = g_root / "m2.upsr";
    const std::string train_flags = " --iters 60 --batch 2 --lr 0.2 --lambda 0 --patch 32"
                                    " --hidden 8 --layers 3 --predictor smooth";
    const std::string train_cmd = "--seed 11 train --hr " + hr_dir.string() + " --y0 " +
                                  (data1 / "y0").string() + train_flags;
    check(run(train_cmd + " --out " + model1.string()) == 0, "train exits 0");
    check(fs::exists(model1) && fs::exists(model1.string() + ".log.csv"),
          "model and training log written");
    {
        std::ifstream log(model1.string() + ".log.csv");
        std::string header, first, line, last;
        std::getline(log, header);
        std::getline(log, first);
        while (std::getline(log, line))
            if (!line.empty()) last = line;
        const double first_loss = std::atof(first.substr(first.find(',') + 1).c_str());
        const double last_loss = std::atof(last.substr(last.find(',') + 1).c_str());
        check(last_loss < first_loss, "logged loss decreases over the run");
    }
    run(train_cmd + " --out " + model2.string());
    check(file_hash(model1) == file_hash(model2), "same seed gives identical model files");
    check(run("train --hr /nonexistent --y0 /nonexistent --out " + (g_root / "x.upsr").string()) !=
              0,
          "missing dataset path fails");

    std::printf("sr:\n");
    const fs::path sr_in = data1 / "y0" / "img00.png";
    const fs::path sr_gt = hr_dir / "img00.png";
    const fs::path sr_out1 = g_root / "sr1.png";
    const fs::path sr_out2 = g_root / "sr2.png";
    check(run("--seed 3 sr --in " + sr_in.string() + " --out " + sr_out1.string() + " --model " +
              model1.string() + " --predictor smooth") == 0,
          "sr with trained model exits 0");
    run("--seed 3 sr --in " + sr_in.string() + " --out " + sr_out2.string() + " --model " +
        model1.string() + " --predictor smooth");
    check(file_hash(sr_out1) == file_hash(sr_out2), "same seed gives identical sr output");

    const fs::path oracle_out = g_root / "sr_oracle.png";
    check(run("--seed 3 sr --in " + sr_in.string() + " --out " + oracle_out.string() +
              " --oracle " + sr_gt.string() + " --predictor smooth") == 0,
          "oracle mode exits 0");
    {
        const upsr::Image got = upsr::read_png(oracle_out.string());
        const upsr::Image want = upsr::read_png(sr_gt.string());
        check(upsr::mse(got, want) < 1e-10 && upsr::psnr(got, want) == upsr::kPsnrCap,
              "oracle recovery is exact (PSNR at cap)");
    }

    const fs::path dumps = g_root / "dumps";
    const fs::path heat = g_root / "heat";
    check(run("--seed 3 sr --in " + sr_in.string() + " --out " + (g_root / "sr3.png").string() +
              " --model " + model1.string() + " --predictor smooth --no-unw --dump-steps " +
              dumps.string() + " --dump-heatmaps " + heat.string() + " --dump-schedule " +
              (g_root / "etas.csv").string()) == 0,
          "sr with --no-unw and dumps exits 0");
    check(fs::exists(dumps / "steps.csv") && count_pngs(dumps) == 5,
          "per-step dump has 5 states and a stats csv");
    check(fs::exists(heat / "uncertainty.png") && fs::exists(heat / "weights.png"),
          "heatmaps written");
    check(line_count(g_root / "etas.csv") == 7, "schedule csv has header + eta_0..eta_5");
    {
        // --no-unw pins the weight range to exactly [1, 1] in the step stats
        std::ifstream f(dumps / "steps.csv");
        std::string header, row;
        std::getline(f, header);
        bool weights_one = true;
        while (std::getline(f, row)) {
            if (row.empty()) continue;
            const auto wmin = row.substr(row.rfind(',', row.rfind(',') - 1) + 1);
            if (wmin.rfind("1,", 0) != 0 && wmin != "1,1") weights_one = false;
        }
        check(weights_one, "--no-unw records uniform weights in the stats dump");
    }

    std::printf("verify:\n");
    check(run("verify --filter=weighting --out " + (g_root / "rep.json").string()) == 0,
          "verify --filter=weighting exits 0");
    {
        std::ifstream f(g_root / "rep.json");
        std::stringstream ss;
        ss << f.rdbuf();
        check(ss.str().find("\"all_pass\": true") != std::string::npos,
              "json report records all_pass");
    }
    check(run("verify --filter=marginal") == 0, "verify --filter=marginal exits 0");
    check(run("verify --filter=marginal --inject-variance-bug 1.1") != 0,
          "injected variance bug makes the moment checks fail");
    check(run("verify --filter=posterior --inject-variance-bug 1.1") != 0,
          "injected variance bug makes the posterior check fail");
    check(run("verify --filter=no_such_check") != 0, "unknown filter exits nonzero");

    std::printf("metrics:\n");
    std::string out;
    check(run("metrics --a " + sr_gt.string() + " --b " + sr_gt.string(), &out) == 0,
          "metrics on identical images exits 0");
    check(out.find("99") != std::string::npos, "identical images report the 99 dB cap");
    {
        // csv round trip: reparse and compare against in-process values
        const fs::path csv = g_root / "metrics.csv";
        check(run("metrics --a " + sr_out1.string() + " --b " + sr_gt.string() + " --out " +
                  csv.string()) == 0,
              "metrics csv written");
        std::ifstream f(csv);
        std::string header, row;
        std::getline(f, header);
        std::getline(f, row);
        const size_t c1 = row.find(','), c2 = row.find(',', c1 + 1);
        const double psnr_csv = std::atof(row.substr(c1 + 1, c2 - c1 - 1).c_str());
        const double ssim_csv = std::atof(row.substr(c2 + 1).c_str());
        const upsr::Image a = upsr::read_png(sr_out1.string());
        const upsr::Image b = upsr::read_png(sr_gt.string());
        check(psnr_csv == upsr::psnr(a, b) && ssim_csv == upsr::ssim(a, b),
              "csv values reparse to the in-memory metrics");
    }

    std::printf("hist:\n");
    check(run("hist --y0 " + hr_dir.string() + " --hr " + hr_dir.string(), &out) == 0,
          "hist on identical dirs exits 0");
    {
        std::istringstream ss(out);
        std::string header, first;
        std::getline(ss, header);
        std::getline(ss, first);
        check(first.find("0,") == 0, "first bin row starts at 0");
        long total_bin0 = std::atol(first.substr(first.rfind(',') + 1).c_str());
        check(total_bin0 == 6l * 64 * 64 * 3, "identical pairs put all mass in bin 0");
    }
    check(run("hist --y0 " + (data1 / "y0").string() + " --hr " + hr_dir.string() + " --out " +
              (g_root / "hist.csv").string()) == 0,
          "hist csv written for degraded pairs");

    std::printf("%d failure(s)\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
