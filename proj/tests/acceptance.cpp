// Release gate: eight checks over gradients, cost counting, the heuristic
// oracle, determinism, the variant comparison, heuristic fragility,
// convergence and file formats. One PASS/FAIL line per check; the exit code
// is the number of failures.
//
// Usage: acceptance <lanenum-cli> <workdir> [check#]

#include <sys/wait.h>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lanenum/dataset.hpp"
#include "lanenum/maskgeom.hpp"
#include "lanenum/model_io.hpp"
#include "lanenum/network.hpp"
#include "lanenum/overlay.hpp"
#include "lanenum/train.hpp"
#include "lanenum/variants.hpp"

using namespace lanenum;
namespace fs = std::filesystem;

namespace {

// Mirrors the CLI default; check 5's time budget assumes it. The budget is
// deliberately short: the fused variants converge within a few epochs thanks
// to the mask channel, while the image-only variant needs roughly twice as
// long on these scenes.
constexpr int kCompareEpochs = 8;
constexpr double kAccEps = 1e-9;  // absorbs float noise when comparing accuracy gaps

std::string g_cli;
fs::path g_work;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

int run_cli(const std::string& args, const fs::path& capture) {
    const std::string cmd =
        '"' + g_cli + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    if (status < 0 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "<unreadable:" + p.string() + ">";
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_file_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

// --- check 1: gradients ----------------------------------------------------

ArchConfig tiny(int ch, int h, int w, std::vector<LayerSpec> layers) {
    ArchConfig cfg;
    cfg.input_channels = ch;
    cfg.input_h = h;
    cfg.input_w = w;
    cfg.layers = std::move(layers);
    return cfg;
}

Outcome check_gradients() {
    const Timer t;
    struct Case {
        const char* name;
        ArchConfig cfg;
    };
    const Case cases[] = {
        {"conv-stem", tiny(2, 6, 6,
                           {LayerSpec::conv_stem(3), LayerSpec::flatten(),
                            LayerSpec::softmax_output(5)})},
        {"conv-block", tiny(2, 6, 6,
                            {LayerSpec::conv_block(3, 0.0), LayerSpec::flatten(),
                             LayerSpec::softmax_output(5)})},
        {"dense", tiny(2, 2, 2,
                       {LayerSpec::flatten(), LayerSpec::dense(7, 0.0),
                        LayerSpec::softmax_output(5)})},
        {"softmax", tiny(5, 1, 1, {LayerSpec::flatten(), LayerSpec::softmax_output(5)})},
    };
    double worst = 0;
    const char* worst_case = "";
    std::uint64_t seed = 211;
    for (const Case& c : cases) {
        const GradCheckReport rep = gradient_check(c.cfg, seed++);
        if (rep.max_rel_err > worst) {
            worst = rep.max_rel_err;
            worst_case = c.name;
        }
    }
    const double el = t.s();
    Outcome o;
    o.pass = worst < 1e-4 && el < 60.0;
    o.detail = fmt("max rel err %.3g (%s, tol 1e-4) in %.1fs (limit 60s)", worst, worst_case, el);
    return o;
}

// --- check 2: parameter and flop counts ------------------------------------

Outcome check_costs() {
    const CostReport a = count_costs(build_config(Variant::A, Scale::full, 100, 100, 1));
    const CostReport c = count_costs(build_config(Variant::C, Scale::full, 100, 100, 1));
    const CostReport d = count_costs(build_config(Variant::D, Scale::full, 100, 100, 1));

    const bool exact = a.params == 3'081'997;
    const bool near = std::llabs(a.params - 3'000'000) <= 300'000;
    const bool deltas = (c.params - a.params == 288) && (d.params - a.params == 864);

    const CostReport stem = count_costs(
        tiny(3, 100, 100,
             {LayerSpec::conv_stem(32), LayerSpec::flatten(), LayerSpec::softmax_output(5)}));
    const CostReport block = count_costs(
        tiny(32, 100, 100,
             {LayerSpec::conv_block(64, 0.25), LayerSpec::flatten(),
              LayerSpec::softmax_output(5)}));
    const CostReport head =
        count_costs(tiny(300, 1, 1, {LayerSpec::flatten(), LayerSpec::softmax_output(5)}));
    const bool flops = stem.per_layer[0].flops == 17'280'000 &&
                       block.per_layer[0].flops == 368'640'000 &&
                       head.per_layer[1].flops == 3'000;

    Outcome o;
    o.pass = exact && near && deltas && flops;
    o.detail = fmt("full-scale A params %lld (want 3081997), deltas C-A %lld D-A %lld, "
                   "hand flop cases %s",
                   a.params, c.params - a.params, d.params - a.params, flops ? "ok" : "BAD");
    return o;
}

// --- check 3: heuristic oracle ---------------------------------------------

Outcome check_heuristic_oracle() {
    const Timer t;
    DatasetRequest req;
    req.name = "oracle";
    req.sample_count = 1000;
    req.gen.width = 100;
    req.gen.height = 100;
    req.gen.temporal_radius = 0;
    req.gen.p_ambiguous = 0.0;  // non-ambiguous only; corruption stays all-zero
    req.seed = 101;

    int correct = 0;
    for (int i = 0; i < req.sample_count; ++i) {
        const Sample s = generate_sample(req, i);
        if (predict_lane_heuristic(s.masks[s.masks.size() / 2], {}) == s.label) ++correct;
    }
    const double el = t.s();
    Outcome o;
    o.pass = correct == req.sample_count && el < 30.0;
    o.detail = fmt("%d/%d clean samples correct in %.1fs (limit 30s)", correct,
                   req.sample_count, el);
    return o;
}

// --- check 4: determinism through the CLI ----------------------------------

std::string epoch_lines(const fs::path& log) {
    std::istringstream in(slurp(log));
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("epoch", 0) == 0) out += line + '\n';
    return out;
}

Outcome check_determinism() {
    // The exact same command twice: second run overwrites the first, which is
    // snapshotted in between.
    const fs::path d1 = g_work / "det_a", snap = g_work / "det_a_snap";
    const fs::path log = g_work / "det_gen.log";
    const std::string gen_cmd = "gen --out \"" + d1.string() +
                                "\" --count 60 --seed 5 --frames 3 --hw 60x60"
                                " --line-dropout 0.15 --pixel-flip 0.002";
    for (int i = 0; i < 2; ++i) {
        const int rc = run_cli(gen_cmd, log);
        if (rc != 0) return {false, "gen exited with " + std::to_string(rc) + ": " + slurp(log)};
        if (i == 0) fs::copy(d1, snap, fs::copy_options::recursive);
    }
    for (const char* f : {"samples.bin", "manifest.json", "split.json"})
        if (!same_file_bytes(d1 / f, snap / f)) return {false, fmt("gen runs differ in %s", f)};

    const fs::path t1 = g_work / "det_t1.log", t2 = g_work / "det_t2.log";
    for (int i = 0; i < 2; ++i) {
        const fs::path model = g_work / ("det_m" + std::to_string(i) + ".lnm");
        const int rc = run_cli("train --data \"" + d1.string() + "\" --variant A --scale desk" +
                                   " --epochs 2 --seed 3 --out \"" + model.string() + '"',
                               i == 0 ? t1 : t2);
        if (rc != 0)
            return {false, "train exited with " + std::to_string(rc) + ": " + slurp(i == 0 ? t1 : t2)};
    }
    const std::string e1 = epoch_lines(t1), e2 = epoch_lines(t2);
    if (e1.empty()) return {false, "train log has no epoch lines"};
    if (e1 != e2) return {false, "train logs differ between identical runs"};
    return {true, "gen byte-identical twice; train logs identical twice"};
}

// --- check 5: variant ordering under the compare budget ---------------------

Outcome check_compare_ordering() {
    const Timer t;
    DatasetRequest req;
    req.name = "bench";
    req.sample_count = 2500;
    req.gen.width = 50;
    req.gen.height = 50;
    req.gen.temporal_radius = 1;
    req.corruption.line_dropout_p = 0.3;
    req.corruption.pixel_flip_q = 0.002;
    req.seed = 1;
    const Dataset ds = generate_dataset(req);

    CompareConfig cc;
    cc.scale = Scale::desk;
    cc.seeds = {1, 2, 3};
    cc.train.epochs = kCompareEpochs;
    const CompareReport rep = run_compare(ds, cc, nullptr);
    const double el = t.s();

    const double a = rep.rows[0].median_accuracy, b = rep.rows[1].median_accuracy,
                 c = rep.rows[2].median_accuracy, d = rep.rows[3].median_accuracy;
    const bool order = c + kAccEps >= a + 0.03 && c + kAccEps >= b + 0.03 &&
                       d + kAccEps >= c - 0.01;
    Outcome o;
    o.pass = order && el < 900.0;
    o.detail = fmt("medians A %.4f B %.4f C %.4f D %.4f (want C>=A+0.03, C>=B+0.03, D>=C-0.01)"
                   " in %.0fs (limit 900s)",
                   a, b, c, d, el);
    return o;
}

// --- check 6: heuristic fragility under line dropout ------------------------

Outcome check_heuristic_fragility() {
    const double ps[] = {0.0, 0.15, 0.3};
    double med[3] = {0, 0, 0};
    for (int pi = 0; pi < 3; ++pi) {
        std::vector<double> accs;
        for (const std::uint64_t seed : {11ull, 12ull, 13ull}) {
            DatasetRequest req;
            req.name = "fragility";
            req.sample_count = 400;
            req.gen.width = 100;
            req.gen.height = 100;
            req.gen.temporal_radius = 0;
            req.gen.p_ambiguous = 0.0;
            req.corruption.line_dropout_p = ps[pi];
            req.seed = seed;
            const Dataset ds = generate_dataset(req);
            std::vector<int> all(ds.samples.size());
            std::iota(all.begin(), all.end(), 0);
            accs.push_back(evaluate_heuristic(ds, all).accuracy());
        }
        med[pi] = median(accs);
    }
    Outcome o;
    o.pass = med[0] + kAccEps >= med[1] && med[1] + kAccEps >= med[2] && med[2] <= 0.85 + kAccEps;
    o.detail = fmt("median accuracy %.4f / %.4f / %.4f at line dropout 0 / 0.15 / 0.3 "
                   "(want non-increasing, last <= 0.85)",
                   med[0], med[1], med[2]);
    return o;
}

// --- check 7: convergence of the image-only net -----------------------------

Outcome check_convergence() {
    DatasetRequest req;
    req.name = "clean";
    req.sample_count = 3000;
    req.gen.width = 50;
    req.gen.height = 50;
    req.gen.temporal_radius = 1;
    req.seed = 7;
    const Dataset ds = generate_dataset(req);

    TrainConfig tc;
    tc.epochs = 20;
    tc.seed = 1;
    const TrainResult tr = train_variant(Variant::A, Scale::desk, ds, tc, nullptr);
    double best = 0;
    int best_epoch = 0;
    for (const EpochStats& e : tr.history)
        if (e.test_accuracy > best) {
            best = e.test_accuracy;
            best_epoch = e.epoch;
        }
    Outcome o;
    o.pass = best + kAccEps >= 0.95;
    o.detail = fmt("best test accuracy %.4f at epoch %d (want >= 0.95 within 20)", best,
                   best_epoch);
    return o;
}

// --- check 8: file formats ---------------------------------------------------

Outcome check_formats() {
    const fs::path data = g_work / "fmt_data";
    const fs::path log = g_work / "fmt.log";
    int rc = run_cli("gen --out \"" + data.string() +
                         "\" --count 30 --seed 21 --frames 3 --hw 64x64"
                         " --line-dropout 0.15 --pixel-flip 0.002 --thickness-jitter 1",
                     log);
    if (rc != 0) return {false, "gen exited with " + std::to_string(rc) + ": " + slurp(log)};

    const Dataset ds = load_dataset(data);
    const fs::path data2 = g_work / "fmt_data_rt";
    fs::create_directories(data2);
    save_dataset(data2, ds);
    for (const char* f : {"samples.bin", "manifest.json", "split.json"})
        if (!same_file_bytes(data / f, data2 / f))
            return {false, fmt("dataset round trip changed %s", f)};

    const fs::path model = g_work / "fmt_model.lnm";
    rc = run_cli("train --data \"" + data.string() + "\" --variant C --scale desk --epochs 1" +
                     " --seed 2 --out \"" + model.string() + '"',
                 log);
    if (rc != 0) return {false, "train exited with " + std::to_string(rc) + ": " + slurp(log)};
    const ModelFile mf = load_model(model.string());
    const fs::path model2 = g_work / "fmt_model_rt.lnm";
    save_model(model2.string(), mf.state, mf.variant);
    if (!same_file_bytes(model, model2)) return {false, "model round trip changed bytes"};

    const fs::path ppm = g_work / "fmt_overlay.ppm";
    rc = run_cli("predict --data \"" + data.string() + "\" --index 0 --model \"" +
                     model.string() + "\" --overlay \"" + ppm.string() + '"',
                 log);
    if (rc != 0) return {false, "predict exited with " + std::to_string(rc) + ": " + slurp(log)};

    const std::string raw = slurp(ppm);
    if (raw.rfind("P6\n", 0) != 0) return {false, "overlay is not a P6 PPM"};

    // The overlay must be exactly: green-blended center mask, purple digit of
    // the model's prediction at (4,4).
    const Sample& s = ds.samples[0];
    const Variant v = variant_from_string(mf.variant);
    Tensor in(1, mf.cfg.input_channels, mf.cfg.input_h, mf.cfg.input_w);
    fill_input(in, 0, v, s);
    const Tensor probs = forward_eval(mf.state, in);
    int label = 0;
    for (int k = 1; k < probs.c; ++k)
        if (probs.values[static_cast<std::size_t>(k)] >
            probs.values[static_cast<std::size_t>(label)])
            label = k;
    const ImageU8 expect = render_overlay(s.image, s.masks[s.masks.size() / 2], label);
    const ImageU8 got = read_ppm(ppm);
    if (!(got == expect)) return {false, "overlay pixels do not match blend+glyph reference"};

    bool purple_at_glyph = false;
    for (int y = 4; y < 11 && !purple_at_glyph; ++y)
        for (int x = 4; x < 9; ++x)
            if (got.at(0, y, x) == 160 && got.at(1, y, x) == 32 && got.at(2, y, x) == 240) {
                purple_at_glyph = true;
                break;
            }
    if (!purple_at_glyph) return {false, "no purple glyph pixels in the corner box"};
    return {true, fmt("dataset + model round trips byte-exact; overlay PPM valid (digit %d)",
                      label)};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3 || argc > 4) {
        std::fprintf(stderr, "usage: acceptance <lanenum-cli> <workdir> [check#]\n");
        return 64;
    }
    g_cli = argv[1];
    g_work = argv[2];
    const int only = argc == 4 ? std::atoi(argv[3]) : 0;
    std::error_code ec;
    fs::remove_all(g_work, ec);
    fs::create_directories(g_work);

    struct Check {
        const char* name;
        std::function<Outcome()> fn;
    };
    const Check checks[] = {
        {"gradient check", check_gradients},
        {"cost counting", check_costs},
        {"heuristic oracle", check_heuristic_oracle},
        {"determinism", check_determinism},
        {"variant ordering", check_compare_ordering},
        {"heuristic fragility", check_heuristic_fragility},
        {"convergence", check_convergence},
        {"file formats", check_formats},
    };

    int failures = 0;
    for (int i = 0; i < 8; ++i) {
        if (only && only != i + 1) continue;
        Outcome o;
        try {
            o = checks[i].fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%d. %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", checks[i].name,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    if (failures) std::printf("%d check(s) failed\n", failures);
    return failures;
}
