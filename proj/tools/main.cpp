// lanenum command line: dataset generation, training, evaluation, variant
// comparison, cost reporting and overlay prediction.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lanenum/dataset.hpp"
#include "lanenum/model_io.hpp"
#include "lanenum/overlay.hpp"
#include "lanenum/train.hpp"

namespace {

using namespace lanenum;

std::pair<int, int> parse_hw(const std::string& hw) {
    int w = 0, h = 0;
    if (std::sscanf(hw.c_str(), "%dx%d", &w, &h) != 2 || w < 20 || h < 20 || w > 512 || h > 512)
        throw ConfigError("--hw expects WIDTHxHEIGHT between 20x20 and 512x512, got '" + hw + "'");
    return {w, h};
}

Scale parse_scale(const std::string& s) {
    if (s == "full" || s == "paper") return Scale::full;
    if (s == "desk") return Scale::desk;
    throw ConfigError("unknown scale '" + s + "'");
}

void print_metrics(const Metrics& m) {
    std::printf("accuracy %.4f (%d/%d)\n", m.accuracy(), m.correct, m.total);
    std::printf("confusion (rows = truth, cols = prediction):\n");
    for (int t = 0; t < 5; ++t) {
        std::printf("  %d:", t);
        for (int p = 0; p < 5; ++p)
            std::printf(" %5d", m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
        std::printf("\n");
    }
}

const std::vector<int>& pick_split(const Dataset& ds, const std::string& split) {
    return split == "train" ? ds.train_indices : ds.test_indices;
}

int predict_with_model(const ModelFile& mf, const Sample& s) {
    const Variant v = variant_from_string(mf.variant);
    const int n = (static_cast<int>(s.masks.size()) - 1) / 2;
    Tensor in(1, variant_input_channels(v, n), s.image.height, s.image.width);
    fill_input(in, 0, v, s);
    const Tensor probs = forward_eval(mf.state, in);
    int best = 0;
    for (int k = 1; k < probs.c; ++k)
        if (probs.values[static_cast<std::size_t>(k)] > probs.values[static_cast<std::size_t>(best)])
            best = k;
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ego lane number prediction from road images and lane masks"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    std::string gen_out, gen_hw = "100x100", gen_name;
    DatasetRequest req;
    int gen_frames = 3;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--count", req.sample_count, "Sample count")->capture_default_str();
    gen->add_option("--seed", req.seed, "Generator seed")->capture_default_str();
    gen->add_option("--frames", gen_frames, "Mask frames per sample, odd")
        ->check(CLI::Range(1, 9))
        ->capture_default_str();
    gen->add_option("--line-dropout", req.corruption.line_dropout_p, "Whole-line erasure probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    gen->add_option("--pixel-flip", req.corruption.pixel_flip_q, "Per-pixel flip probability")
        ->check(CLI::Range(0.0, 0.5))
        ->capture_default_str();
    gen->add_option("--thickness-jitter", req.corruption.thickness_jitter,
                    "Max stroke dilation/erosion steps")
        ->check(CLI::Range(0, 3))
        ->capture_default_str();
    gen->add_option("--ambiguous-prob", req.gen.p_ambiguous, "Class-0 scene probability")
        ->check(CLI::Range(0.0, 0.9))
        ->capture_default_str();
    gen->add_option("--hw", gen_hw, "Image size as WIDTHxHEIGHT")->capture_default_str();
    gen->add_option("--name", gen_name, "Dataset name (default: directory name)");

    // train
    auto* train = app.add_subcommand("train", "Train a network variant");
    std::string tr_data, tr_variant, tr_scale = "desk", tr_out;
    TrainConfig tr_cfg;
    train->add_option("--data", tr_data, "Dataset directory")->required();
    train->add_option("--variant", tr_variant, "Network variant")
        ->required()
        ->check(CLI::IsMember({"A", "C", "D"}));
    train->add_option("--scale", tr_scale, "Model scale: full (alias: paper) or desk")
        ->check(CLI::IsMember({"full", "paper", "desk"}))
        ->capture_default_str();
    train->add_option("--epochs", tr_cfg.epochs, "Training epochs")->capture_default_str();
    train->add_option("--seed", tr_cfg.seed, "Training seed")->capture_default_str();
    train->add_option("--batch", tr_cfg.batch_size, "Batch size")->capture_default_str();
    train->add_option("--lr", tr_cfg.lr, "Learning rate")->capture_default_str();
    train->add_option("--momentum", tr_cfg.momentum, "SGD momentum")->capture_default_str();
    train->add_option("--out", tr_out, "Model output path")->required();

    // eval / heuristic
    auto* eval = app.add_subcommand("eval", "Evaluate a model or the mask heuristic");
    std::string ev_data, ev_split = "test", ev_model;
    bool ev_heuristic = false;
    eval->add_option("--data", ev_data, "Dataset directory")->required();
    eval->add_option("--split", ev_split, "Evaluation split")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();
    auto* ev_model_opt = eval->add_option("--model", ev_model, "Model file");
    auto* ev_heur_opt = eval->add_flag("--heuristic", ev_heuristic, "Use the slope-count heuristic");
    ev_model_opt->excludes(ev_heur_opt);

    auto* heur = app.add_subcommand("heuristic", "Evaluate the mask heuristic (eval --heuristic)");
    std::string he_data, he_split = "test";
    heur->add_option("--data", he_data, "Dataset directory")->required();
    heur->add_option("--split", he_split, "Evaluation split")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();

    // compare
    auto* compare = app.add_subcommand("compare", "Train and compare all four variants");
    std::string cp_data, cp_scale = "desk", cp_out = "table.txt";
    CompareConfig cp_cfg;
    cp_cfg.train.epochs = 8;
    compare->add_option("--data", cp_data, "Dataset directory")->required();
    compare->add_option("--scale", cp_scale, "Model scale: full (alias: paper) or desk")
        ->check(CLI::IsMember({"full", "paper", "desk"}))
        ->capture_default_str();
    compare->add_option("--seeds", cp_cfg.seeds, "Training seeds")
        ->delimiter(',')
        ->capture_default_str();
    compare->add_option("--epochs", cp_cfg.train.epochs, "Epochs per training run")
        ->capture_default_str();
    compare->add_option("--out", cp_out, "Table output path (a .json copy is written alongside)")
        ->capture_default_str();

    // flops
    auto* flops = app.add_subcommand("flops", "Report parameter and FLOP counts");
    std::string fl_variant = "A", fl_scale = "full", fl_hw;
    int fl_frames = 3;
    flops->add_option("--variant", fl_variant, "Network variant")
        ->check(CLI::IsMember({"A", "C", "D"}))
        ->capture_default_str();
    flops->add_option("--scale", fl_scale, "Model scale: full (alias: paper) or desk")
        ->check(CLI::IsMember({"full", "paper", "desk"}))
        ->capture_default_str();
    flops->add_option("--hw", fl_hw, "Input size as WIDTHxHEIGHT (default from scale)");
    flops->add_option("--frames", fl_frames, "Mask frames per sample, odd")
        ->check(CLI::Range(1, 9))
        ->capture_default_str();

    // predict
    auto* predict = app.add_subcommand("predict", "Predict one sample, optionally with an overlay");
    std::string pr_data, pr_model, pr_overlay;
    int pr_index = 0;
    bool pr_heuristic = false;
    predict->add_option("--data", pr_data, "Dataset directory")->required();
    predict->add_option("--index", pr_index, "Sample index")->required();
    auto* pr_model_opt = predict->add_option("--model", pr_model, "Model file");
    auto* pr_heur_opt =
        predict->add_flag("--heuristic", pr_heuristic, "Use the slope-count heuristic");
    pr_model_opt->excludes(pr_heur_opt);
    predict->add_option("--overlay", pr_overlay, "Write an overlay PPM here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*gen) {
            const auto [w, h] = parse_hw(gen_hw);
            if (gen_frames % 2 == 0) throw ConfigError("--frames must be odd");
            req.gen.width = w;
            req.gen.height = h;
            req.gen.temporal_radius = (gen_frames - 1) / 2;
            req.name = gen_name.empty()
                           ? std::filesystem::path(gen_out).filename().string()
                           : gen_name;
            const Dataset ds = generate_dataset(req);
            save_dataset(gen_out, ds);
            std::printf("wrote %d samples (%dx%d, %d frames) to %s\n", ds.meta.sample_count,
                        ds.meta.width, ds.meta.height, 2 * ds.meta.temporal_radius + 1,
                        gen_out.c_str());
            std::printf("class histogram:");
            for (const int c : ds.meta.class_histogram) std::printf(" %d", c);
            std::printf("\n");
        } else if (*train) {
            const Dataset ds = load_dataset(tr_data);
            const Variant v = variant_from_string(tr_variant);
            const TrainResult tr = train_variant(v, parse_scale(tr_scale), ds, tr_cfg, &std::cout);
            save_model(tr_out, tr.state, variant_name(v));
            std::printf("saved %s\n", tr_out.c_str());
        } else if (*eval || *heur) {
            const std::string& data = *heur ? he_data : ev_data;
            const std::string& split = *heur ? he_split : ev_split;
            const Dataset ds = load_dataset(data);
            if (*heur || ev_heuristic) {
                print_metrics(evaluate_heuristic(ds, pick_split(ds, split), HeuristicConfig{}));
            } else {
                if (ev_model.empty())
                    throw ConfigError("eval needs --model PATH or --heuristic");
                const ModelFile mf = load_model(ev_model);
                print_metrics(evaluate_model(mf.state, variant_from_string(mf.variant), ds,
                                             pick_split(ds, split)));
            }
        } else if (*compare) {
            const Dataset ds = load_dataset(cp_data);
            cp_cfg.scale = parse_scale(cp_scale);
            const CompareReport rep = run_compare(ds, cp_cfg, &std::cout);
            const std::string table = format_table(rep);
            std::fputs(table.c_str(), stdout);
            std::ofstream out(cp_out, std::ios::trunc);
            if (!out) throw DataError("cannot write " + cp_out);
            out << table;
            std::filesystem::path json_path(cp_out);
            json_path.replace_extension(".json");
            std::ofstream jout(json_path, std::ios::trunc);
            if (!jout) throw DataError("cannot write " + json_path.string());
            jout << table_json(rep);
            std::printf("wrote %s and %s\n", cp_out.c_str(), json_path.string().c_str());
        } else if (*flops) {
            const Scale scale = parse_scale(fl_scale);
            int w = scale == Scale::full ? 100 : 50, h = w;
            if (!fl_hw.empty()) std::tie(w, h) = parse_hw(fl_hw);
            if (fl_frames % 2 == 0) throw ConfigError("--frames must be odd");
            const ArchConfig cfg = build_config(variant_from_string(fl_variant), scale, h, w,
                                                (fl_frames - 1) / 2);
            const CostReport rep = count_costs(cfg);
            std::printf("%-18s %12s %14s\n", "layer", "params", "flops");
            for (const LayerCost& lc : rep.per_layer)
                std::printf("%-18s %12lld %14lld\n", lc.name.c_str(),
                            static_cast<long long>(lc.params), static_cast<long long>(lc.flops));
            std::printf("%-18s %12lld %14lld\n", "total", static_cast<long long>(rep.params),
                        static_cast<long long>(rep.flops));
            std::printf("(%s)\n", rep.convention.c_str());
        } else if (*predict) {
            const Dataset ds = load_dataset(pr_data);
            if (pr_index < 0 || pr_index >= static_cast<int>(ds.samples.size()))
                throw DataError("--index out of range");
            const Sample& s = ds.samples[static_cast<std::size_t>(pr_index)];
            int predicted;
            if (pr_heuristic) {
                predicted = predict_lane_heuristic(s.masks[s.masks.size() / 2], HeuristicConfig{});
            } else {
                if (pr_model.empty())
                    throw ConfigError("predict needs --model PATH or --heuristic");
                predicted = predict_with_model(load_model(pr_model), s);
            }
            std::printf("index %d  label %d  predicted %d\n", pr_index, s.label, predicted);
            if (!pr_overlay.empty()) {
                const ImageU8 overlay = render_overlay(s.image, s.masks[s.masks.size() / 2], predicted);
                write_ppm(pr_overlay, overlay);
                std::printf("wrote %s\n", pr_overlay.c_str());
            }
        }
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
