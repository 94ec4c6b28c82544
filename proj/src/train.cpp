#include "lanenum/train.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace lanenum {
namespace {

int argmax_row(const Tensor& probs, int row) {
    int best = 0;
    float best_v = probs.values[static_cast<std::size_t>(row) * probs.c];
    for (int k = 1; k < probs.c; ++k) {
        const float v = probs.values[static_cast<std::size_t>(row) * probs.c + k];
        if (v > best_v) {
            best_v = v;
            best = k;
        }
    }
    return best;
}

void fill_batch(Tensor& in, std::vector<int>& labels, Variant v, const Dataset& ds,
                const std::vector<int>& indices, std::size_t first, int bsz) {
    labels.resize(static_cast<std::size_t>(bsz));
    for (int b = 0; b < bsz; ++b) {
        const Sample& s = ds.samples[static_cast<std::size_t>(indices[first + static_cast<std::size_t>(b)])];
        fill_input(in, b, v, s);
        labels[static_cast<std::size_t>(b)] = s.label;
    }
}

}  // namespace

void Metrics::add(int truth, int prediction) {
    ++total;
    if (truth == prediction) ++correct;
    confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(prediction)] += 1;
}

TrainResult train_variant(Variant v, Scale scale, const Dataset& ds, const TrainConfig& cfg,
                          std::ostream* log) {
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw ConfigError("epochs and batch_size must be positive");
    const ArchConfig arch =
        build_config(v, scale, ds.meta.height, ds.meta.width, ds.meta.temporal_radius);

    TrainResult result{init_state<float>(arch, cfg.seed), {}};
    TrainState& st = result.state;
    const int channels = arch.input_channels;

    std::vector<int> order = ds.train_indices;
    Tensor in(cfg.batch_size, channels, ds.meta.height, ds.meta.width);
    std::vector<int> labels;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle = derive_stream(cfg.seed, static_cast<std::uint64_t>(epoch), 0, "shuffle");
        for (int i = 0; i < static_cast<int>(order.size()) - 1; ++i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(
                          shuffle.uniform_int(i, static_cast<int>(order.size()) - 1))]);

        double loss_sum = 0;
        int train_correct = 0;
        for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
            const int bsz = static_cast<int>(
                std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - first));
            if (in.n != bsz) in = Tensor(bsz, channels, ds.meta.height, ds.meta.width);
            fill_batch(in, labels, v, ds, order, first, bsz);

            const Tensor probs = forward_train(st, in);
            for (int b = 0; b < bsz; ++b)
                if (argmax_row(probs, b) == labels[static_cast<std::size_t>(b)]) ++train_correct;
            loss_sum += loss_and_backward(st, probs, std::span<const int>(labels)) * bsz;
            sgd_step(st, cfg.lr, cfg.momentum);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = loss_sum / static_cast<double>(order.size());
        stats.train_accuracy = static_cast<double>(train_correct) / static_cast<double>(order.size());
        stats.test_accuracy = evaluate_model(st, v, ds, ds.test_indices, cfg.batch_size).accuracy();
        result.history.push_back(stats);
        if (log) {
            char line[128];
            std::snprintf(line, sizeof line, "epoch %2d  loss %.6f  train_acc %.6f  test_acc %.6f",
                          epoch, stats.mean_loss, stats.train_accuracy, stats.test_accuracy);
            *log << line << '\n';
        }
    }
    return result;
}

Metrics evaluate_model(const TrainState& st, Variant v, const Dataset& ds,
                       const std::vector<int>& indices, int batch_size) {
    Metrics m;
    const int channels = st.cfg.input_channels;
    for (std::size_t first = 0; first < indices.size(); first += static_cast<std::size_t>(batch_size)) {
        const int bsz = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(batch_size), indices.size() - first));
        Tensor in(bsz, channels, ds.meta.height, ds.meta.width);
        std::vector<int> labels;
        fill_batch(in, labels, v, ds, indices, first, bsz);
        const Tensor probs = forward_eval(st, in);
        for (int b = 0; b < bsz; ++b)
            m.add(labels[static_cast<std::size_t>(b)], argmax_row(probs, b));
    }
    return m;
}

Metrics evaluate_heuristic(const Dataset& ds, const std::vector<int>& indices,
                           const HeuristicConfig& cfg) {
    Metrics m;
    for (const int idx : indices) {
        const Sample& s = ds.samples[static_cast<std::size_t>(idx)];
        const Mask& center = s.masks[s.masks.size() / 2];
        m.add(s.label, predict_lane_heuristic(center, cfg));
    }
    return m;
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

CompareReport run_compare(const Dataset& ds, const CompareConfig& cfg, std::ostream* log) {
    CompareReport rep;
    rep.detector_flops = cfg.detector_flops;
    rep.detector_params = cfg.detector_params;
    rep.rows.resize(4);

    // Training jobs only share the read-only dataset, so they can run
    // concurrently. Results land in fixed slots and logs are replayed in job
    // order, keeping the report and output independent of scheduling.
    struct Job {
        Variant v;
        std::size_t row, slot;
        std::uint64_t seed;
    };
    const Variant order[] = {Variant::A, Variant::B, Variant::C, Variant::D};
    std::vector<Job> jobs;
    for (std::size_t r = 0; r < 4; ++r) {
        CompareRow& row = rep.rows[r];
        const Variant v = order[r];
        row.variant = variant_name(v);
        if (v == Variant::B) {
            row.external_cost = true;
            row.params = cfg.detector_params;
            row.flops = cfg.detector_flops;
            const double acc = evaluate_heuristic(ds, ds.test_indices, cfg.heuristic).accuracy();
            row.seed_accuracies.assign(cfg.seeds.size(), acc);
        } else {
            const ArchConfig arch =
                build_config(v, cfg.scale, ds.meta.height, ds.meta.width, ds.meta.temporal_radius);
            const CostReport costs = count_costs(arch);
            row.params = costs.params;
            row.flops = costs.flops;
            row.seed_accuracies.assign(cfg.seeds.size(), 0.0);
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({v, r, s, cfg.seeds[s]});
        }
    }

    std::vector<std::string> job_logs(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            try {
                const Job& job = jobs[j];
                TrainConfig tc = cfg.train;
                tc.seed = job.seed;
                std::ostringstream buf;
                buf << "variant " << variant_name(job.v) << " seed " << job.seed << '\n';
                const TrainResult tr = train_variant(job.v, cfg.scale, ds, tc, &buf);
                rep.rows[job.row].seed_accuracies[job.slot] =
                    evaluate_model(tr.state, job.v, ds, ds.test_indices, tc.batch_size).accuracy();
                job_logs[j] = buf.str();
            } catch (...) {
                const std::lock_guard<std::mutex> lk(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(jobs.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    if (log)
        for (const std::string& s : job_logs) *log << s;

    for (CompareRow& row : rep.rows) row.median_accuracy = median(row.seed_accuracies);
    return rep;
}

std::string format_table(const CompareReport& rep) {
    std::string out = "variant        FLOPs       params   accuracy\n";
    for (const CompareRow& row : rep.rows) {
        char line[128];
        std::snprintf(line, sizeof line, "%-7s %11lld%s %11lld%s   %8.4f\n", row.variant.c_str(),
                      row.flops, row.external_cost ? "*" : " ", row.params,
                      row.external_cost ? "*" : " ", row.median_accuracy);
        out += line;
    }
    out += "* external lane-detector cost, configured constant (the detector is not part of this tool)\n";
    return out;
}

std::string table_json(const CompareReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const CompareRow& row : rep.rows)
        rows.push_back({{"variant", row.variant},
                        {"flops", row.flops},
                        {"params", row.params},
                        {"external_cost", row.external_cost},
                        {"seed_accuracies", row.seed_accuracies},
                        {"median_accuracy", row.median_accuracy}});
    const nlohmann::json doc{{"rows", rows},
                             {"detector",
                              {{"flops", rep.detector_flops}, {"params", rep.detector_params}}}};
    return doc.dump(2) + "\n";
}

}  // namespace lanenum
