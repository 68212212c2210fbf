#include "mapflow/cli.hpp"

#include "mapflow/checkpoint.hpp"
#include "mapflow/errors.hpp"
#include "mapflow/io.hpp"
#include "mapflow/optim.hpp"
#include "mapflow/tensor_ops.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

namespace mapflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fixed seed tags: every pipeline stage derives its stream from
// (config seed, tag), which keeps the splits disjoint and reruns identical.
namespace seedtag {
constexpr std::uint64_t kTrainScene = 1000;      // + scene index
constexpr std::uint64_t kEnhScene = 2000;        // + scene index
constexpr std::uint64_t kTestScene = 3000;       // + scene index
constexpr std::uint64_t kEnhProvider = 4000;     // + scene index
constexpr std::uint64_t kTestProvider = 4500;    // + scene index
constexpr std::uint64_t kCoarseInit = 10;
constexpr std::uint64_t kCoarseTrain = 11;       // + resume step
constexpr std::uint64_t kRnnInit = 21;
constexpr std::uint64_t kRnnTrain = 22;
constexpr std::uint64_t kEnhanceProvider = 30;
constexpr std::uint64_t kAgnosticInit = 62;
constexpr std::uint64_t kAgnosticTrain = 63;
} // namespace seedtag

const char* kSplits[3] = {"train", "enhancement", "test"};

Scene make_scene(const RunConfig& cfg, std::uint64_t tag) {
    Rng rng(Rng::derive_seed(cfg.seed, tag));
    Scene s = generate_scene(cfg.scenes.size, cfg.scenes.size, rng, cfg.scenes.style);
    s.noisy_ref = degrade_reference(s.truth, s.objects, cfg.degradation, rng);
    return s;
}

std::uint64_t split_tag(int split, int index) {
    const std::uint64_t base[3] = {seedtag::kTrainScene, seedtag::kEnhScene, seedtag::kTestScene};
    return base[split] + static_cast<std::uint64_t>(index);
}

int split_count(const RunConfig& cfg, int split) {
    const int counts[3] = {cfg.scenes.train_count, cfg.scenes.enhancement_count,
                           cfg.scenes.test_count};
    return counts[split];
}

std::string scene_stem(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%03d", index);
    return buf;
}

void write_scene(const fs::path& dir, int index, const RunConfig& cfg, std::uint64_t tag,
                 const Scene& s) {
    const std::string stem = scene_stem(index);
    write_ppm(dir / (stem + ".ppm"), s.image);
    write_pgm(dir / (stem + "_truth.pgm"), s.truth);
    write_pgm(dir / (stem + "_ref.pgm"), s.noisy_ref);
    json side;
    side["seed"] = cfg.seed;
    side["scene_tag"] = tag;
    side["degradation"] = {{"max_shift", cfg.degradation.max_shift},
                           {"omit_prob", cfg.degradation.omit_prob},
                           {"road_width_px", cfg.degradation.road_width_px}};
    side["size"] = cfg.scenes.size;
    std::ofstream f(dir / (stem + ".json"));
    if (!f) throw ConfigError("cannot write scene sidecar in " + dir.string());
    f << side.dump(2) << "\n";
}

ScoreStack provider_scores(const RunConfig& cfg, const Scene& scene, std::uint64_t tag,
                           const ParamStore* net, const CoarseNetConfig* net_cfg) {
    Rng rng(Rng::derive_seed(cfg.seed, tag));
    return coarse_provide(cfg.coarse_provider, scene, net, net_cfg, rng);
}

void write_loss_csv(const fs::path& path, const std::vector<std::pair<int, double>>& log,
                    std::int64_t offset, bool append) {
    std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
    if (!f) throw ConfigError("cannot write loss log: " + path.string());
    if (!append) f << "step,loss\n";
    char buf[64];
    for (const auto& [step, loss] : log) {
        std::snprintf(buf, sizeof buf, "%lld,%.6f\n",
                      static_cast<long long>(offset + step), loss);
        f << buf;
    }
}

// argmax color map: background dark gray, building red, road near-white
Tensor palette_image(const LabelMap& labels) {
    static constexpr float palette[3][3] = {
        {0.18f, 0.18f, 0.18f}, {0.78f, 0.27f, 0.24f}, {0.92f, 0.92f, 0.92f}};
    Tensor img({labels.height, labels.width, 3});
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x) {
            const int c = std::min<int>(labels.at(y, x), 2);
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = palette[c][ch];
        }
    return img;
}

void dump_iteration(const fs::path& dir, int t, const ScoreStack& u) {
    write_tsr(dir / ("scores_t" + std::to_string(t) + ".tsr"), u.scores);
    write_ppm(dir / ("argmax_t" + std::to_string(t) + ".ppm"),
              palette_image(argmax_labels(u.scores)));
    const Tensor probs = softmax_channels(u.scores);
    for (int c = 0; c < u.classes(); ++c)
        write_pgm_gray(dir / ("heat_c" + std::to_string(c) + "_t" + std::to_string(t) + ".pgm"),
                       slice_channel(probs, c));
}

EnhancerConfig checkpoint_enhancer_config(const RunConfig& cfg, bool class_agnostic,
                                          bool unshared) {
    EnhancerConfig e = cfg.enhancer;
    e.class_agnostic = class_agnostic;
    e.unshared = unshared;
    return e;
}

std::string rnn_ckpt_name(const EnhancerConfig& e) {
    if (e.unshared) return "rnn_unshared_ckpt";
    if (e.class_agnostic) return "rnn_agnostic_ckpt";
    return "rnn_ckpt";
}

std::vector<EnhancementScene> build_enhancement_set(const RunConfig& cfg,
                                                    const std::vector<Scene>& scenes,
                                                    std::uint64_t provider_tag,
                                                    const ParamStore* net,
                                                    const CoarseNetConfig* net_cfg) {
    std::vector<EnhancementScene> out;
    out.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        EnhancementScene e;
        e.image = scenes[i].image;
        e.coarse = provider_scores(cfg, scenes[i], provider_tag + i, net, net_cfg);
        e.truth = scenes[i].truth;
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace

void cmd_synth(const RunConfig& cfg) {
    const fs::path root = fs::path(cfg.output_dir) / "dataset";
    for (int split = 0; split < 3; ++split) {
        const fs::path dir = root / kSplits[split];
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory " + dir.string());
        for (int i = 0; i < split_count(cfg, split); ++i) {
            const std::uint64_t tag = split_tag(split, i);
            write_scene(dir, i, cfg, tag, make_scene(cfg, tag));
        }
    }
}

Dataset load_dataset(const fs::path& dir) {
    Dataset ds;
    std::vector<Scene>* splits[3] = {&ds.train, &ds.enhancement, &ds.test};
    for (int split = 0; split < 3; ++split) {
        const fs::path sub = dir / kSplits[split];
        if (!fs::exists(sub)) throw ConfigError("missing dataset split: " + sub.string());
        for (int i = 0;; ++i) {
            const std::string stem = scene_stem(i);
            if (!fs::exists(sub / (stem + ".ppm"))) break;
            Scene s;
            s.image = read_ppm(sub / (stem + ".ppm"));
            s.truth = read_pgm_labels(sub / (stem + "_truth.pgm"));
            s.noisy_ref = read_pgm_labels(sub / (stem + "_ref.pgm"));
            splits[split]->push_back(std::move(s));
        }
        if (splits[split]->empty())
            throw ConfigError("dataset split has no scenes: " + sub.string());
    }
    return ds;
}

void cmd_train_coarse(const RunConfig& cfg, bool resume) {
    const fs::path out(cfg.output_dir);
    const Dataset ds = load_dataset(out / "dataset");

    CoarseNetConfig net_cfg;
    ParamStore ps;
    Rng init_rng(Rng::derive_seed(cfg.seed, seedtag::kCoarseInit));
    register_coarse_params(ps, net_cfg, init_rng);
    const fs::path ckpt = out / "coarse_ckpt";
    if (resume) {
        if (!fs::exists(ckpt / "manifest.json"))
            throw ConfigError("cannot resume: no checkpoint at " + ckpt.string());
        load_checkpoint(ckpt, ps);
    }

    const std::int64_t done = ps.step();
    CoarseTrainConfig train = cfg.coarse_training;
    train.steps = static_cast<int>(std::max<std::int64_t>(0, train.steps - done));
    // two-level derivation keeps resume streams clear of the other stage tags
    Rng rng(Rng::derive_seed(Rng::derive_seed(cfg.seed, seedtag::kCoarseTrain),
                             static_cast<std::uint64_t>(done)));
    TrainLog log;
    train_coarse(ps, net_cfg, ds.train, train, rng, &log);

    save_checkpoint(ckpt, ps);
    write_loss_csv(out / "coarse_loss.csv", log.loss, done, resume);
}

void cmd_train_rnn(const RunConfig& cfg) {
    const fs::path out(cfg.output_dir);
    const Dataset ds = load_dataset(out / "dataset");

    ParamStore net;
    CoarseNetConfig net_cfg;
    const bool network = cfg.coarse_provider.kind == CoarseProviderConfig::Kind::Network;
    if (network) {
        Rng init_rng(Rng::derive_seed(cfg.seed, seedtag::kCoarseInit));
        register_coarse_params(net, net_cfg, init_rng);
        load_checkpoint(out / "coarse_ckpt", net);
    }

    const std::vector<EnhancementScene> set = build_enhancement_set(
        cfg, ds.enhancement, seedtag::kEnhProvider, network ? &net : nullptr,
        network ? &net_cfg : nullptr);

    ParamStore ps;
    Rng init_rng(Rng::derive_seed(cfg.seed, seedtag::kRnnInit));
    register_enhancer_params(ps, cfg.enhancer, init_rng);
    Rng rng(Rng::derive_seed(cfg.seed, seedtag::kRnnTrain));
    EnhancerTrainLog log;
    train_enhancer(ps, cfg.enhancer, set, cfg.enhancer_training, rng, &log);

    save_checkpoint(out / rnn_ckpt_name(cfg.enhancer), ps);
    write_loss_csv(out / "rnn_loss.csv", log.loss, 0, false);
}

void cmd_enhance(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& image_path,
                 const fs::path& scores_path, const fs::path& labels_path,
                 const fs::path& out_dir) {
    const Tensor image = read_ppm(image_path);
    ScoreStack u0;
    if (!scores_path.empty()) {
        u0 = ScoreStack(read_tsr(scores_path));
    } else if (!labels_path.empty()) {
        Rng rng(Rng::derive_seed(cfg.seed, seedtag::kEnhanceProvider));
        u0 = degrade_to_coarse(read_pgm_labels(labels_path), cfg.coarse_provider, rng);
    } else {
        throw ConfigError("enhance: provide --scores or --labels");
    }
    if (u0.height() != image.extent(0) || u0.width() != image.extent(1))
        throw ConfigError("enhance: image and score shapes differ");

    ParamStore ps;
    Rng init_rng(Rng::derive_seed(cfg.seed, seedtag::kRnnInit));
    register_enhancer_params(ps, cfg.enhancer, init_rng);
    load_checkpoint(checkpoint, ps);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir.string());
    std::vector<ScoreStack> trajectory;
    enhance(u0, image, ps, cfg.enhancer, &trajectory);
    for (std::size_t t = 0; t < trajectory.size(); ++t)
        dump_iteration(out_dir, static_cast<int>(t), trajectory[t]);
}

void cmd_baseline(const RunConfig& cfg, const fs::path& image_path, const fs::path& scores_path,
                  const fs::path& labels_path, const fs::path& truth_path, const fs::path& out_dir,
                  bool snapshots) {
    const Tensor image = read_ppm(image_path);
    ScoreStack u0;
    if (!scores_path.empty()) {
        u0 = ScoreStack(read_tsr(scores_path));
    } else if (!labels_path.empty()) {
        Rng rng(Rng::derive_seed(cfg.seed, seedtag::kEnhanceProvider));
        u0 = degrade_to_coarse(read_pgm_labels(labels_path), cfg.coarse_provider, rng);
    } else {
        throw ConfigError("baseline: provide --scores or --labels");
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir.string());

    EvolutionConfig evo{cfg.baseline.dt, cfg.baseline.steps, cfg.baseline.scheme};
    std::function<void(int, const ScoreStack&)> snap;
    if (snapshots)
        snap = [&](int step, const ScoreStack& u) {
            const Tensor probs = softmax_channels(u.scores);
            for (int c = 0; c < u.classes(); ++c)
                write_pgm_gray(out_dir / ("heat_c" + std::to_string(c) + "_s" +
                                          std::to_string(step) + ".pgm"),
                               slice_channel(probs, c));
        };
    const ScoreStack result = evolve(u0, image, evo, cfg.baseline.edge, snap);

    const LabelMap truth = read_pgm_labels(truth_path);
    std::vector<MetricsRow> rows;
    rows.push_back({scheme_name(cfg.baseline.scheme), cfg.baseline.steps,
                    evaluate(argmax_labels(result.scores), truth, kClasses)});
    write_metrics_csv(out_dir / "baseline_metrics.csv", rows);
}

MetricsReport cmd_eval(const fs::path& pred_path, const fs::path& truth_path, int classes,
                       const fs::path& out_csv, const std::string& run_id) {
    const LabelMap pred = read_pgm_labels(pred_path);
    const LabelMap truth = read_pgm_labels(truth_path);
    const MetricsReport r = evaluate(pred, truth, classes);
    if (!out_csv.empty()) write_metrics_csv(out_csv, {{run_id, 0, r}});
    return r;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& rows) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write metrics CSV: " + path.string());
    f << "run_id,iteration,overall_accuracy,iou_building,iou_road,iou_background,mean_iou\n";
    char buf[256];
    for (const MetricsRow& r : rows) {
        const double iou_b = r.report.classes > kBuilding ? r.report.iou_per_class[kBuilding] : 0.0;
        const double iou_r = r.report.classes > kRoad ? r.report.iou_per_class[kRoad] : 0.0;
        std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.run_id.c_str(),
                      r.iteration, r.report.overall_accuracy, iou_b, iou_r,
                      r.report.iou_per_class[kBackground], r.report.mean_iou);
        f << buf;
    }
}

void cmd_benchmark(const RunConfig& cfg) {
    const fs::path out(cfg.output_dir);
    cmd_synth(cfg);
    const Dataset ds = load_dataset(out / "dataset");

    ParamStore net;
    CoarseNetConfig net_cfg;
    const bool network = cfg.coarse_provider.kind == CoarseProviderConfig::Kind::Network;
    if (network) {
        Rng init_rng(Rng::derive_seed(cfg.seed, seedtag::kCoarseInit));
        register_coarse_params(net, net_cfg, init_rng);
        load_checkpoint(out / "coarse_ckpt", net);
    }
    const ParamStore* netp = network ? &net : nullptr;
    const CoarseNetConfig* netc = network ? &net_cfg : nullptr;

    const std::vector<EnhancementScene> enh_set =
        build_enhancement_set(cfg, ds.enhancement, seedtag::kEnhProvider, netp, netc);

    // per-class RNN
    const EnhancerConfig rnn_cfg = checkpoint_enhancer_config(cfg, false, false);
    ParamStore rnn;
    {
        Rng init_rng(Rng::derive_seed(cfg.seed, seedtag::kRnnInit));
        register_enhancer_params(rnn, rnn_cfg, init_rng);
        Rng rng(Rng::derive_seed(cfg.seed, seedtag::kRnnTrain));
        EnhancerTrainLog log;
        train_enhancer(rnn, rnn_cfg, enh_set, cfg.enhancer_training, rng, &log);
        save_checkpoint(out / rnn_ckpt_name(rnn_cfg), rnn);
        write_loss_csv(out / "rnn_loss.csv", log.loss, 0, false);
    }

    // class-agnostic ablation
    const EnhancerConfig agn_cfg = checkpoint_enhancer_config(cfg, true, false);
    ParamStore agn;
    {
        Rng init_rng(Rng::derive_seed(cfg.seed, seedtag::kAgnosticInit));
        register_enhancer_params(agn, agn_cfg, init_rng);
        Rng rng(Rng::derive_seed(cfg.seed, seedtag::kAgnosticTrain));
        EnhancerTrainLog log;
        train_enhancer(agn, agn_cfg, enh_set, cfg.enhancer_training, rng, &log);
        save_checkpoint(out / rnn_ckpt_name(agn_cfg), agn);
        write_loss_csv(out / "rnn_agnostic_loss.csv", log.loss, 0, false);
    }

    // evaluation on the test scene
    const Scene& test = ds.test.front();
    const ScoreStack coarse = provider_scores(cfg, test, seedtag::kTestProvider, netp, netc);

    std::vector<MetricsRow> rows;
    rows.push_back({"coarse", 0, evaluate(argmax_labels(coarse.scores), test.truth, kClasses)});

    for (const Scheme scheme : {Scheme::Heat, Scheme::PeronaMalik, Scheme::Gac}) {
        EvolutionConfig evo{cfg.baseline.dt, cfg.baseline.steps, scheme};
        const ScoreStack result = evolve(coarse, test.image, evo, cfg.baseline.edge);
        rows.push_back({scheme_name(scheme), cfg.baseline.steps,
                        evaluate(argmax_labels(result.scores), test.truth, kClasses)});
    }

    std::vector<ScoreStack> trajectory;
    enhance(coarse, test.image, rnn, rnn_cfg, &trajectory);
    const std::vector<MetricsReport> traj_reports = evaluate_trajectory(trajectory, test.truth);
    std::vector<MetricsRow> traj_rows;
    for (std::size_t t = 0; t < traj_reports.size(); ++t)
        traj_rows.push_back({"rnn", static_cast<int>(t), traj_reports[t]});
    write_metrics_csv(out / "trajectory.csv", traj_rows);
    rows.push_back({"rnn", rnn_cfg.iterations, traj_reports.back()});

    const ScoreStack agn_out = enhance(coarse, test.image, agn, agn_cfg);
    rows.push_back({"rnn_class_agnostic", agn_cfg.iterations,
                    evaluate(argmax_labels(agn_out.scores), test.truth, kClasses)});

    write_metrics_csv(out / "metrics.csv", rows);
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"mapflow: learned recurrent refinement of classification maps"};
    app.require_subcommand(1);

    std::string config_path;
    bool strict = false;

    auto add_config = [&](CLI::App* sub, bool required = true) {
        auto* opt = sub->add_option("-c,--config", config_path, "run configuration (JSON)");
        if (required) opt->required();
        sub->add_flag("--strict", strict,
                      "force sequential bit-exact execution (always on in this build)");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic dataset");
    add_config(synth);

    CLI::App* tcoarse = app.add_subcommand("train-coarse", "train the coarse classifier");
    bool resume = false;
    add_config(tcoarse);
    tcoarse->add_flag("--resume", resume, "continue from the saved checkpoint");

    CLI::App* trnn = app.add_subcommand("train-rnn", "train the recurrent enhancer");
    add_config(trnn);

    CLI::App* enh = app.add_subcommand("enhance", "run the enhancer and dump per-iteration maps");
    std::string ckpt, image, scores, labels, outdir, truth, pred, run_id = "eval", csv;
    int classes = kClasses;
    bool snapshots = false;
    add_config(enh);
    enh->add_option("--checkpoint", ckpt, "enhancer checkpoint directory")->required();
    enh->add_option("--image", image, "input image (PPM)")->required();
    enh->add_option("--scores", scores, "initial score stack (TSR)");
    enh->add_option("--labels", labels, "labels for the degrader provider (PGM)");
    enh->add_option("--out", outdir, "output directory")->required();

    CLI::App* base = app.add_subcommand("baseline", "run a hand-designed diffusion baseline");
    add_config(base);
    base->add_option("--image", image, "input image (PPM)")->required();
    base->add_option("--scores", scores, "initial score stack (TSR)");
    base->add_option("--labels", labels, "labels for the degrader provider (PGM)");
    base->add_option("--truth", truth, "reference labels (PGM)")->required();
    base->add_option("--out", outdir, "output directory")->required();
    base->add_flag("--snapshots", snapshots, "write per-iteration heat maps");

    CLI::App* ev = app.add_subcommand("eval", "compare a prediction against reference labels");
    ev->add_option("--pred", pred, "predicted labels (PGM)")->required();
    ev->add_option("--truth", truth, "reference labels (PGM)")->required();
    ev->add_option("--classes", classes, "class count");
    ev->add_option("--out", csv, "metrics CSV path");
    ev->add_option("--run-id", run_id, "row identifier");

    CLI::App* bench = app.add_subcommand("benchmark", "full synthetic comparison pipeline");
    add_config(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) cmd_synth(load_run_config(config_path));
        if (tcoarse->parsed()) cmd_train_coarse(load_run_config(config_path), resume);
        if (trnn->parsed()) cmd_train_rnn(load_run_config(config_path));
        if (enh->parsed()) cmd_enhance(load_run_config(config_path), ckpt, image, scores, labels, outdir);
        if (base->parsed())
            cmd_baseline(load_run_config(config_path), image, scores, labels, truth, outdir,
                         snapshots);
        if (ev->parsed()) {
            const MetricsReport r = cmd_eval(pred, truth, classes, csv, run_id);
            std::printf("accuracy %.6f mean_iou %.6f\n", r.overall_accuracy, r.mean_iou);
        }
        if (bench->parsed()) cmd_benchmark(load_run_config(config_path));
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace mapflow
