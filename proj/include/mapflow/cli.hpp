#pragma once

#include "mapflow/config.hpp"
#include "mapflow/metrics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mapflow {

// On-disk dataset produced by `synth`: PPM image + PGM truth/reference per
// scene plus a JSON sidecar with the seed and degradation spec.
struct Dataset {
    std::vector<Scene> train;
    std::vector<Scene> enhancement;
    std::vector<Scene> test;
};

void cmd_synth(const RunConfig& cfg);
Dataset load_dataset(const std::filesystem::path& dir);

void cmd_train_coarse(const RunConfig& cfg, bool resume);
void cmd_train_rnn(const RunConfig& cfg);

void cmd_enhance(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                 const std::filesystem::path& image_path, const std::filesystem::path& scores_path,
                 const std::filesystem::path& labels_path, const std::filesystem::path& out_dir);

void cmd_baseline(const RunConfig& cfg, const std::filesystem::path& image_path,
                  const std::filesystem::path& scores_path,
                  const std::filesystem::path& labels_path,
                  const std::filesystem::path& truth_path, const std::filesystem::path& out_dir,
                  bool snapshots);

MetricsReport cmd_eval(const std::filesystem::path& pred_path,
                       const std::filesystem::path& truth_path, int classes,
                       const std::filesystem::path& out_csv, const std::string& run_id);

void cmd_benchmark(const RunConfig& cfg);

// CSV row in the fixed metrics schema
// run_id,iteration,overall_accuracy,iou_building,iou_road,iou_background,mean_iou.
struct MetricsRow {
    std::string run_id;
    int iteration = 0;
    MetricsReport report;
};
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

// Exit codes: 0 success, 1 usage/config error, 2 runtime numeric failure.
int run_cli(int argc, const char* const* argv);

} // namespace mapflow
