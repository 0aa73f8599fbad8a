#pragma once

#include <filesystem>
#include <string>

#include "cardio/metrics.hpp"
#include "cardio/pipeline.hpp"

namespace cardio::report {

void write_metrics_json(const metrics::MetricReport& report, const std::filesystem::path& path);
void write_metrics_csv(const metrics::MetricReport& report, const std::filesystem::path& path);

metrics::MetricReport load_metrics_json(const std::filesystem::path& path);

std::string format_table(const metrics::MetricReport& report);

// Probability polyline, predicted label steps and ground-truth steps with EDF
// markers, one SVG per sequence.
void write_probability_plot(const pipeline::PredictionTrace& trace,
                            const pipeline::GroundTruth& truth,
                            const std::filesystem::path& path);

} // namespace cardio::report
