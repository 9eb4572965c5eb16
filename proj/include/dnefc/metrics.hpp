#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dnefc/trainer.hpp"

namespace dnefc {

inline constexpr const char* kMetricsHeader = "generation,best_child,mean_child,worst_child,parent_train_acc,test_acc";

/// Shortest decimal that round-trips the double.
std::string format_number(double v);
std::string format_metrics_row(const GenerationStats& s);
GenerationStats parse_metrics_row(const std::string& line);

/// Append-only metrics.csv. Each row is written and flushed as one unit so
/// the file stays parseable if the process dies between generations.
class MetricsWriter {
public:
    /// Starts a fresh file with just the header.
    static MetricsWriter create(const std::filesystem::path& path);
    /// Keeps the header and complete rows with generation <= last_generation,
    /// dropping anything later (rows past the checkpoint or a torn final line).
    static MetricsWriter resume(const std::filesystem::path& path, std::size_t last_generation);

    void append(const GenerationStats& s);

private:
    explicit MetricsWriter(const std::filesystem::path& path);
    std::ofstream out_;
    std::filesystem::path path_;
};

std::vector<GenerationStats> read_metrics(const std::filesystem::path& path);

/// Best (red), mean (blue) and worst (green) child training accuracy per
/// generation, plus the parent in grey.
void write_training_plot(const std::vector<GenerationStats>& stats, const std::filesystem::path& path);
/// Parent test-set accuracy per generation.
void write_test_plot(const std::vector<GenerationStats>& stats, const std::filesystem::path& path);

} // namespace dnefc
