#pragma once

#include "clbpface/classifier.hpp"
#include "clbpface/dataset_io.hpp"
#include "clbpface/features.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clbpface {

enum class ProtocolKind { first_d, random_split };

std::string_view to_string(ProtocolKind kind);
/// Accepts "first_d", "random" and "random_split".
ProtocolKind parse_protocol(std::string_view name);

struct Protocol {
    ProtocolKind kind = ProtocolKind::first_d;
    int d = 5;              // training images per class
    int runs = 1;           // random_split only
    std::uint64_t seed = 42;  // random_split only

    void validate() const;
};

/// Dataset indices, each list ascending.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// First d images of every class (dataset order) train, the rest test.
Split split_first_d(const LabeledDataset& dataset, int d);

/// Per class, d training images drawn without replacement by a partial
/// Fisher-Yates shuffle of the class's indices (dataset order), driven by
/// CounterRng(hash_words(seed, run_index, class)).
Split split_random(const LabeledDataset& dataset, int d, int run_index, std::uint64_t seed);

enum class ClassifierKind { chi2_nn, src };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view name);

struct PipelineConfig {
    DescriptorConfig descriptor;
    ClassifierKind classifier = ClassifierKind::src;
    SolverParams solver;
};

void to_json(nlohmann::json& j, const PipelineConfig& config);
/// Missing keys keep their current values, so a partial file overlays defaults.
void from_json(const nlohmann::json& j, PipelineConfig& config);

/// Extracts one feature vector per image. With a cache path, a cache file
/// whose config hash and row count match is reused; otherwise features are
/// computed and the cache is (re)written.
FeatureSet extract_features(const LabeledDataset& dataset, const DescriptorConfig& config,
                            const std::optional<std::filesystem::path>& cache = std::nullopt,
                            bool* loaded_from_cache = nullptr);

struct RunResult {
    int run = 0;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0;
};

/// Trains on split.train and classifies every item of split.test.
RunResult evaluate_split(const FeatureSet& features, const Split& split, const PipelineConfig& config);

struct Timing {
    double extract_seconds = 0;
    double classify_seconds = 0;
    double total_seconds = 0;
};

struct EvalReport {
    Protocol protocol;
    std::vector<RunResult> runs;
    double mean = 0;
    double std = 0;  // sample standard deviation, 0 for a single run
    nlohmann::json config_echo;
    Timing timing;
    bool features_from_cache = false;

    std::vector<double> per_run_accuracy() const;
};

double sample_std(std::span<const double> values);

/// Fills mean and std from runs; throws if there are no runs.
void summarize(EvalReport& report);

EvalReport run_protocol(const LabeledDataset& dataset, const Protocol& protocol, const PipelineConfig& config,
                        const std::optional<std::filesystem::path>& cache = std::nullopt);

enum class ReportFormat { csv, json };

std::string emit_report(const EvalReport& report, ReportFormat format);
EvalReport parse_report_json(std::string_view text);

}  // namespace clbpface
