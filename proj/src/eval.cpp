#include "clbpface/eval.hpp"

#include "clbpface/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace clbpface {

namespace fs = std::filesystem;

std::string_view to_string(ProtocolKind kind) {
    return kind == ProtocolKind::first_d ? "first_d" : "random_split";
}

ProtocolKind parse_protocol(std::string_view name) {
    if (name == "first_d") return ProtocolKind::first_d;
    if (name == "random" || name == "random_split") return ProtocolKind::random_split;
    throw std::invalid_argument("unknown protocol '" + std::string(name) + "' (expected first_d or random)");
}

void Protocol::validate() const {
    if (d < 1) throw std::invalid_argument("protocol d must be >= 1");
    if (runs < 1) throw std::invalid_argument("protocol runs must be >= 1");
}

std::string_view to_string(ClassifierKind kind) { return kind == ClassifierKind::src ? "src" : "chi2_nn"; }

ClassifierKind parse_classifier(std::string_view name) {
    if (name == "src") return ClassifierKind::src;
    if (name == "chi2_nn" || name == "chi2") return ClassifierKind::chi2_nn;
    throw std::invalid_argument("unknown classifier '" + std::string(name) + "' (expected src or chi2_nn)");
}

// ---------------------------------------------------------------------------
// Splits

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const LabeledDataset& dataset, int d) {
    dataset.validate();
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.class_count));
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() <= static_cast<std::size_t>(d)) {
            throw std::invalid_argument("infeasible d=" + std::to_string(d) + ": class " + std::to_string(c) +
                                        " has only " + std::to_string(by_class[c].size()) + " images");
        }
    }
    return by_class;
}

void sort_split(Split& split) {
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
}

}  // namespace

Split split_first_d(const LabeledDataset& dataset, int d) {
    Split split;
    for (const auto& members : indices_by_class(dataset, d)) {
        const auto cut = members.begin() + d;
        split.train.insert(split.train.end(), members.begin(), cut);
        split.test.insert(split.test.end(), cut, members.end());
    }
    sort_split(split);
    return split;
}

Split split_random(const LabeledDataset& dataset, int d, int run_index, std::uint64_t seed) {
    Split split;
    auto by_class = indices_by_class(dataset, d);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        CounterRng rng(hash_words(seed, static_cast<std::uint64_t>(run_index), c));
        for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(members.size() - i));
            std::swap(members[i], members[j]);
        }
        const auto cut = members.begin() + d;
        split.train.insert(split.train.end(), members.begin(), cut);
        split.test.insert(split.test.end(), cut, members.end());
    }
    sort_split(split);
    return split;
}

// ---------------------------------------------------------------------------
// Config

void to_json(nlohmann::json& j, const PipelineConfig& config) {
    j = config.descriptor;
    j["classifier"] = std::string(to_string(config.classifier));
    j["lambda"] = config.solver.lambda;
    j["max_iter"] = config.solver.max_iter;
    j["tol"] = config.solver.tol;
}

void from_json(const nlohmann::json& j, PipelineConfig& config) {
    from_json(j, config.descriptor);
    if (j.contains("classifier")) config.classifier = parse_classifier(j.at("classifier").get<std::string>());
    if (j.contains("lambda")) config.solver.lambda = j.at("lambda").get<double>();
    if (j.contains("max_iter")) config.solver.max_iter = j.at("max_iter").get<int>();
    if (j.contains("tol")) config.solver.tol = j.at("tol").get<double>();
}

// ---------------------------------------------------------------------------
// Features and classification

namespace {

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

std::optional<FeatureSet> try_load_cache(const fs::path& path, const DescriptorConfig& config, std::size_t count) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        FeatureSet cached = read_feature_csv(in);
        if (config_hash(cached.config) != config_hash(config) || cached.vectors.size() != count) return std::nullopt;
        return cached;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

FeatureSet extract_features(const LabeledDataset& dataset, const DescriptorConfig& config,
                            const std::optional<fs::path>& cache, bool* loaded_from_cache) {
    dataset.validate();
    if (loaded_from_cache) *loaded_from_cache = false;
    if (cache) {
        if (auto cached = try_load_cache(*cache, config, dataset.size())) {
            if (cached->labels != dataset.labels) throw std::runtime_error("feature cache labels do not match dataset");
            if (loaded_from_cache) *loaded_from_cache = true;
            return std::move(*cached);
        }
    }

    FeatureSet fs;
    fs.config = config;
    fs.labels = dataset.labels;
    fs.vectors.resize(dataset.size());
    std::vector<FeatureLayout> layouts(dataset.size());
    parallel_for(dataset.size(), [&](std::size_t i) {
        FeatureVector fv = extract_feature(dataset.images[i], config);
        fs.vectors[i] = std::move(fv.values);
        layouts[i] = std::move(fv.layout);
    });
    if (!layouts.empty()) fs.layout = std::move(layouts.front());

    if (cache) {
        if (cache->has_parent_path()) fs::create_directories(cache->parent_path());
        std::ofstream out(*cache);
        if (!out) throw std::runtime_error("cannot write feature cache " + cache->string());
        write_feature_csv(out, fs);
    }
    return fs;
}

RunResult evaluate_split(const FeatureSet& features, const Split& split, const PipelineConfig& config) {
    if (split.train.empty() || split.test.empty()) throw std::invalid_argument("split needs train and test items");
    std::vector<std::vector<double>> gallery;
    std::vector<int> gallery_labels;
    for (std::size_t i : split.train) {
        gallery.push_back(features.vectors.at(i));
        gallery_labels.push_back(features.labels.at(i));
    }

    std::vector<int> predicted(split.test.size());
    if (config.classifier == ClassifierKind::src) {
        const Dictionary dict(gallery, gallery_labels);
        parallel_for(split.test.size(), [&](std::size_t k) {
            predicted[k] = src_classify(dict, features.vectors.at(split.test[k]), config.solver).predicted;
        });
    } else {
        parallel_for(split.test.size(), [&](std::size_t k) {
            predicted[k] = nn_classify(gallery, gallery_labels, features.vectors.at(split.test[k]));
        });
    }

    RunResult result;
    result.total = split.test.size();
    for (std::size_t k = 0; k < split.test.size(); ++k) {
        if (predicted[k] == features.labels[split.test[k]]) ++result.correct;
    }
    result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.total);
    return result;
}

std::vector<double> EvalReport::per_run_accuracy() const {
    std::vector<double> acc;
    for (const auto& r : runs) acc.push_back(r.accuracy);
    return acc;
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void summarize(EvalReport& report) {
    if (report.runs.empty()) throw std::invalid_argument("report has no runs");
    const auto acc = report.per_run_accuracy();
    report.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    report.std = sample_std(acc);
}

EvalReport run_protocol(const LabeledDataset& dataset, const Protocol& protocol, const PipelineConfig& config,
                        const std::optional<fs::path>& cache) {
    protocol.validate();
    const auto start = std::chrono::steady_clock::now();

    EvalReport report;
    report.protocol = protocol;
    report.config_echo = config;

    // fail on infeasible d before paying for feature extraction
    (void)split_first_d(dataset, protocol.d);

    const FeatureSet features = extract_features(dataset, config.descriptor, cache, &report.features_from_cache);
    report.timing.extract_seconds = seconds_since(start);

    const auto classify_start = std::chrono::steady_clock::now();
    const int runs = protocol.kind == ProtocolKind::first_d ? 1 : protocol.runs;
    for (int run = 0; run < runs; ++run) {
        const Split split = protocol.kind == ProtocolKind::first_d
                                ? split_first_d(dataset, protocol.d)
                                : split_random(dataset, protocol.d, run, protocol.seed);
        RunResult r = evaluate_split(features, split, config);
        r.run = run + 1;
        report.runs.push_back(r);
    }
    report.timing.classify_seconds = seconds_since(classify_start);
    report.timing.total_seconds = seconds_since(start);
    summarize(report);
    return report;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

// Fraction with at least one decimal place, e.g. "1.0", "0.975".
std::string format_fraction(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

double percent_2dp(double fraction) { return std::round(10000.0 * fraction) / 100.0; }

}  // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
    if (report.runs.empty()) throw std::invalid_argument("cannot emit a report with no runs");

    if (format == ReportFormat::csv) {
        std::ostringstream out;
        out << "run,accuracy,accuracy_pct,correct,total\n";
        for (const auto& r : report.runs) {
            out << r.run << ',' << format_fraction(r.accuracy) << ',' << format_percent(r.accuracy) << ',' << r.correct
                << ',' << r.total << '\n';
        }
        out << "mean," << format_fraction(report.mean) << ',' << format_percent(report.mean) << ",,\n";
        out << "std," << format_fraction(report.std) << ',' << format_percent(report.std) << ",,\n";
        return out.str();
    }

    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : report.runs) {
        runs.push_back({{"run", r.run}, {"accuracy", r.accuracy}, {"correct", r.correct}, {"total", r.total}});
    }
    const nlohmann::json j{
        {"protocol",
         {{"kind", std::string(to_string(report.protocol.kind))},
          {"d", report.protocol.d},
          {"runs", report.protocol.runs},
          {"seed", report.protocol.seed}}},
        {"config", report.config_echo},
        {"runs", runs},
        {"per_run_accuracy", report.per_run_accuracy()},
        {"mean", report.mean},
        {"std", report.std},
        {"mean_pct", percent_2dp(report.mean)},
        {"std_pct", percent_2dp(report.std)},
        {"features_from_cache", report.features_from_cache},
        {"timing",
         {{"extract_seconds", report.timing.extract_seconds},
          {"classify_seconds", report.timing.classify_seconds},
          {"total_seconds", report.timing.total_seconds}}},
    };
    return j.dump(2) + "\n";
}

EvalReport parse_report_json(std::string_view text) {
    const auto j = nlohmann::json::parse(text);
    EvalReport report;
    const auto& p = j.at("protocol");
    report.protocol.kind = parse_protocol(p.at("kind").get<std::string>());
    report.protocol.d = p.at("d").get<int>();
    report.protocol.runs = p.at("runs").get<int>();
    report.protocol.seed = p.at("seed").get<std::uint64_t>();
    report.config_echo = j.at("config");
    for (const auto& r : j.at("runs")) {
        report.runs.push_back(RunResult{r.at("run").get<int>(), r.at("correct").get<std::size_t>(),
                                        r.at("total").get<std::size_t>(), r.at("accuracy").get<double>()});
    }
    report.mean = j.at("mean").get<double>();
    report.std = j.at("std").get<double>();
    report.features_from_cache = j.value("features_from_cache", false);
    const auto& t = j.at("timing");
    report.timing = {t.at("extract_seconds").get<double>(), t.at("classify_seconds").get<double>(),
                     t.at("total_seconds").get<double>()};
    return report;
}

}  // namespace clbpface
