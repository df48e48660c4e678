// clbpface: extract CLBP_S_M / LBP pyramid features, evaluate ORL protocols,
// and classify single probes against a cached gallery.

#include "clbpface/classifier.hpp"
#include "clbpface/dataset_io.hpp"
#include "clbpface/eval.hpp"
#include "clbpface/features.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace clbpface;

// Flags common to the subcommands. Each flag overrides the config file only
// when it was given on the command line.
struct Flags {
    std::string config_file;
    std::string data;
    std::string synth;
    std::string descriptor;
    int p = 0;
    double r = 0;
    std::string mapping;
    std::string grid;
    bool include_c = false;
    std::string classifier;
    double lambda = 0;
    int max_iter = 0;
    double tol = 0;

    CLI::Option* o_data = nullptr;
    CLI::Option* o_synth = nullptr;
    CLI::Option* o_descriptor = nullptr;
    CLI::Option* o_p = nullptr;
    CLI::Option* o_r = nullptr;
    CLI::Option* o_mapping = nullptr;
    CLI::Option* o_grid = nullptr;
    CLI::Option* o_include_c = nullptr;
    CLI::Option* o_classifier = nullptr;
    CLI::Option* o_lambda = nullptr;
    CLI::Option* o_max_iter = nullptr;
    CLI::Option* o_tol = nullptr;
};

void add_config_flag(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_file, "JSON file mirroring the flags; flags win")->check(CLI::ExistingFile);
}

void add_data_flags(CLI::App* cmd, Flags& f) {
    f.o_data = cmd->add_option("--data", f.data, "ORL root directory (s1..s40/1..10.pgm)");
    f.o_synth = cmd->add_option("--synth", f.synth, "synthetic dataset CLASSES,PER_CLASS,SIDE,SEED instead of --data");
}

void add_descriptor_flags(CLI::App* cmd, Flags& f) {
    f.o_descriptor = cmd->add_option("--descriptor", f.descriptor, "clbp_s_m | lbp");
    f.o_p = cmd->add_option("--p", f.p, "neighbor count P");
    f.o_r = cmd->add_option("--r", f.r, "radius R");
    f.o_mapping = cmd->add_option("--mapping", f.mapping, "raw | u2 | riu2");
    f.o_grid = cmd->add_option("--grid", f.grid, "pyramid levels, e.g. 1x1,2x2,4x4");
    f.o_include_c = cmd->add_flag("--include-c", f.include_c, "append CLBP_C histograms");
}

void add_classifier_flags(CLI::App* cmd, Flags& f) {
    f.o_classifier = cmd->add_option("--classifier", f.classifier, "src | chi2_nn");
    f.o_lambda = cmd->add_option("--lambda", f.lambda, "l1 weight of the SRC solver");
    f.o_max_iter = cmd->add_option("--max-iter", f.max_iter, "SRC solver iteration cap");
    f.o_tol = cmd->add_option("--tol", f.tol, "SRC solver relative objective tolerance");
}

nlohmann::json read_config_file(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return nlohmann::json::parse(in);
}

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

PipelineConfig resolve_pipeline(const Flags& f, const nlohmann::json& file) {
    PipelineConfig config;
    from_json(file, config);
    if (given(f.o_descriptor)) config.descriptor.kind = parse_descriptor(f.descriptor);
    if (given(f.o_p)) config.descriptor.spec.points = f.p;
    if (given(f.o_r)) config.descriptor.spec.radius = f.r;
    if (given(f.o_mapping)) config.descriptor.spec.mapping = parse_mapping(f.mapping);
    if (given(f.o_grid)) config.descriptor.grid = GridSpec::parse(f.grid);
    if (given(f.o_include_c)) config.descriptor.include_c = f.include_c;
    if (given(f.o_classifier)) config.classifier = parse_classifier(f.classifier);
    if (given(f.o_lambda)) config.solver.lambda = f.lambda;
    if (given(f.o_max_iter)) config.solver.max_iter = f.max_iter;
    if (given(f.o_tol)) config.solver.tol = f.tol;
    config.descriptor.spec.validate();
    config.descriptor.grid.validate();
    return config;
}

LabeledDataset resolve_dataset(const Flags& f, const nlohmann::json& file) {
    std::string data = file.value("data", std::string());
    std::string synth = file.value("synth", std::string());
    if (given(f.o_data)) data = f.data, synth.clear();
    if (given(f.o_synth)) synth = f.synth, data.clear();
    if (!synth.empty()) {
        std::istringstream in(synth);
        long long v[4] = {0, 0, 0, 0};
        char sep = 0;
        if (!(in >> v[0] >> sep >> v[1] >> sep >> v[2] >> sep >> v[3])) {
            throw std::invalid_argument("--synth expects CLASSES,PER_CLASS,SIDE,SEED");
        }
        return synth_dataset(static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                             static_cast<std::uint64_t>(v[3]));
    }
    if (data.empty()) throw std::invalid_argument("no dataset: pass --data <orl root> or --synth");
    return load_orl(data, &std::cerr);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CLBP_S_M pyramid descriptors with sparse representation classification"};
    app.require_subcommand(1);

    // one set per subcommand so option handles are not overwritten
    Flags extract_flags, evaluate_flags, classify_flags;

    auto* extract = app.add_subcommand("extract", "extract feature vectors to CSV");
    std::string out_path;
    add_config_flag(extract, extract_flags);
    add_data_flags(extract, extract_flags);
    add_descriptor_flags(extract, extract_flags);
    extract->add_option("--out", out_path, "output feature CSV")->required();

    auto* evaluate = app.add_subcommand("evaluate", "run a first_d or random-split protocol");
    std::string protocol_name = "first_d";
    int d = 5;
    int runs = 10;
    std::uint64_t seed = 42;
    std::string report_path;
    std::string format_name;
    std::string cache_path;
    add_config_flag(evaluate, evaluate_flags);
    add_data_flags(evaluate, evaluate_flags);
    add_descriptor_flags(evaluate, evaluate_flags);
    add_classifier_flags(evaluate, evaluate_flags);
    auto* o_protocol = evaluate->add_option("--protocol", protocol_name, "first_d | random");
    auto* o_d = evaluate->add_option("--d", d, "training images per subject");
    auto* o_runs = evaluate->add_option("--runs", runs, "random protocol repetitions");
    auto* o_seed = evaluate->add_option("--seed", seed, "random protocol seed");
    evaluate->add_option("--report", report_path, "write the report here (.json or .csv)");
    evaluate->add_option("--format", format_name, "json | csv (default: from --report extension, else json)");
    evaluate->add_option("--cache", cache_path, "feature cache CSV, reused when the descriptor config matches");

    auto* classify = app.add_subcommand("classify", "classify one PGM probe against a feature CSV gallery");
    std::string gallery_path;
    std::string probe_path;
    add_config_flag(classify, classify_flags);
    add_classifier_flags(classify, classify_flags);
    classify->add_option("--gallery", gallery_path, "feature CSV from `extract`")->required()->check(CLI::ExistingFile);
    classify->add_option("--probe", probe_path, "probe image (binary PGM)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) {
            const Flags& flags = extract_flags;
            const auto file = read_config_file(flags.config_file);
            const auto config = resolve_pipeline(flags, file);
            const auto dataset = resolve_dataset(flags, file);
            const auto features = extract_features(dataset, config.descriptor);
            std::ofstream out(out_path);
            if (!out) throw std::runtime_error("cannot write " + out_path);
            write_feature_csv(out, features);
            std::cerr << "wrote " << features.vectors.size() << " vectors of dimension " << config.descriptor.dimension()
                      << " to " << out_path << "\n";
            return 0;
        }

        if (*evaluate) {
            const Flags& flags = evaluate_flags;
            const auto file = read_config_file(flags.config_file);
            const auto config = resolve_pipeline(flags, file);
            const auto dataset = resolve_dataset(flags, file);
            Protocol protocol;
            protocol.kind = parse_protocol(given(o_protocol) ? protocol_name : file.value("protocol", protocol_name));
            protocol.d = given(o_d) ? d : file.value("d", d);
            protocol.runs = given(o_runs) ? runs : file.value("runs", runs);
            protocol.seed = given(o_seed) ? seed : file.value("seed", seed);
            if (protocol.kind == ProtocolKind::first_d) protocol.runs = 1;

            std::optional<std::filesystem::path> cache;
            if (!cache_path.empty()) cache = cache_path;
            const auto report = run_protocol(dataset, protocol, config, cache);

            ReportFormat format = ReportFormat::json;
            if (!format_name.empty()) {
                if (format_name == "csv") format = ReportFormat::csv;
                else if (format_name != "json") throw std::invalid_argument("--format must be json or csv");
            } else if (report_path.ends_with(".csv")) {
                format = ReportFormat::csv;
            }
            const auto text = emit_report(report, format);
            if (report_path.empty()) std::cout << text;
            else write_text(report_path, text);
            std::cerr << to_string(protocol.kind) << " d=" << protocol.d << ": mean accuracy "
                      << 100.0 * report.mean << "% (std " << 100.0 * report.std << "%, " << report.runs.size()
                      << " run(s))\n";
            return 0;
        }

        if (*classify) {
            const Flags& flags = classify_flags;
            const auto file = read_config_file(flags.config_file);
            std::ifstream in(gallery_path);
            const auto gallery = read_feature_csv(in);
            auto config = resolve_pipeline(flags, file);
            config.descriptor = gallery.config;
            const auto probe = extract_feature(load_pgm_file(probe_path), gallery.config);

            nlohmann::json out;
            if (config.classifier == ClassifierKind::src) {
                const Dictionary dict(gallery.vectors, gallery.labels);
                const auto result = src_classify(dict, probe.values, config.solver);
                out = {{"predicted", result.predicted},
                       {"classes", dict.classes()},
                       {"residuals", result.residuals},
                       {"iterations", result.solution.iterations},
                       {"converged", result.solution.converged}};
            } else {
                out = {{"predicted", nn_classify(gallery.vectors, gallery.labels, probe.values)}};
            }
            std::cout << out.dump() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
