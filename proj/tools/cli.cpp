#include "cli.hpp"

#include <thermocad/thermocad.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace thermocad::cli {
namespace {

namespace fs = std::filesystem;

struct ClassifierOptions {
    std::vector<std::string> names;
    double c = 1.0;
    std::string kernel = "poly";
    int degree = 1;
    double gamma = 0.01;
};

struct RunConfig {
    std::string images;
    std::string masks;
    std::string manifest;
    std::string features;
    std::string offset = "0,1";
    int levels = kDefaultLevels;
    ClassifierOptions classifier;
    int k = kDefaultFolds;
    std::uint64_t seed = kDefaultSeed;
    std::string out;
    std::string csv;
    bool with_paper_results = false;
    std::string image;
    std::string mask;
    std::string model;
};

void configure_logging()
{
    spdlog::drop("thermocad");
    auto logger = spdlog::stderr_logger_st("thermocad");
    logger->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("THERMOCAD_LOG"); env != nullptr && *env != '\0') {
        level = spdlog::level::from_str(env);
    }
    logger->set_level(level);
    spdlog::set_default_logger(logger);
}

Offset parse_offset(const std::string& text)
{
    const auto comma = text.find(',');
    int dx = 0;
    int dy = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    bool ok = comma != std::string::npos;
    if (ok) {
        const auto rx = std::from_chars(begin, begin + comma, dx);
        const auto ry = std::from_chars(begin + comma + 1, end, dy);
        ok = rx.ec == std::errc{} && rx.ptr == begin + comma && ry.ec == std::errc{} && ry.ptr == end;
    }
    if (!ok) {
        throw ConfigError("--offset expects two integers DX,DY, got '" + text + "'");
    }
    return Offset(dx, dy);
}

ClassifierSpec make_spec(const std::string& name, const ClassifierOptions& opts)
{
    if (name == "nb") {
        return NaiveBayesSpec{};
    }
    if (name != "smo") {
        throw ConfigError("unknown classifier '" + name + "' (expected smo or nb)");
    }
    SmoSpec spec;
    spec.c = opts.c;
    if (!(spec.c > 0.0)) {
        throw ConfigError("--c must be positive");
    }
    if (opts.kernel == "poly") {
        spec.kernel.kind = KernelKind::polynomial;
        spec.kernel.degree = opts.degree;
    } else if (opts.kernel == "rbf") {
        spec.kernel.kind = KernelKind::rbf;
        spec.kernel.gamma = opts.gamma;
    } else {
        throw ConfigError("unknown kernel '" + opts.kernel + "' (expected poly or rbf)");
    }
    spec.kernel.validate();
    return spec;
}

std::string lowercase(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

bool is_image_file(const fs::path& p)
{
    const auto ext = lowercase(p.extension().string());
    return ext == ".pgm" || ext == ".png";
}

void require_file(const std::string& path, const char* flag)
{
    if (path.empty()) {
        throw ConfigError(std::string(flag) + " is required");
    }
    if (!fs::is_regular_file(path)) {
        throw ConfigError(std::string(flag) + ": no such file '" + path + "'");
    }
}

void require_dir(const std::string& path, const char* flag)
{
    if (!fs::is_directory(path)) {
        throw ConfigError(std::string(flag) + ": no such directory '" + path + "'");
    }
}

// id -> image path, for every .pgm/.png file in `dir`.
std::map<std::string, fs::path> list_images(const fs::path& dir)
{
    std::map<std::string, fs::path> images;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_file(entry.path())) {
            continue;
        }
        const std::string id = entry.path().stem().string();
        if (!images.emplace(id, entry.path()).second) {
            throw ConfigError("two image files share the id '" + id + "' in " + dir.string());
        }
    }
    return images;
}

std::map<std::string, Label> read_manifest(const fs::path& path)
{
    const std::string text = detail::read_text_file(path);
    std::map<std::string, Label> labels;
    std::size_t pos = 0;
    std::size_t row = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) {
            eol = text.size();
        }
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::size_t this_row = row++;
        if (this_row == 0) {
            if (line != "id,label") {
                throw ConfigError(path.string() + ": manifest header must be 'id,label', found '" + line + "'");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 2 || cells[0].empty()) {
            throw ConfigError(path.string() + ": row " + std::to_string(this_row) + " must be 'id,label'");
        }
        try {
            if (!labels.emplace(cells[0], parse_label(cells[1])).second) {
                throw ConfigError(path.string() + ": duplicate manifest id '" + cells[0] + "'");
            }
        } catch (const FormatError& e) {
            throw ConfigError(path.string() + ": row " + std::to_string(this_row) + ": " + e.what());
        }
    }
    if (row == 0) {
        throw ConfigError(path.string() + ": empty manifest");
    }
    return labels;
}

std::optional<fs::path> find_mask(const fs::path& dir, const std::string& id)
{
    for (const char* ext : {".pgm", ".png", ".PGM", ".PNG"}) {
        fs::path candidate = dir / (id + ext);
        if (fs::is_regular_file(candidate)) {
            return candidate;
        }
    }
    return std::nullopt;
}

void write_output(const std::string& path, const std::string& text)
{
    detail::write_text_file(path, text);
    spdlog::info("wrote {}", path);
}

Dataset load_dataset(const std::string& path)
{
    require_file(path, "--features");
    const FeatureTable table = read_features(path);
    return Dataset::from_features(table.rows);
}

void check_eval_preconditions(const Dataset& ds, int k)
{
    if (ds.count(Label::normal) < 2 || ds.count(Label::finding) < 2) {
        throw ConfigError("evaluation needs at least 2 samples per class (" + std::to_string(ds.count(Label::normal)) +
                          " normal, " + std::to_string(ds.count(Label::finding)) + " finding)");
    }
    if (k < 2 || static_cast<std::size_t>(k) > ds.size()) {
        throw ConfigError("--k must be in [2, " + std::to_string(ds.size()) + "], got " + std::to_string(k));
    }
}

std::string dump(const nlohmann::json& doc)
{
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

int cmd_extract(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    require_dir(cfg.images, "--images");
    require_file(cfg.manifest, "--manifest");
    if (!cfg.masks.empty()) {
        require_dir(cfg.masks, "--masks");
    }
    if (cfg.out.empty()) {
        throw ConfigError("--out is required");
    }
    if (cfg.levels < 2 || cfg.levels > 256) {
        throw ConfigError("--levels must be in [2, 256]");
    }
    const Offset offset = parse_offset(cfg.offset);
    const auto labels = read_manifest(cfg.manifest);
    const auto images = list_images(cfg.images);
    if (images.empty()) {
        throw ConfigError("--images: no .pgm or .png files in '" + cfg.images + "'");
    }
    for (const auto& [id, label] : labels) {
        if (images.find(id) == images.end()) {
            spdlog::warn("manifest id '{}' has no image", id);
        }
    }

    std::vector<std::pair<std::string, fs::path>> jobs(images.begin(), images.end());
    std::vector<std::variant<FeatureVector, std::string>> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const auto& [id, path] = jobs[i];
        try {
            const auto label = labels.find(id);
            if (label == labels.end()) {
                results[i] = std::string("no label in manifest");
                return;
            }
            GrayImage image = load_image(path, cfg.levels);
            if (!cfg.masks.empty()) {
                const auto mask = find_mask(cfg.masks, id);
                if (!mask) {
                    results[i] = std::string("no mask in '" + cfg.masks + "'");
                    return;
                }
                image = load_mask(*mask, image);
            }
            results[i] = extract_features(image, offset, id, label->second);
            spdlog::debug("extracted {}", id);
        } catch (const Error& e) {
            results[i] = std::string(e.what());
        }
    });

    FeatureTable table;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (const auto* fv = std::get_if<FeatureVector>(&results[i])) {
            table.rows.push_back(*fv);
        } else {
            failures.push_back(jobs[i].first + ": " + std::get<std::string>(results[i]));
        }
    }
    write_output(cfg.out, features_to_csv(table));
    out << "extracted " << table.rows.size() << " of " << jobs.size() << " images -> " << cfg.out << "\n";
    if (!failures.empty()) {
        err << failures.size() << " image(s) skipped:\n";
        for (const auto& f : failures) {
            err << "  " << f << "\n";
        }
        return kExitPartial;
    }
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.classifier.names.size() != 1) {
        throw ConfigError("eval takes exactly one --classifier");
    }
    const ClassifierSpec spec = make_spec(cfg.classifier.names.front(), cfg.classifier);
    const Dataset ds = load_dataset(cfg.features);
    check_eval_preconditions(ds, cfg.k);
    const EvalReport report = cross_validate(ds, cfg.k, cfg.seed, spec);
    if (!cfg.out.empty()) {
        write_output(cfg.out, dump(to_json(report)));
    }
    if (!cfg.csv.empty()) {
        write_output(cfg.csv, report_to_csv_row(report.classifier, report));
    }
    const std::pair<std::string, EvalReport> row{report.classifier, report};
    out << render_comparison(std::span(&row, 1), false).text;
    return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.classifier.names.empty()) {
        throw ConfigError("compare needs at least one --classifier");
    }
    std::vector<ClassifierSpec> specs;
    for (const auto& name : cfg.classifier.names) {
        specs.push_back(make_spec(name, cfg.classifier));
    }
    const Dataset ds = load_dataset(cfg.features);
    check_eval_preconditions(ds, cfg.k);
    std::vector<std::pair<std::string, EvalReport>> rows;
    for (const auto& spec : specs) {
        EvalReport report = cross_validate(ds, cfg.k, cfg.seed, spec);
        rows.emplace_back(report.classifier, std::move(report));
    }
    const Comparison table = render_comparison(rows, cfg.with_paper_results);
    if (!cfg.out.empty()) {
        nlohmann::json reports = nlohmann::json::array();
        for (const auto& [name, report] : rows) {
            reports.push_back(to_json(report));
        }
        write_output(cfg.out, dump({{"format", "thermocad-comparison"},
                                    {"version", 1},
                                    {"rows", table.json},
                                    {"reports", reports}}));
    }
    out << table.text;
    return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.classifier.names.size() != 1) {
        throw ConfigError("train takes exactly one --classifier");
    }
    if (cfg.out.empty()) {
        throw ConfigError("--out is required");
    }
    const ClassifierSpec spec = make_spec(cfg.classifier.names.front(), cfg.classifier);
    const Dataset ds = load_dataset(cfg.features);
    const TrainedModel model = train(spec, ds.samples(), cfg.seed);
    write_output(cfg.out, dump(to_json(model)));
    out << "trained " << classifier_name(spec) << " on " << ds.size() << " samples -> " << cfg.out << "\n";
    return kExitOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out)
{
    require_file(cfg.image, "--image");
    require_file(cfg.model, "--model");
    if (!cfg.mask.empty()) {
        require_file(cfg.mask, "--mask");
    }
    TrainedModel model;
    try {
        model = model_from_json(nlohmann::json::parse(detail::read_text_file(cfg.model)));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(cfg.model + ": " + e.what());
    }
    GrayImage image = load_image(cfg.image, cfg.levels);
    if (!cfg.mask.empty()) {
        image = load_mask(cfg.mask, image);
    }
    const std::string id = fs::path(cfg.image).stem().string();
    const FeatureVector fv = extract_features(image, parse_offset(cfg.offset), id, Label::normal);
    const auto values = fv.values();
    const Prediction p = predict(model, values);
    out << id << "\t" << to_string(p.label) << "\t" << format_double(p.score) << "\n";
    return kExitOk;
}

void add_classifier_flags(CLI::App* cmd, RunConfig& cfg, bool repeatable)
{
    auto* opt = cmd->add_option("--classifier", cfg.classifier.names, "Classifier: smo or nb")
                    ->check(CLI::IsMember({"smo", "nb"}));
    if (repeatable) {
        opt->delimiter(',');
    } else {
        opt->expected(1);
    }
    cmd->add_option("--c", cfg.classifier.c, "SMO box constraint C")->capture_default_str();
    cmd->add_option("--kernel", cfg.classifier.kernel, "SMO kernel: poly or rbf")->capture_default_str();
    cmd->add_option("--degree", cfg.classifier.degree, "Polynomial kernel exponent")->capture_default_str();
    cmd->add_option("--gamma", cfg.classifier.gamma, "RBF kernel gamma")->capture_default_str();
}

void add_feature_flags(CLI::App* cmd, RunConfig& cfg)
{
    cmd->add_option("--offset", cfg.offset, "Co-occurrence offset DX,DY")->capture_default_str();
    cmd->add_option("--levels", cfg.levels, "Gray levels after quantization (2-256)")->capture_default_str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    configure_logging();
    RunConfig cfg;
    CLI::App app{"Texture-feature classification of breast thermograms.\n"
                 "Masks: pixel value 0 is outside the region of interest, any nonzero value inside.",
                 "thermocad"};
    app.require_subcommand(1);

    auto* extract = app.add_subcommand("extract", "Extract texture features from a directory of images");
    extract->add_option("--images", cfg.images, "Directory of .pgm/.png images (id = file stem)")->required();
    extract->add_option("--masks", cfg.masks, "Directory of ROI masks named like the images");
    extract->add_option("--manifest", cfg.manifest, "CSV with header id,label (label: normal|finding)")->required();
    extract->add_option("--out", cfg.out, "Output feature CSV")->required();
    add_feature_flags(extract, cfg);

    auto* eval = app.add_subcommand("eval", "Stratified k-fold cross-validation of one classifier");
    eval->add_option("--features", cfg.features, "Feature CSV")->required();
    add_classifier_flags(eval, cfg, false);
    eval->add_option("--k", cfg.k, "Folds (k = sample count is leave-one-out)")->capture_default_str();
    eval->add_option("--seed", cfg.seed, "Fold shuffling seed")->capture_default_str();
    eval->add_option("--out", cfg.out, "Evaluation report JSON");
    eval->add_option("--csv", cfg.csv, "One-row CSV with the table columns");

    auto* compare = app.add_subcommand("compare", "Cross-validate several classifiers and tabulate them");
    compare->add_option("--features", cfg.features, "Feature CSV")->required();
    add_classifier_flags(compare, cfg, true);
    compare->add_option("--k", cfg.k, "Folds")->capture_default_str();
    compare->add_option("--seed", cfg.seed, "Fold shuffling seed")->capture_default_str();
    compare->add_option("--out", cfg.out, "Comparison JSON");
    compare->add_flag("--with-paper-results", cfg.with_paper_results, "Append the published reference rows");

    auto* train_cmd = app.add_subcommand("train", "Train a classifier on a feature CSV and save the model");
    train_cmd->add_option("--features", cfg.features, "Feature CSV")->required();
    add_classifier_flags(train_cmd, cfg, false);
    train_cmd->add_option("--seed", cfg.seed, "Seed")->capture_default_str();
    train_cmd->add_option("--out", cfg.out, "Model JSON")->required();

    auto* predict_cmd = app.add_subcommand("predict", "Classify one image with a saved model");
    predict_cmd->add_option("--image", cfg.image, "Image file")->required();
    predict_cmd->add_option("--mask", cfg.mask, "ROI mask file");
    predict_cmd->add_option("--model", cfg.model, "Model JSON")->required();
    add_feature_flags(predict_cmd, cfg);

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    if (!compare->parsed() && cfg.classifier.names.empty()) {
        cfg.classifier.names.emplace_back("smo");
    }

    try {
        if (extract->parsed()) {
            return cmd_extract(cfg, out, err);
        }
        if (eval->parsed()) {
            return cmd_eval(cfg, out);
        }
        if (compare->parsed()) {
            return cmd_compare(cfg, out);
        }
        if (train_cmd->parsed()) {
            return cmd_train(cfg, out);
        }
        return cmd_predict(cfg, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

} // namespace thermocad::cli
