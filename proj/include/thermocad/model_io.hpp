#pragma once

// Versioned JSON documents for trained models.
//
//   {"format": "thermocad-model", "version": 1, "type": "smo" | "naive_bayes", ...}

#include <thermocad/classify.hpp>
#include <thermocad/error.hpp>

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace thermocad {

inline constexpr int kModelFormatVersion = 1;

[[nodiscard]] inline nlohmann::json to_json(const KernelConfig& k)
{
    if (k.kind == KernelKind::polynomial) {
        return {{"kind", "poly"}, {"degree", k.degree}};
    }
    return {{"kind", "rbf"}, {"gamma", k.gamma}};
}

[[nodiscard]] inline nlohmann::json to_json(const TrainedModel& model)
{
    nlohmann::json doc = {{"format", "thermocad-model"}, {"version", kModelFormatVersion}};
    if (const auto* svm = std::get_if<SvmModel>(&model)) {
        nlohmann::json svs = nlohmann::json::array();
        for (std::size_t s = 0; s < svm->support_vectors.size(); ++s) {
            svs.push_back({{"id", svm->support_ids[s]}, {"coef", svm->dual_coefs[s]}, {"x", svm->support_vectors[s]}});
        }
        doc["type"] = "smo";
        doc["kernel"] = to_json(svm->kernel);
        doc["c"] = svm->c;
        doc["bias"] = svm->bias;
        doc["scaler"] = {{"min", svm->scaler.min}, {"max", svm->scaler.max}};
        doc["support_vectors"] = svs;
        return doc;
    }
    const auto& nb = std::get<NaiveBayesModel>(model);
    doc["type"] = "naive_bayes";
    doc["classes"] = nlohmann::json::array();
    for (std::size_t k = 0; k < 2; ++k) {
        doc["classes"].push_back({{"label", to_string(k == 1 ? Label::finding : Label::normal)},
                                  {"prior", nb.priors[k]},
                                  {"mean", nb.means[k]},
                                  {"variance", nb.variances[k]}});
    }
    return doc;
}

[[nodiscard]] inline TrainedModel model_from_json(const nlohmann::json& doc)
{
    try {
        if (doc.at("format").get<std::string>() != "thermocad-model") {
            throw FormatError("not a thermocad model document");
        }
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("unsupported model version " + std::to_string(version));
        }
        const auto type = doc.at("type").get<std::string>();
        if (type == "smo") {
            SvmModel m;
            const auto& kernel = doc.at("kernel");
            const auto kind = kernel.at("kind").get<std::string>();
            if (kind == "poly") {
                m.kernel.kind = KernelKind::polynomial;
                m.kernel.degree = kernel.at("degree").get<int>();
            } else if (kind == "rbf") {
                m.kernel.kind = KernelKind::rbf;
                m.kernel.gamma = kernel.at("gamma").get<double>();
            } else {
                throw FormatError("unknown kernel kind '" + kind + "'");
            }
            m.kernel.validate();
            m.c = doc.at("c").get<double>();
            m.bias = doc.at("bias").get<double>();
            m.scaler.min = doc.at("scaler").at("min").get<std::vector<double>>();
            m.scaler.max = doc.at("scaler").at("max").get<std::vector<double>>();
            if (m.scaler.min.size() != m.scaler.max.size()) {
                throw FormatError("scaler min/max lengths differ");
            }
            for (const auto& sv : doc.at("support_vectors")) {
                m.support_ids.push_back(sv.at("id").get<std::string>());
                m.dual_coefs.push_back(sv.at("coef").get<double>());
                m.support_vectors.push_back(sv.at("x").get<std::vector<double>>());
                if (m.support_vectors.back().size() != m.scaler.dimension()) {
                    throw FormatError("support vector '" + m.support_ids.back() + "' has wrong dimension");
                }
            }
            return m;
        }
        if (type == "naive_bayes") {
            NaiveBayesModel m;
            const auto& classes = doc.at("classes");
            if (classes.size() != 2) {
                throw FormatError("naive Bayes model needs exactly two classes");
            }
            for (const auto& cls : classes) {
                const auto k = static_cast<std::size_t>(parse_label(cls.at("label").get<std::string>()) == Label::finding);
                m.priors[k] = cls.at("prior").get<double>();
                m.means[k] = cls.at("mean").get<std::vector<double>>();
                m.variances[k] = cls.at("variance").get<std::vector<double>>();
            }
            if (m.means[0].size() != m.means[1].size() || m.variances[0].size() != m.means[0].size() ||
                m.variances[1].size() != m.means[0].size()) {
                throw FormatError("naive Bayes parameter lengths differ");
            }
            return m;
        }
        throw FormatError("unknown model type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    }
}

} // namespace thermocad
