#pragma once

// Stratified k-fold cross-validation, confusion-matrix metrics and ROC AUC.

#include <thermocad/classify.hpp>
#include <thermocad/error.hpp>
#include <thermocad/parallel.hpp>
#include <thermocad/random.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace thermocad {

inline constexpr int kDefaultFolds = 7;
inline constexpr std::uint64_t kDefaultSeed = 1;

// Labeled samples with unique ids.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<Sample> samples) : samples_(std::move(samples))
    {
        std::set<std::string> seen;
        for (const auto& s : samples_) {
            if (!seen.insert(s.id).second) {
                throw ConfigError("duplicate sample id '" + s.id + "'");
            }
        }
    }

    [[nodiscard]] static Dataset from_features(std::span<const FeatureVector> features)
    {
        std::vector<Sample> samples;
        samples.reserve(features.size());
        for (const auto& fv : features) {
            samples.push_back(to_sample(fv));
        }
        return Dataset(std::move(samples));
    }

    [[nodiscard]] const std::vector<Sample>& samples() const noexcept { return samples_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] const Sample& operator[](std::size_t i) const noexcept { return samples_[i]; }

    [[nodiscard]] std::size_t count(Label label) const noexcept
    {
        return static_cast<std::size_t>(
            std::count_if(samples_.begin(), samples_.end(), [label](const Sample& s) { return s.label == label; }));
    }

private:
    std::vector<Sample> samples_;
};

// Indices into a Dataset, one vector per fold.
using Folds = std::vector<std::vector<std::size_t>>;

// Shuffles each class with `seed`, then deals normals followed by findings
// round-robin across the k folds, so per-class fold counts differ by at most
// one and fold sizes differ by at most one. Each fold's indices are sorted.
[[nodiscard]] inline Folds stratified_kfold(const Dataset& ds, int k, std::uint64_t seed)
{
    if (k < 2 || static_cast<std::size_t>(k) > ds.size()) {
        throw ConfigError("fold count k must be in [2, " + std::to_string(ds.size()) + "], got " + std::to_string(k));
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> dealing;
    dealing.reserve(ds.size());
    for (Label label : {Label::normal, Label::finding}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds[i].label == label) {
                members.push_back(i);
            }
        }
        seeded_shuffle(std::span<std::size_t>(members), rng);
        dealing.insert(dealing.end(), members.begin(), members.end());
    }
    Folds folds(static_cast<std::size_t>(k));
    for (std::size_t pos = 0; pos < dealing.size(); ++pos) {
        folds[pos % folds.size()].push_back(dealing[pos]);
    }
    for (auto& fold : folds) {
        std::sort(fold.begin(), fold.end());
    }
    return folds;
}

// Counts with "finding" as the positive class.
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    [[nodiscard]] std::int64_t total() const noexcept { return tp + tn + fp + fn; }
    [[nodiscard]] std::int64_t positives() const noexcept { return tp + fn; }
    [[nodiscard]] std::int64_t negatives() const noexcept { return tn + fp; }

    void record(Label truth, Label predicted) noexcept
    {
        if (truth == Label::finding) {
            (predicted == Label::finding ? tp : fn) += 1;
        } else {
            (predicted == Label::finding ? fp : tn) += 1;
        }
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept
    {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// std::nullopt marks a metric whose denominator is zero.
struct Metrics {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> youden;
};

[[nodiscard]] inline std::optional<double> safe_ratio(std::int64_t num, std::int64_t den) noexcept
{
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

[[nodiscard]] inline Metrics metrics(const ConfusionMatrix& cm)
{
    if (cm.tp < 0 || cm.tn < 0 || cm.fp < 0 || cm.fn < 0) {
        throw ConfigError("confusion counts must be nonnegative");
    }
    if (cm.total() == 0) {
        throw ConfigError("metrics of an empty confusion matrix");
    }
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.precision = safe_ratio(cm.tp, cm.tp + cm.fp);
    m.sensitivity = safe_ratio(cm.tp, cm.tp + cm.fn);
    m.specificity = safe_ratio(cm.tn, cm.tn + cm.fp);
    if (m.sensitivity && m.specificity) {
        m.youden = *m.sensitivity + *m.specificity - 1.0;
    }
    return m;
}

struct ScoredLabel {
    double score = 0.0;
    Label truth = Label::normal;
};

// Probability that a random positive outscores a random negative (ties count 1/2),
// computed from mid-ranks of the pooled scores.
[[nodiscard]] inline double roc_auc(std::span<const ScoredLabel> scored)
{
    std::vector<ScoredLabel> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t lo = 0; lo < sorted.size();) {
        std::size_t hi = lo;
        while (hi < sorted.size() && sorted[hi].score == sorted[lo].score) {
            ++hi;
        }
        // Ranks are 1-based; the tie group [lo, hi) shares their mean.
        const double mid_rank = 0.5 * static_cast<double>(lo + 1 + hi);
        for (std::size_t t = lo; t < hi; ++t) {
            if (sorted[t].truth == Label::finding) {
                positive_rank_sum += mid_rank;
                ++positives;
            }
        }
        lo = hi;
    }
    const std::size_t negatives = sorted.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw ConfigError("ROC AUC needs at least one positive and one negative sample");
    }
    const auto p = static_cast<double>(positives);
    const auto n = static_cast<double>(negatives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

struct EvalReport {
    std::string classifier;
    std::string test_mode;
    ConfusionMatrix pooled;
    Metrics metrics;
    std::optional<double> auc;
    std::vector<ConfusionMatrix> per_fold;
};

[[nodiscard]] inline std::string test_mode_name(int k, std::size_t n)
{
    if (static_cast<std::size_t>(k) == n) {
        return "leave one out";
    }
    return std::to_string(k) + "-fold cross validation";
}

// Trains on k-1 folds and predicts the held-out fold, for every fold. Counts
// are pooled across folds before computing metrics; AUC is computed from the
// pooled held-out scores. Folds run concurrently and are reduced in fold order.
[[nodiscard]] inline EvalReport cross_validate(const Dataset& ds, int k, std::uint64_t seed,
                                               const ClassifierSpec& spec)
{
    const Folds folds = stratified_kfold(ds, k, seed);

    struct FoldOutcome {
        ConfusionMatrix cm;
        std::vector<ScoredLabel> scores;
    };
    const auto run_fold = [&](std::size_t f) {
        std::vector<Sample> training;
        training.reserve(ds.size());
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g == f) {
                continue;
            }
            for (std::size_t idx : folds[g]) {
                training.push_back(ds[idx]);
            }
        }
        FoldOutcome out;
        try {
            const TrainedModel model = train(spec, training, seed);
            for (std::size_t idx : folds[f]) {
                const Prediction p = predict(model, ds[idx].x);
                out.cm.record(ds[idx].label, p.label);
                out.scores.push_back(ScoredLabel{p.score, ds[idx].label});
            }
        } catch (const Error&) {
            detail::rethrow_with_context<ConfigError, DimensionError, TrainingError>("fold " + std::to_string(f));
        }
        return out;
    };

    std::vector<FoldOutcome> outcomes(folds.size());
    parallel_for(folds.size(), [&](std::size_t f) { outcomes[f] = run_fold(f); });

    EvalReport report;
    report.classifier = classifier_name(spec);
    report.test_mode = test_mode_name(k, ds.size());
    std::vector<ScoredLabel> all_scores;
    for (const auto& outcome : outcomes) {
        report.pooled += outcome.cm;
        report.per_fold.push_back(outcome.cm);
        all_scores.insert(all_scores.end(), outcome.scores.begin(), outcome.scores.end());
    }
    report.metrics = metrics(report.pooled);
    if (report.pooled.positives() > 0 && report.pooled.negatives() > 0) {
        report.auc = roc_auc(all_scores);
    }
    return report;
}

} // namespace thermocad
