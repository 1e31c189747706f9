#pragma once

// Binary classifiers: a soft-margin SVM trained by sequential minimal
// optimization, and Gaussian naive Bayes. "finding" is the positive class.

#include <thermocad/error.hpp>
#include <thermocad/random.hpp>
#include <thermocad/texture.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace thermocad {

// One labeled point of arbitrary dimension.
struct Sample {
    std::string id;
    std::vector<double> x;
    Label label = Label::normal;
};

[[nodiscard]] inline Sample to_sample(const FeatureVector& fv)
{
    const auto v = fv.values();
    return Sample{fv.id, std::vector<double>(v.begin(), v.end()), fv.label};
}

[[nodiscard]] constexpr double sign_of(Label label) noexcept
{
    return label == Label::finding ? 1.0 : -1.0;
}

struct Prediction {
    Label label = Label::normal;
    // Larger means more likely "finding". SVM: decision value. Naive Bayes: log posterior odds.
    double score = 0.0;
};

// ---------------------------------------------------------------------------
// Kernels and scaling

enum class KernelKind { polynomial, rbf };

struct KernelConfig {
    KernelKind kind = KernelKind::polynomial;
    int degree = 1;
    double gamma = 0.01;

    void validate() const
    {
        if (kind == KernelKind::polynomial && degree < 1) {
            throw ConfigError("polynomial kernel degree must be >= 1, got " + std::to_string(degree));
        }
        if (kind == KernelKind::rbf && !(gamma > 0.0 && std::isfinite(gamma))) {
            throw ConfigError("rbf kernel gamma must be positive, got " + std::to_string(gamma));
        }
    }

    // Polynomial: (u . v)^degree. RBF: exp(-gamma |u - v|^2).
    [[nodiscard]] double operator()(std::span<const double> u, std::span<const double> v) const noexcept
    {
        if (kind == KernelKind::polynomial) {
            const double dot = std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
            double out = 1.0;
            for (int k = 0; k < degree; ++k) {
                out *= dot;
            }
            return out;
        }
        double dist2 = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double d = u[k] - v[k];
            dist2 += d * d;
        }
        return std::exp(-gamma * dist2);
    }

    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

// Per-feature affine map of the training range onto [0, 1]. Constant features map to 0.
struct MinMaxScaler {
    std::vector<double> min;
    std::vector<double> max;

    [[nodiscard]] static MinMaxScaler fit(std::span<const Sample> samples)
    {
        MinMaxScaler s;
        const std::size_t dim = samples.front().x.size();
        s.min.assign(dim, std::numeric_limits<double>::infinity());
        s.max.assign(dim, -std::numeric_limits<double>::infinity());
        for (const auto& sample : samples) {
            for (std::size_t k = 0; k < dim; ++k) {
                s.min[k] = std::min(s.min[k], sample.x[k]);
                s.max[k] = std::max(s.max[k], sample.x[k]);
            }
        }
        return s;
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return min.size(); }

    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const
    {
        std::vector<double> out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double range = max[k] - min[k];
            out[k] = range > 0.0 ? (x[k] - min[k]) / range : 0.0;
        }
        return out;
    }

    friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

namespace detail {

inline void check_training_set(std::span<const Sample> samples, std::size_t min_per_class)
{
    if (samples.empty()) {
        throw ConfigError("empty training set");
    }
    const std::size_t dim = samples.front().x.size();
    if (dim == 0) {
        throw ConfigError("training samples have no features");
    }
    std::size_t positives = 0;
    for (const auto& s : samples) {
        if (s.x.size() != dim) {
            throw DimensionError("sample '" + s.id + "' has " + std::to_string(s.x.size()) +
                                 " features, expected " + std::to_string(dim));
        }
        for (double v : s.x) {
            if (!std::isfinite(v)) {
                throw ConfigError("sample '" + s.id + "' has a non-finite feature value");
            }
        }
        positives += s.label == Label::finding ? 1U : 0U;
    }
    const std::size_t negatives = samples.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw ConfigError("training set contains a single class (" + std::to_string(negatives) + " normal, " +
                          std::to_string(positives) + " finding)");
    }
    if (positives < min_per_class || negatives < min_per_class) {
        throw ConfigError("each class needs at least " + std::to_string(min_per_class) + " training samples (" +
                          std::to_string(negatives) + " normal, " + std::to_string(positives) + " finding)");
    }
}

inline void check_query(std::span<const double> x, std::size_t dim)
{
    if (x.size() != dim) {
        throw DimensionError("query has " + std::to_string(x.size()) + " features, model expects " +
                             std::to_string(dim));
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw ConfigError("query has a non-finite feature value");
        }
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// SVM

struct SmoOptions {
    double c = 1.0;
    KernelConfig kernel{};
    // Stopping tolerance on the maximal KKT violation.
    double tol = 1e-3;
    // Seeds the scan order used to break ties between equally violating samples.
    std::uint64_t seed = 1;
    // 0 selects max(10'000'000, 100 * n).
    std::size_t max_iterations = 0;
};

struct SvmModel {
    std::vector<std::string> support_ids;
    std::vector<std::vector<double>> support_vectors; // scaled
    std::vector<double> dual_coefs;                  // alpha_i * y_i
    double bias = 0.0;
    KernelConfig kernel{};
    double c = 1.0;
    MinMaxScaler scaler;

    [[nodiscard]] std::size_t dimension() const noexcept { return scaler.dimension(); }

    // Decision value for an already scaled point.
    [[nodiscard]] double decision_scaled(std::span<const double> scaled) const noexcept
    {
        double score = bias;
        for (std::size_t s = 0; s < support_vectors.size(); ++s) {
            score += dual_coefs[s] * kernel(support_vectors[s], scaled);
        }
        return score;
    }
};

// Training diagnostics. objective holds the dual objective after every update.
struct SmoTrace {
    std::vector<double> objective;
    std::size_t iterations = 0;
    bool converged = false;
    // Final alpha for each training sample, in input order.
    std::vector<double> alphas;
};

struct SmoResult {
    SvmModel model;
    SmoTrace trace;
};

// Solves the soft-margin SVM dual
//   max sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j),  0 <= a_i <= C,  sum a_i y_i = 0
// two multipliers at a time, choosing the maximal violating pair each step.
// Features are rescaled to [0, 1] with a scaler fitted on `samples`.
[[nodiscard]] inline SmoResult train_smo_traced(std::span<const Sample> samples, const SmoOptions& options)
{
    detail::check_training_set(samples, 1);
    options.kernel.validate();
    if (!(options.c > 0.0) || !std::isfinite(options.c)) {
        throw ConfigError("box constraint C must be positive, got " + std::to_string(options.c));
    }
    if (!(options.tol > 0.0)) {
        throw ConfigError("SMO tolerance must be positive, got " + std::to_string(options.tol));
    }

    const std::size_t n = samples.size();
    const double c = options.c;
    const MinMaxScaler scaler = MinMaxScaler::fit(samples);
    std::vector<std::vector<double>> x(n);
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = scaler.apply(samples[t].x);
        y[t] = sign_of(samples[t].label);
    }
    const KernelConfig& kernel = options.kernel;
    std::vector<double> diag(n);
    for (std::size_t t = 0; t < n; ++t) {
        diag[t] = kernel(x[t], x[t]);
    }

    // Scan order only affects tie-breaking in the pair selection.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(options.seed);
    seeded_shuffle(std::span<std::size_t>(order), rng);

    // Minimization form: f(a) = 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij,
    // gradient g = Qa - e.
    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);
    std::vector<double> qi(n);
    std::vector<double> qj(n);
    constexpr double kTau = 1e-12;

    const auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < c : alpha[t] > 0.0; };
    const auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c; };
    const auto dual_objective = [&] {
        double w = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            w += alpha[t] * (1.0 - grad[t]);
        }
        return 0.5 * w;
    };

    SmoTrace trace;
    const std::size_t max_iter =
        options.max_iterations != 0 ? options.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);
    double objective = 0.0;
    double gmax = 0.0;
    double gmin = 0.0;
    while (true) {
        gmax = -std::numeric_limits<double>::infinity();
        gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n;
        std::size_t j = n;
        for (std::size_t t : order) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (i == n || j == n || gmax - gmin <= options.tol) {
            trace.converged = true;
            break;
        }
        if (trace.iterations >= max_iter) {
            break;
        }
        ++trace.iterations;

        for (std::size_t t = 0; t < n; ++t) {
            qi[t] = y[i] * y[t] * kernel(x[i], x[t]);
            qj[t] = y[j] * y[t] * kernel(x[j], x[t]);
        }
        const double old_ai = alpha[i];
        const double old_aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = diag[i] + diag[j] + 2.0 * qi[j];
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = diag[i] + diag[j] - 2.0 * y[i] * y[j] * qi[j];
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) {
            grad[t] += qi[t] * dai + qj[t] * daj;
        }

        const double next = dual_objective();
        // Each accepted step must not decrease the dual; allow for rounding in the O(n) sum.
        if (next < objective - 1e-9 * (1.0 + std::abs(objective))) {
            throw TrainingError("SMO dual objective decreased from " + std::to_string(objective) + " to " +
                                std::to_string(next) + " at iteration " + std::to_string(trace.iterations));
        }
        objective = next;
        trace.objective.push_back(objective);
    }

    // Bias: average over free multipliers, else the midpoint of the feasible interval.
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0 && alpha[t] < c) {
            free_sum += -y[t] * grad[t];
            ++free_count;
        }
    }
    SvmModel model;
    model.kernel = kernel;
    model.c = c;
    model.scaler = scaler;
    if (free_count > 0) {
        model.bias = free_sum / static_cast<double>(free_count);
    } else if (std::isfinite(gmax) && std::isfinite(gmin)) {
        model.bias = 0.5 * (gmax + gmin);
    }
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            model.support_ids.push_back(samples[t].id);
            model.support_vectors.push_back(x[t]);
            model.dual_coefs.push_back(alpha[t] * y[t]);
        }
    }
    trace.alphas = std::move(alpha);
    return SmoResult{std::move(model), std::move(trace)};
}

[[nodiscard]] inline SvmModel train_smo(std::span<const Sample> samples, const SmoOptions& options)
{
    return train_smo_traced(samples, options).model;
}

// score = sum_i coef_i K(sv_i, scale(x)) + bias. A score of exactly 0 is "normal".
[[nodiscard]] inline Prediction predict_svm(const SvmModel& model, std::span<const double> x)
{
    detail::check_query(x, model.dimension());
    const double score = model.decision_scaled(model.scaler.apply(x));
    return Prediction{score > 0.0 ? Label::finding : Label::normal, score};
}

// Largest KKT violation of `model` over its training set, measured on y f(x) - 1.
// `alphas` are the per-sample multipliers in the order of `samples`.
[[nodiscard]] inline double max_kkt_violation(const SvmModel& model, std::span<const Sample> samples,
                                              std::span<const double> alphas)
{
    double worst = 0.0;
    for (std::size_t t = 0; t < samples.size(); ++t) {
        const double margin = sign_of(samples[t].label) * predict_svm(model, samples[t].x).score - 1.0;
        double violation = 0.0;
        if (alphas[t] <= 0.0) {
            violation = std::max(0.0, -margin);
        } else if (alphas[t] >= model.c) {
            violation = std::max(0.0, margin);
        } else {
            violation = std::abs(margin);
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

struct NaiveBayesModel {
    // Indexed by class: 0 = normal, 1 = finding.
    std::array<double, 2> priors{};
    std::array<std::vector<double>, 2> means;
    std::array<std::vector<double>, 2> variances;

    [[nodiscard]] std::size_t dimension() const noexcept { return means[0].size(); }
};

struct NaiveBayesPrediction {
    Label label = Label::normal;
    std::array<double, 2> posterior{}; // normal, finding
    double score = 0.0;                // log(P(finding | x) / P(normal | x))
};

inline constexpr double kVarianceFloorScale = 1e-9;

// Per-class Gaussian likelihoods with unbiased variances and frequency priors.
// Variances are floored at 1e-9 times the squared training range of each feature
// (1e-9 for constant features).
[[nodiscard]] inline NaiveBayesModel train_naive_bayes(std::span<const Sample> samples)
{
    detail::check_training_set(samples, 2);
    const std::size_t dim = samples.front().x.size();
    NaiveBayesModel model;
    std::array<std::size_t, 2> counts{};
    for (int k = 0; k < 2; ++k) {
        model.means[k].assign(dim, 0.0);
        model.variances[k].assign(dim, 0.0);
    }
    for (const auto& s : samples) {
        const auto k = static_cast<std::size_t>(s.label == Label::finding);
        ++counts[k];
        for (std::size_t f = 0; f < dim; ++f) {
            model.means[k][f] += s.x[f];
        }
    }
    for (std::size_t k = 0; k < 2; ++k) {
        for (auto& m : model.means[k]) {
            m /= static_cast<double>(counts[k]);
        }
    }
    for (const auto& s : samples) {
        const auto k = static_cast<std::size_t>(s.label == Label::finding);
        for (std::size_t f = 0; f < dim; ++f) {
            const double d = s.x[f] - model.means[k][f];
            model.variances[k][f] += d * d;
        }
    }
    const MinMaxScaler range = MinMaxScaler::fit(samples);
    for (std::size_t k = 0; k < 2; ++k) {
        model.priors[k] = static_cast<double>(counts[k]) / static_cast<double>(samples.size());
        for (std::size_t f = 0; f < dim; ++f) {
            const double width = range.max[f] - range.min[f];
            const double floor = width > 0.0 ? kVarianceFloorScale * width * width : kVarianceFloorScale;
            model.variances[k][f] = std::max(model.variances[k][f] / static_cast<double>(counts[k] - 1), floor);
        }
    }
    return model;
}

// Posterior by Bayes' rule in log space; ties go to "normal".
[[nodiscard]] inline NaiveBayesPrediction predict_naive_bayes(const NaiveBayesModel& model, std::span<const double> x)
{
    detail::check_query(x, model.dimension());
    constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
    std::array<double, 2> log_joint{};
    for (std::size_t k = 0; k < 2; ++k) {
        double lj = std::log(model.priors[k]);
        for (std::size_t f = 0; f < x.size(); ++f) {
            const double var = model.variances[k][f];
            const double d = x[f] - model.means[k][f];
            lj += -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
        }
        log_joint[k] = lj;
    }
    const double top = std::max(log_joint[0], log_joint[1]);
    const double log_norm = top + std::log(std::exp(log_joint[0] - top) + std::exp(log_joint[1] - top));
    NaiveBayesPrediction out;
    out.posterior = {std::exp(log_joint[0] - log_norm), std::exp(log_joint[1] - log_norm)};
    out.score = log_joint[1] - log_joint[0];
    out.label = out.score > 0.0 ? Label::finding : Label::normal;
    return out;
}

// ---------------------------------------------------------------------------
// Classifier configurations, as used by cross-validation and the CLI.

struct SmoSpec {
    double c = 1.0;
    KernelConfig kernel{};
    double tol = 1e-3;
};

struct NaiveBayesSpec {};

using ClassifierSpec = std::variant<SmoSpec, NaiveBayesSpec>;

[[nodiscard]] inline std::string classifier_name(const ClassifierSpec& spec)
{
    return std::holds_alternative<SmoSpec>(spec) ? "SMO" : "NaiveBayes";
}

using TrainedModel = std::variant<SvmModel, NaiveBayesModel>;

[[nodiscard]] inline TrainedModel train(const ClassifierSpec& spec, std::span<const Sample> samples,
                                        std::uint64_t seed)
{
    if (const auto* smo = std::get_if<SmoSpec>(&spec)) {
        return train_smo(samples, SmoOptions{smo->c, smo->kernel, smo->tol, seed, 0});
    }
    return train_naive_bayes(samples);
}

[[nodiscard]] inline Prediction predict(const TrainedModel& model, std::span<const double> x)
{
    if (const auto* svm = std::get_if<SvmModel>(&model)) {
        return predict_svm(*svm, x);
    }
    const auto nb = predict_naive_bayes(std::get<NaiveBayesModel>(model), x);
    return Prediction{nb.label, nb.score};
}

} // namespace thermocad
