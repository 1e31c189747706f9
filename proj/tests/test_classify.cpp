#include <thermocad/classify.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace thermocad {
namespace {

constexpr double kTol = 1e-3;

Sample pt(std::string id, std::vector<double> x, Label label)
{
    return Sample{std::move(id), std::move(x), label};
}

std::vector<Sample> toy_separable()
{
    return {pt("p1", {2, 0}, Label::finding), pt("p2", {3, 1}, Label::finding), pt("n1", {-2, 0}, Label::normal),
            pt("n2", {-3, -1}, Label::normal)};
}

std::vector<Sample> xor_set()
{
    return {pt("a", {0, 0}, Label::finding), pt("b", {1, 1}, Label::finding), pt("c", {0, 1}, Label::normal),
            pt("d", {1, 0}, Label::normal)};
}

double training_accuracy(const SvmModel& m, const std::vector<Sample>& data)
{
    int correct = 0;
    for (const auto& s : data) {
        correct += predict_svm(m, s.x).label == s.label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

// 200 points in 10 dimensions, labeled by the side of a hyperplane, with no
// point closer than 1 to it (in the scaled [0, 1] feature space the margin shrinks
// but stays positive).
std::vector<Sample> margin_dataset(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 3.0);
    std::vector<double> w(10);
    for (auto& v : w) {
        v = g(rng);
    }
    const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    for (auto& v : w) {
        v /= norm;
    }
    std::vector<Sample> out;
    while (out.size() < 200) {
        std::vector<double> x(10);
        for (auto& v : x) {
            v = g(rng);
        }
        const double d = std::inner_product(w.begin(), w.end(), x.begin(), 0.0);
        if (std::abs(d) < 1.0) {
            continue;
        }
        out.push_back(pt("s" + std::to_string(out.size()), x, d > 0 ? Label::finding : Label::normal));
    }
    return out;
}

void expect_valid_solution(const SmoResult& r, const std::vector<Sample>& data, double c)
{
    EXPECT_TRUE(r.trace.converged);
    double balance = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
        EXPECT_GE(r.trace.alphas[t], 0.0);
        EXPECT_LE(r.trace.alphas[t], c);
        balance += r.trace.alphas[t] * sign_of(data[t].label);
    }
    EXPECT_LE(std::abs(balance), 1e-6);
    EXPECT_LE(max_kkt_violation(r.model, data, r.trace.alphas), kTol);
    for (std::size_t i = 1; i < r.trace.objective.size(); ++i) {
        EXPECT_GE(r.trace.objective[i], r.trace.objective[i - 1]);
    }
    for (std::size_t s = 0; s < r.model.dual_coefs.size(); ++s) {
        EXPECT_NE(r.model.dual_coefs[s], 0.0);
        EXPECT_LE(std::abs(r.model.dual_coefs[s]), c);
    }
}

TEST(TrainSmo, SeparableToySet)
{
    const auto data = toy_separable();
    const SmoResult r = train_smo_traced(data, SmoOptions{});
    EXPECT_EQ(training_accuracy(r.model, data), 1.0);
    expect_valid_solution(r, data, 1.0);
    EXPECT_GT(predict_svm(r.model, std::vector<double>{2.5, 0.5}).score, 0.0);
}

TEST(TrainSmo, FreeSupportVectorsSitOnTheMargin)
{
    const auto data = margin_dataset(3);
    const SmoResult r = train_smo_traced(data, SmoOptions{});
    std::size_t free = 0;
    for (std::size_t t = 0; t < data.size(); ++t) {
        const double a = r.trace.alphas[t];
        if (a > 0.0 && a < 1.0) {
            ++free;
            EXPECT_NEAR(std::abs(predict_svm(r.model, data[t].x).score), 1.0, kTol);
        }
    }
    EXPECT_GT(free, 0U);
}

TEST(TrainSmo, MarginDatasetIsSolvedExactly)
{
    const auto data = margin_dataset(1);
    const SmoResult r = train_smo_traced(data, SmoOptions{10.0, {}, 1e-3, 1, 0});
    EXPECT_EQ(training_accuracy(r.model, data), 1.0);
    expect_valid_solution(r, data, 10.0);
}

TEST(TrainSmo, XorNeedsANonlinearKernel)
{
    const auto data = xor_set();
    const SvmModel linear = train_smo(data, SmoOptions{});
    EXPECT_LE(training_accuracy(linear, data), 0.75);

    SmoOptions rbf;
    rbf.kernel = KernelConfig{KernelKind::rbf, 1, 1.0};
    const SmoResult r = train_smo_traced(data, rbf);
    EXPECT_EQ(training_accuracy(r.model, data), 1.0);
    expect_valid_solution(r, data, 1.0);
}

// By symmetry every multiplier is equal on XOR; with gamma = 1 the unconstrained
// value would be 1 / (1 + e^-2 - 2 e^-1) > C, so all four sit at C = 1.
TEST(TrainSmo, XorRbfMultipliersHitTheBox)
{
    SmoOptions rbf;
    rbf.kernel = KernelConfig{KernelKind::rbf, 1, 1.0};
    const SmoResult r = train_smo_traced(xor_set(), rbf);
    for (double a : r.trace.alphas) {
        EXPECT_DOUBLE_EQ(a, 1.0);
    }
    const double expected_score = 1.0 + std::exp(-2.0) - 2.0 * std::exp(-1.0);
    EXPECT_NEAR(predict_svm(r.model, std::vector<double>{0, 0}).score, expected_score, 1e-12);
}

TEST(TrainSmo, SingleClassIsRejected)
{
    const std::vector<Sample> data{pt("a", {1}, Label::normal), pt("b", {2}, Label::normal)};
    EXPECT_THROW((void)train_smo(data, SmoOptions{}), ConfigError);
}

TEST(TrainSmo, NonFiniteFeatureNamesSample)
{
    auto data = toy_separable();
    data[2].x[1] = std::numeric_limits<double>::quiet_NaN();
    try {
        (void)train_smo(data, SmoOptions{});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("n1"), std::string::npos);
    }
}

TEST(TrainSmo, InvalidHyperparameters)
{
    const auto data = toy_separable();
    EXPECT_THROW((void)train_smo(data, SmoOptions{0.0, {}, 1e-3, 1, 0}), ConfigError);
    EXPECT_THROW((void)train_smo(data, SmoOptions{1.0, {}, 0.0, 1, 0}), ConfigError);
    EXPECT_THROW((void)train_smo(data, SmoOptions{1.0, {KernelKind::rbf, 1, -1.0}, 1e-3, 1, 0}), ConfigError);
    EXPECT_THROW((void)train_smo(data, SmoOptions{1.0, {KernelKind::polynomial, 0, 1.0}, 1e-3, 1, 0}), ConfigError);
}

TEST(TrainSmo, DeterministicForSameInputs)
{
    const auto data = margin_dataset(9);
    const SvmModel a = train_smo(data, SmoOptions{});
    const SvmModel b = train_smo(data, SmoOptions{});
    EXPECT_EQ(a.dual_coefs, b.dual_coefs);
    EXPECT_EQ(a.support_ids, b.support_ids);
    EXPECT_EQ(a.bias, b.bias);
}

TEST(TrainSmo, PredictionsIgnoreTrainingOrder)
{
    const auto data = margin_dataset(4);
    const SvmModel base = train_smo(data, SmoOptions{});
    std::mt19937_64 rng(42);
    for (int round = 0; round < 3; ++round) {
        auto shuffled = data;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const SvmModel other = train_smo(shuffled, SmoOptions{1.0, {}, 1e-3, static_cast<std::uint64_t>(round + 2), 0});
        for (const auto& s : data) {
            EXPECT_EQ(predict_svm(other, s.x).label, predict_svm(base, s.x).label);
        }
    }
}

TEST(TrainSmo, PolynomialDegreeTwoSeparatesCircle)
{
    // Points in the unit square split by a circle around the origin. Scaling
    // leaves them near [0, 1]^2, where the homogeneous quadratic kernel plus
    // bias can express x^2 + y^2 - r^2.
    std::vector<Sample> data;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (data.size() < 80) {
        const double x = u(rng);
        const double y = u(rng);
        const double r2 = x * x + y * y;
        if (std::abs(r2 - 0.5) < 0.1) {
            continue;
        }
        data.push_back(pt(std::to_string(data.size()), {x, y}, r2 > 0.5 ? Label::finding : Label::normal));
    }
    SmoOptions opts;
    opts.c = 100.0;
    opts.kernel.degree = 2;
    const SvmModel m = train_smo(data, opts);
    EXPECT_EQ(training_accuracy(m, data), 1.0);
}

TEST(PredictSvm, ZeroScoreIsNormal)
{
    SvmModel m;
    m.scaler.min = {0.0};
    m.scaler.max = {1.0};
    m.bias = 0.0;
    const Prediction p = predict_svm(m, std::vector<double>{0.5});
    EXPECT_EQ(p.score, 0.0);
    EXPECT_EQ(p.label, Label::normal);
}

TEST(PredictSvm, DimensionMismatch)
{
    const SvmModel m = train_smo(toy_separable(), SmoOptions{});
    EXPECT_THROW((void)predict_svm(m, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Kernel, Values)
{
    const std::vector<double> u{1, 2};
    const std::vector<double> v{3, -1};
    EXPECT_DOUBLE_EQ((KernelConfig{KernelKind::polynomial, 1, 0}(u, v)), 1.0);
    EXPECT_DOUBLE_EQ((KernelConfig{KernelKind::polynomial, 3, 0}(u, v)), 1.0);
    EXPECT_DOUBLE_EQ((KernelConfig{KernelKind::polynomial, 2, 0}(u, u)), 25.0);
    EXPECT_DOUBLE_EQ((KernelConfig{KernelKind::rbf, 1, 0.5}(u, v)), std::exp(-0.5 * 13.0));
}

TEST(MinMaxScaler, MapsTrainingRangeToUnitInterval)
{
    const std::vector<Sample> data{pt("a", {1, 5, 2}, Label::normal), pt("b", {3, 5, -2}, Label::finding)};
    const auto s = MinMaxScaler::fit(data);
    EXPECT_EQ(s.apply(std::vector<double>{1, 5, 2}), (std::vector<double>{0, 0, 1}));
    EXPECT_EQ(s.apply(std::vector<double>{2, 7, 0}), (std::vector<double>{0.5, 0, 0.5}));
}

// ---------------------------------------------------------------------------

std::vector<Sample> one_feature(std::vector<double> normal, std::vector<double> finding)
{
    std::vector<Sample> out;
    for (double v : normal) {
        out.push_back(pt("n" + std::to_string(out.size()), {v}, Label::normal));
    }
    for (double v : finding) {
        out.push_back(pt("f" + std::to_string(out.size()), {v}, Label::finding));
    }
    return out;
}

TEST(NaiveBayes, SeparatedUnitGaussians)
{
    const auto model = train_naive_bayes(one_feature({-1, 0, 1}, {9, 10, 11}));
    EXPECT_DOUBLE_EQ(model.means[0][0], 0.0);
    EXPECT_DOUBLE_EQ(model.means[1][0], 10.0);
    EXPECT_DOUBLE_EQ(model.variances[0][0], 1.0);
    EXPECT_DOUBLE_EQ(model.variances[1][0], 1.0);
    const auto p = predict_naive_bayes(model, std::vector<double>{1.0});
    EXPECT_EQ(p.label, Label::normal);
    EXPECT_GT(p.posterior[0], 0.99);
    // Equal priors and variances: log odds = -(1 - 0)^2/2 + (1 - 10)^2/2 ... for "normal".
    EXPECT_NEAR(p.score, -0.5 * 81.0 + 0.5 * 1.0, 1e-9);
}

TEST(NaiveBayes, IdenticalLikelihoodsFollowThePrior)
{
    NaiveBayesModel m;
    m.priors = {0.3, 0.7};
    m.means = {std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}};
    m.variances = {std::vector<double>{0.5, 3.0}, std::vector<double>{0.5, 3.0}};
    const auto p = predict_naive_bayes(m, std::vector<double>{-4.0, 8.0});
    EXPECT_EQ(p.label, Label::finding);
    EXPECT_NEAR(p.posterior[1], 0.7, 1e-12);

    m.priors = {0.5, 0.5};
    EXPECT_EQ(predict_naive_bayes(m, std::vector<double>{0.0, 0.0}).label, Label::normal);
}

TEST(NaiveBayes, ZeroVarianceIsFloored)
{
    std::vector<Sample> data{pt("a", {1.0, 0.0}, Label::normal), pt("b", {1.0, 1.0}, Label::normal),
                             pt("c", {1.0, 4.0}, Label::finding), pt("d", {3.0, 5.0}, Label::finding)};
    const auto model = train_naive_bayes(data);
    // Feature 0 is constant within "normal"; the floor is 1e-9 * (3 - 1)^2.
    EXPECT_DOUBLE_EQ(model.variances[0][0], 4e-9);
    const auto p = predict_naive_bayes(model, std::vector<double>{1.5, 0.5});
    EXPECT_TRUE(std::isfinite(p.score));
    EXPECT_NEAR(p.posterior[0] + p.posterior[1], 1.0, 1e-9);
}

TEST(NaiveBayes, NeedsTwoSamplesPerClass)
{
    EXPECT_THROW((void)train_naive_bayes(one_feature({1, 2}, {3})), ConfigError);
    EXPECT_THROW((void)train_naive_bayes(one_feature({1, 2}, {})), ConfigError);
}

TEST(NaiveBayes, PosteriorsSumToOne)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Sample> data;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> x(10);
        for (auto& v : x) {
            v = g(rng) + (i % 2) * 0.5;
        }
        data.push_back(pt(std::to_string(i), x, i % 2 == 1 ? Label::finding : Label::normal));
    }
    const auto model = train_naive_bayes(data);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(10);
        for (auto& v : x) {
            v = 3.0 * g(rng);
        }
        const auto p = predict_naive_bayes(model, x);
        EXPECT_NEAR(p.posterior[0] + p.posterior[1], 1.0, 1e-9);
    }
}

TEST(Classifier, DispatchesOnSpec)
{
    const auto data = toy_separable();
    const TrainedModel svm = train(SmoSpec{}, data, 1);
    EXPECT_TRUE(std::holds_alternative<SvmModel>(svm));
    EXPECT_EQ(predict(svm, std::vector<double>{2.5, 0.5}).label, Label::finding);
    EXPECT_EQ(classifier_name(SmoSpec{}), "SMO");
    EXPECT_EQ(classifier_name(NaiveBayesSpec{}), "NaiveBayes");
}

} // namespace
} // namespace thermocad
