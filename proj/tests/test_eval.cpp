#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ppr/eval.hpp"
#include "ppr/rng.hpp"
#include "testutil.hpp"

using namespace ppr;
namespace tu = ppr::testutil;

TEST_SUITE_BEGIN("eval");

namespace {

/// Constant classifier over the builtin cardinalities of a kind.
ConfusionMatrix majority_confusion(PropertyKind kind) {
    const Taxonomy& tax = builtin_taxonomy();
    const auto& values = tax.values(kind);
    int majority = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i].cardinality > values[static_cast<std::size_t>(majority)].cardinality)
            majority = static_cast<int>(i);
    ConfusionMatrix cm(static_cast<int>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i].cardinality > 0)
            cm.add(static_cast<int>(i), majority, values[i].cardinality);
    return cm;
}

std::pair<std::vector<int>, std::vector<int>> random_predictions(Rng& rng, int k, int n) {
    std::vector<int> truth, pred;
    for (int i = 0; i < n; ++i) {
        truth.push_back(static_cast<int>(rng.bounded(static_cast<std::uint64_t>(k))));
        pred.push_back(static_cast<int>(rng.bounded(static_cast<std::uint64_t>(k))));
    }
    return {truth, pred};
}

ConfusionMatrix to_confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                             int k) {
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
    return cm;
}

} // namespace

TEST_CASE("majority classifier over the flexion distribution") {
    MetricSet m = metrics(majority_confusion(PropertyKind::Flexion));
    CHECK(std::abs(100.0 * m.accuracy - 50.3) < 0.1);
    CHECK(m.balanced_accuracy == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(m.mcc == doctest::Approx(0.0));
    // constant classifier: balanced accuracy is one over the supported classes
    CHECK(m.balanced_accuracy ==
          doctest::Approx(1.0 / builtin_taxonomy().nonzero_value_count(PropertyKind::Flexion)));
}

TEST_CASE("binary MCC worked example") {
    ConfusionMatrix cm(2);
    cm.add(0, 0, 45);
    cm.add(0, 1, 5);
    cm.add(1, 0, 10);
    cm.add(1, 1, 40);
    MetricSet m = metrics(cm);
    double expected = 1750.0 / std::sqrt(50.0 * 55.0 * 50.0 * 45.0);
    CHECK(m.mcc == doctest::Approx(expected).epsilon(1e-12));
    CHECK(m.mcc == doctest::Approx(0.7035).epsilon(1e-4));
}

TEST_CASE("perfect classifier on a diagonal matrix") {
    ConfusionMatrix cm(3);
    cm.add(0, 0, 4);
    cm.add(1, 1, 2);
    cm.add(2, 2, 9);
    MetricSet m = metrics(cm);
    CHECK(m.accuracy == 1.0);
    CHECK(m.balanced_accuracy == 1.0);
    CHECK(m.precision_macro == 1.0);
    CHECK(m.recall_macro == 1.0);
    CHECK(m.mcc == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empty matrix throws") {
    ConfusionMatrix cm(3);
    CHECK_THROWS_AS(metrics(cm), EmptyMatrix);
}

TEST_CASE("accuracy confidence interval") {
    double hw = accuracy_ci(0.845, 1503);
    CHECK(hw > 0.017);
    CHECK(hw < 0.019);
    CHECK(hw == doctest::Approx(0.0183).epsilon(1e-3));

    CHECK(accuracy_ci(0.0, 50) == 0.0);
    CHECK(accuracy_ci(1.0, 50) == 0.0);
    CHECK(accuracy_ci(0.5, 100) == doctest::Approx(0.098).epsilon(1e-3));

    // the quantile behind alpha = 0.05
    CHECK(normal_quantile(0.975) == doctest::Approx(1.95996).epsilon(1e-5));
}

TEST_CASE("fleiss kappa") {
    SUBCASE("perfect agreement across two categories") {
        std::vector<std::vector<int>> ratings = {{3, 0}, {0, 3}, {3, 0}};
        FleissResult r = fleiss_kappa(ratings, 3);
        CHECK(r.defined);
        CHECK(r.kappa == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("hand-computed negative agreement") {
        std::vector<std::vector<int>> ratings = {{2, 1}, {1, 2}};
        FleissResult r = fleiss_kappa(ratings, 3);
        CHECK(r.defined);
        CHECK(r.observed_agreement == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(r.expected_agreement == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.kappa == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("single used category is undefined") {
        std::vector<std::vector<int>> ratings = {{3, 0}, {3, 0}};
        FleissResult r = fleiss_kappa(ratings, 3);
        CHECK_FALSE(r.defined);
    }
    SUBCASE("row sum mismatch") {
        std::vector<std::vector<int>> ratings = {{2, 1}, {1, 1}};
        CHECK_THROWS_AS(fleiss_kappa(ratings, 3), RowSumMismatch);
    }
    SUBCASE("category relabeling leaves kappa unchanged") {
        Rng rng(31);
        for (int round = 0; round < 20; ++round) {
            int items = 2 + static_cast<int>(rng.bounded(6));
            int cats = 2 + static_cast<int>(rng.bounded(4));
            int raters = 2 + static_cast<int>(rng.bounded(4));
            std::vector<std::vector<int>> ratings(
                static_cast<std::size_t>(items),
                std::vector<int>(static_cast<std::size_t>(cats), 0));
            for (auto& row : ratings)
                for (int r = 0; r < raters; ++r)
                    ++row[static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(cats)))];
            FleissResult a = fleiss_kappa(ratings, raters);
            // rotate the category columns
            for (auto& row : ratings) std::rotate(row.begin(), row.begin() + 1, row.end());
            FleissResult b = fleiss_kappa(ratings, raters);
            CHECK(a.defined == b.defined);
            if (a.defined) CHECK(a.kappa == doctest::Approx(b.kappa).epsilon(1e-12));
        }
    }
}

namespace {

EvalReport toy_report(const std::vector<int>& truth, const std::vector<int>& pred,
                      int k, const std::string& model) {
    std::vector<RecordPrediction> recs;
    for (std::size_t i = 0; i < truth.size(); ++i)
        recs.push_back({"v" + std::to_string(i), truth[i], pred[i]});
    std::vector<std::string> classes;
    for (int c = 0; c < k; ++c) classes.push_back("k" + std::to_string(c));
    return make_report(PropertyKind::Movement, SplitMode::Phoneme, model, "pose2d",
                       classes, std::move(recs));
}

} // namespace

TEST_CASE("joint misclassification") {
    SUBCASE("one perfect model empties the set") {
        std::vector<int> truth = {0, 1, 2};
        auto r1 = toy_report(truth, {1, 2, 0}, 3, "m1");
        auto r2 = toy_report(truth, truth, 3, "m2");
        auto joint = joint_misclassified({r1, r2});
        CHECK(joint.ids.empty());
    }
    SUBCASE("unanimous wrong vote shows up as a full row") {
        std::vector<int> truth = {0};
        auto r1 = toy_report(truth, {1}, 3, "m1");
        auto r2 = toy_report(truth, {1}, 3, "m2");
        auto r3 = toy_report(truth, {1}, 3, "m3");
        auto joint = joint_misclassified({r1, r2, r3});
        REQUIRE(joint.ids == std::vector<std::string>{"v0"});
        CHECK(joint.ratings[0] == std::vector<int>{0, 3, 0});
        CHECK(joint.n_models == 3);
    }
    SUBCASE("matches the brute-force error-set intersection") {
        Rng rng(77);
        for (int round = 0; round < 50; ++round) {
            int k = 2 + static_cast<int>(rng.bounded(4));
            int n = 5 + static_cast<int>(rng.bounded(30));
            auto [truth, p1] = random_predictions(rng, k, n);
            auto p2 = random_predictions(rng, k, n).second;
            auto p3 = random_predictions(rng, k, n).second;
            auto joint = joint_misclassified({toy_report(truth, p1, k, "m1"),
                                              toy_report(truth, p2, k, "m2"),
                                              toy_report(truth, p3, k, "m3")});
            std::set<std::string> expected;
            for (int i = 0; i < n; ++i) {
                auto idx = static_cast<std::size_t>(i);
                if (p1[idx] != truth[idx] && p2[idx] != truth[idx] && p3[idx] != truth[idx])
                    expected.insert("v" + std::to_string(i));
            }
            CHECK(std::set<std::string>(joint.ids.begin(), joint.ids.end()) == expected);
        }
    }
    SUBCASE("mismatched test sets are rejected") {
        auto r1 = toy_report({0, 1}, {1, 0}, 2, "m1");
        auto r2 = toy_report({0, 1, 1}, {1, 0, 0}, 2, "m2");
        CHECK_THROWS_AS(joint_misclassified({r1, r2}), MismatchedTestSets);
    }
}

TEST_CASE("cross-task misclassification rates") {
    SUBCASE("no shared videos") {
        std::set<std::string> t1 = {"a", "b"};
        std::set<std::string> t2 = {"c", "d"};
        auto rates = cross_task_misclassification({{}, {}}, {t1, t2});
        CHECK_FALSE(rates.at(2).rate.has_value());
        CHECK(rates.at(2).shared_videos == 0);
    }
    SUBCASE("ten shared videos, one jointly missed") {
        std::set<std::string> shared;
        for (int i = 0; i < 10; ++i) shared.insert("s" + std::to_string(i));
        std::set<std::string> joint1 = {"s0", "s3"};
        std::set<std::string> joint2 = {"s0", "s7"};
        auto rates = cross_task_misclassification({joint1, joint2}, {shared, shared});
        REQUIRE(rates.at(2).rate.has_value());
        CHECK(*rates.at(2).rate == doctest::Approx(0.1));
        CHECK(rates.at(2).shared_videos == 10);
        CHECK(rates.at(2).jointly_misclassified == 1);
    }
}

TEST_CASE("metrics agree with the per-record oracle") {
    Rng rng(123);
    for (int round = 0; round < 100; ++round) {
        int k = 2 + static_cast<int>(rng.bounded(9));
        int n = 10 + static_cast<int>(rng.bounded(191));
        auto [truth, pred] = random_predictions(rng, k, n);
        MetricSet a = metrics(to_confusion(truth, pred, k));
        tu::OracleMetrics b = tu::oracle_metrics(truth, pred, k);
        CHECK(a.accuracy == doctest::Approx(b.accuracy).epsilon(1e-9));
        CHECK(a.balanced_accuracy == doctest::Approx(b.balanced_accuracy).epsilon(1e-9));
        CHECK(a.precision_micro == doctest::Approx(b.precision_micro).epsilon(1e-9));
        CHECK(a.precision_macro == doctest::Approx(b.precision_macro).epsilon(1e-9));
        CHECK(a.recall_micro == doctest::Approx(b.recall_micro).epsilon(1e-9));
        CHECK(a.recall_macro == doctest::Approx(b.recall_macro).epsilon(1e-9));
        CHECK(a.mcc == doctest::Approx(b.mcc).epsilon(1e-9));
        // exact identities
        CHECK(a.balanced_accuracy == a.recall_macro);
        CHECK(a.precision_micro == a.accuracy);
        CHECK(a.recall_micro == a.accuracy);
    }
}

TEST_CASE("multiclass MCC collapses to the binary formula") {
    Rng rng(321);
    for (int round = 0; round < 100; ++round) {
        auto [truth, pred] = random_predictions(rng, 2, 20 + static_cast<int>(rng.bounded(100)));
        ConfusionMatrix cm = to_confusion(truth, pred, 2);
        double tp = static_cast<double>(cm.at(0, 0));
        double fn = static_cast<double>(cm.at(0, 1));
        double fp = static_cast<double>(cm.at(1, 0));
        double tn = static_cast<double>(cm.at(1, 1));
        double denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
        double expected = denom > 0 ? (tp * tn - fp * fn) / denom : 0.0;
        CHECK(metrics(cm).mcc == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("report round trip preserves the metric set") {
    namespace fs = std::filesystem;
    Rng rng(9);
    auto [truth, pred] = random_predictions(rng, 4, 40);
    EvalReport report = toy_report(truth, pred, 4, "mlp");
    fs::path path = fs::temp_directory_path() / "ppr_eval_roundtrip.json";
    save_report(report, path);
    EvalReport loaded = load_report(path);
    CHECK(loaded.metric_set.accuracy == doctest::Approx(report.metric_set.accuracy).epsilon(1e-12));
    CHECK(loaded.metric_set.mcc == doctest::Approx(report.metric_set.mcc).epsilon(1e-12));
    CHECK(loaded.records.size() == report.records.size());
    CHECK(loaded.classes == report.classes);
    CHECK(loaded.ci_half_width == doctest::Approx(report.ci_half_width).epsilon(1e-12));
    fs::remove(path);
}

TEST_SUITE_END();
