#ifndef PPR_EVAL_HPP
#define PPR_EVAL_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ppr/error.hpp"
#include "ppr/phonology.hpp"
#include "ppr/splits.hpp"

namespace ppr {

class EmptyMatrix : public Error {
public:
    EmptyMatrix() : Error("EmptyMatrix", "confusion matrix has no observations") {}
};

class RowSumMismatch : public Error {
public:
    explicit RowSumMismatch(const std::string& what) : Error("RowSumMismatch", what) {}
};

class MismatchedTestSets : public Error {
public:
    explicit MismatchedTestSets(const std::string& what)
        : Error("MismatchedTestSets", what) {}
};

/// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int classes)
        : k_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {}

    int classes() const { return k_; }
    void add(int true_class, int predicted_class, long long n = 1);
    long long at(int true_class, int predicted_class) const {
        return counts_[static_cast<std::size_t>(true_class) * k_ + predicted_class];
    }
    long long total() const;
    long long row_sum(int true_class) const;  // support
    long long col_sum(int predicted_class) const;
    long long trace() const;

    // one-vs-rest counts
    long long tp(int c) const { return at(c, c); }
    long long fn(int c) const { return row_sum(c) - at(c, c); }
    long long fp(int c) const { return col_sum(c) - at(c, c); }
    long long tn(int c) const { return total() - row_sum(c) - col_sum(c) + at(c, c); }

private:
    int k_ = 0;
    std::vector<long long> counts_;
};

struct MetricSet {
    double accuracy = 0;
    double balanced_accuracy = 0;
    double precision_micro = 0;
    double precision_macro = 0;
    double recall_micro = 0;
    double recall_macro = 0;
    double mcc = 0;
    /// Supported classes that were never predicted; their precision counted as 0.
    std::vector<int> undefined_precision_classes;
};

/// Accuracy family from the confusion matrix. Macro averages run over classes
/// with nonzero support in the matrix; MCC is the multiclass R_k statistic.
MetricSet metrics(const ConfusionMatrix& cm);

/// Standard normal quantile (Acklam's rational approximation, |eps| < 1.2e-8).
double normal_quantile(double p);

/// Half-width of the normal-approximation interval for a proportion.
double accuracy_ci(double p_hat, long long n, double alpha = 0.05);

struct FleissResult {
    double kappa = 0;
    bool defined = true; // false when expected agreement is 1
    double observed_agreement = 0;
    double expected_agreement = 0;
};

/// ratings: one row per item, one column per category, entries = number of
/// raters who chose that category. Every row must sum to n_raters.
FleissResult fleiss_kappa(const std::vector<std::vector<int>>& ratings, int n_raters);

struct RecordPrediction {
    std::string video_id;
    int true_class = 0;
    int predicted_class = 0;
};

struct EvalReport {
    PropertyKind property = PropertyKind::Flexion;
    SplitMode mode = SplitMode::Phoneme;
    std::string model_name;
    std::string tracker; // "mocap3d" / "pose2d" / "" when unknown
    std::vector<std::string> classes;
    std::vector<RecordPrediction> records;
    ConfusionMatrix confusion;
    MetricSet metric_set;
    double ci_half_width = 0;
};

/// Report assembled from per-record predictions; the confusion matrix,
/// metrics and interval are derived here.
EvalReport make_report(PropertyKind property, SplitMode mode, std::string model_name,
                       std::string tracker, std::vector<std::string> classes,
                       std::vector<RecordPrediction> records, double alpha = 0.05);

void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

struct JointMisclassification {
    std::vector<std::string> ids;            // sorted
    std::vector<std::vector<int>> ratings;   // per id: model votes per class
    int n_models = 0;
};

/// Videos every model got wrong, with the per-class vote counts used as the
/// agreement-analysis input. All reports must be over the same test set.
JointMisclassification joint_misclassified(const std::vector<EvalReport>& reports);

struct CrossTaskBucket {
    long long shared_videos = 0;
    long long jointly_misclassified = 0;
    std::optional<double> rate; // empty when no video is shared by m tasks
};

/// For each m >= 2: among videos in the test sets of exactly m tasks, the
/// fraction jointly misclassified on all of them.
std::map<int, CrossTaskBucket> cross_task_misclassification(
    const std::vector<std::set<std::string>>& joint_sets,
    const std::vector<std::set<std::string>>& test_sets);

} // namespace ppr

#endif
