#include "ppr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace ppr {

using nlohmann::json;

void ConfusionMatrix::add(int true_class, int predicted_class, long long n) {
    if (true_class < 0 || true_class >= k_ || predicted_class < 0 || predicted_class >= k_)
        throw Error("IndexOutOfRange", "confusion matrix class index");
    counts_[static_cast<std::size_t>(true_class) * k_ + predicted_class] += n;
}

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (long long c : counts_) t += c;
    return t;
}

long long ConfusionMatrix::row_sum(int true_class) const {
    long long t = 0;
    for (int j = 0; j < k_; ++j) t += at(true_class, j);
    return t;
}

long long ConfusionMatrix::col_sum(int predicted_class) const {
    long long t = 0;
    for (int i = 0; i < k_; ++i) t += at(i, predicted_class);
    return t;
}

long long ConfusionMatrix::trace() const {
    long long t = 0;
    for (int i = 0; i < k_; ++i) t += at(i, i);
    return t;
}

MetricSet metrics(const ConfusionMatrix& cm) {
    const int k = cm.classes();
    const long long total = cm.total();
    if (k == 0 || total == 0) throw EmptyMatrix();

    MetricSet m;
    m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    // single-label: every prediction is exactly one positive, so the micro
    // precision and recall both collapse to accuracy
    m.precision_micro = m.accuracy;
    m.recall_micro = m.accuracy;

    int supported = 0;
    double recall_sum = 0, precision_sum = 0;
    for (int c = 0; c < k; ++c) {
        long long support = cm.row_sum(c);
        if (support == 0) continue;
        ++supported;
        recall_sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(support);
        long long predicted = cm.col_sum(c);
        if (predicted == 0) {
            m.undefined_precision_classes.push_back(c);
        } else {
            precision_sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(predicted);
        }
    }
    m.recall_macro = recall_sum / supported;
    m.balanced_accuracy = m.recall_macro;
    m.precision_macro = precision_sum / supported;

    // multiclass MCC (the R_k statistic over the confusion matrix)
    double s = static_cast<double>(total);
    double c_correct = static_cast<double>(cm.trace());
    double sum_pt = 0, sum_pp = 0, sum_tt = 0;
    for (int c = 0; c < k; ++c) {
        double p = static_cast<double>(cm.col_sum(c));
        double t = static_cast<double>(cm.row_sum(c));
        sum_pt += p * t;
        sum_pp += p * p;
        sum_tt += t * t;
    }
    double denom = std::sqrt((s * s - sum_pp) * (s * s - sum_tt));
    m.mcc = denom > 0 ? (c_correct * s - sum_pt) / denom : 0.0;
    return m;
}

double normal_quantile(double p) {
    if (p <= 0 || p >= 1) throw Error("IndexOutOfRange", "quantile needs p in (0,1)");
    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double accuracy_ci(double p_hat, long long n, double alpha) {
    if (p_hat < 0 || p_hat > 1) throw Error("IndexOutOfRange", "p_hat outside [0,1]");
    if (n < 1) throw Error("IndexOutOfRange", "n must be >= 1");
    double z = normal_quantile(1.0 - alpha / 2.0);
    return z * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

FleissResult fleiss_kappa(const std::vector<std::vector<int>>& ratings, int n_raters) {
    if (ratings.size() < 2) throw RowSumMismatch("need at least 2 items");
    if (n_raters < 2) throw RowSumMismatch("need at least 2 raters");
    std::size_t categories = ratings.front().size();
    const double N = static_cast<double>(ratings.size());
    const double n = static_cast<double>(n_raters);

    double p_bar = 0;
    std::vector<double> category_share(categories, 0.0);
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        const auto& item = ratings[i];
        if (item.size() != categories) throw RowSumMismatch("ragged ratings matrix");
        long long row = 0;
        double sq = 0;
        for (std::size_t j = 0; j < categories; ++j) {
            row += item[j];
            sq += static_cast<double>(item[j]) * item[j];
            category_share[j] += item[j];
        }
        if (row != n_raters)
            throw RowSumMismatch("item " + std::to_string(i) + " has " +
                                 std::to_string(row) + " ratings, expected " +
                                 std::to_string(n_raters));
        p_bar += (sq - n) / (n * (n - 1));
    }
    p_bar /= N;

    double p_e = 0;
    for (double share : category_share) {
        double pj = share / (N * n);
        p_e += pj * pj;
    }

    FleissResult result;
    result.observed_agreement = p_bar;
    result.expected_agreement = p_e;
    if (std::abs(1.0 - p_e) < 1e-15) {
        result.defined = false;
        result.kappa = 0;
    } else {
        result.kappa = (p_bar - p_e) / (1.0 - p_e);
    }
    return result;
}

EvalReport make_report(PropertyKind property, SplitMode mode, std::string model_name,
                       std::string tracker, std::vector<std::string> classes,
                       std::vector<RecordPrediction> records, double alpha) {
    EvalReport report;
    report.property = property;
    report.mode = mode;
    report.model_name = std::move(model_name);
    report.tracker = std::move(tracker);
    report.classes = std::move(classes);
    std::sort(records.begin(), records.end(),
              [](const RecordPrediction& a, const RecordPrediction& b) {
                  return a.video_id < b.video_id;
              });
    report.records = std::move(records);
    report.confusion = ConfusionMatrix(static_cast<int>(report.classes.size()));
    for (const auto& rec : report.records)
        report.confusion.add(rec.true_class, rec.predicted_class);
    report.metric_set = metrics(report.confusion);
    report.ci_half_width = accuracy_ci(report.metric_set.accuracy,
                                       report.confusion.total(), alpha);
    return report;
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "ppr-eval-v1";
    doc["property"] = std::string(property_kind_name(report.property));
    doc["mode"] = std::string(split_mode_name(report.mode));
    doc["model"] = report.model_name;
    doc["tracker"] = report.tracker;
    doc["classes"] = report.classes;
    json records = json::array();
    for (const auto& rec : report.records)
        records.push_back({{"video_id", rec.video_id},
                           {"true", rec.true_class},
                           {"pred", rec.predicted_class}});
    doc["records"] = std::move(records);
    json cm = json::array();
    for (int i = 0; i < report.confusion.classes(); ++i) {
        json row = json::array();
        for (int j = 0; j < report.confusion.classes(); ++j)
            row.push_back(report.confusion.at(i, j));
        cm.push_back(std::move(row));
    }
    doc["confusion"] = std::move(cm);
    doc["metrics"] = {{"accuracy", report.metric_set.accuracy},
                      {"balanced_accuracy", report.metric_set.balanced_accuracy},
                      {"precision_micro", report.metric_set.precision_micro},
                      {"precision_macro", report.metric_set.precision_macro},
                      {"recall_micro", report.metric_set.recall_micro},
                      {"recall_macro", report.metric_set.recall_macro},
                      {"mcc", report.metric_set.mcc}};
    doc["undefined_precision_classes"] = report.metric_set.undefined_precision_classes;
    doc["ci_half_width"] = report.ci_half_width;
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("FormatError", path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "ppr-eval-v1")
        throw Error("FormatError", path.string() + ": not an eval report");
    auto property = property_kind_from_name(doc.at("property").get<std::string>());
    auto mode = split_mode_from_name(doc.at("mode").get<std::string>());
    if (!property || !mode) throw Error("FormatError", "bad property or mode");
    std::vector<RecordPrediction> records;
    for (const auto& r : doc.at("records"))
        records.push_back({r.at("video_id").get<std::string>(), r.at("true").get<int>(),
                           r.at("pred").get<int>()});
    return make_report(*property, *mode, doc.at("model").get<std::string>(),
                       doc.value("tracker", ""), doc.at("classes").get<std::vector<std::string>>(),
                       std::move(records));
}

JointMisclassification joint_misclassified(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw MismatchedTestSets("no reports");
    auto id_set = [](const EvalReport& r) {
        std::set<std::string> ids;
        for (const auto& rec : r.records) ids.insert(rec.video_id);
        return ids;
    };
    std::set<std::string> base = id_set(reports.front());
    for (const auto& r : reports) {
        if (r.classes != reports.front().classes)
            throw MismatchedTestSets("reports use different class sets");
        if (id_set(r) != base) throw MismatchedTestSets("reports cover different videos");
    }

    JointMisclassification out;
    out.n_models = static_cast<int>(reports.size());
    std::size_t categories = reports.front().classes.size();

    std::map<std::string, std::pair<int, std::vector<int>>> votes; // id -> (truth, counts)
    for (const auto& r : reports)
        for (const auto& rec : r.records) {
            auto& entry = votes[rec.video_id];
            if (entry.second.empty()) {
                entry.first = rec.true_class;
                entry.second.assign(categories, 0);
            } else if (entry.first != rec.true_class) {
                throw MismatchedTestSets("reports disagree on the true class of " +
                                         rec.video_id);
            }
            ++entry.second[static_cast<std::size_t>(rec.predicted_class)];
        }
    for (auto& [id, entry] : votes) {
        // jointly misclassified: nobody voted for the true class
        if (entry.second[static_cast<std::size_t>(entry.first)] == 0) {
            out.ids.push_back(id);
            out.ratings.push_back(entry.second);
        }
    }
    return out;
}

std::map<int, CrossTaskBucket> cross_task_misclassification(
    const std::vector<std::set<std::string>>& joint_sets,
    const std::vector<std::set<std::string>>& test_sets) {
    if (joint_sets.size() != test_sets.size() || test_sets.size() < 2)
        throw MismatchedTestSets("need joint and test sets for >= 2 tasks");

    std::map<std::string, std::vector<std::size_t>> appearing_in;
    for (std::size_t task = 0; task < test_sets.size(); ++task)
        for (const auto& id : test_sets[task]) appearing_in[id].push_back(task);

    std::map<int, CrossTaskBucket> buckets;
    for (std::size_t m = 2; m <= test_sets.size(); ++m)
        buckets[static_cast<int>(m)] = CrossTaskBucket{};

    for (const auto& [id, tasks] : appearing_in) {
        if (tasks.size() < 2) continue;
        auto& bucket = buckets[static_cast<int>(tasks.size())];
        ++bucket.shared_videos;
        bool all_missed = true;
        for (std::size_t task : tasks)
            if (!joint_sets[task].count(id)) {
                all_missed = false;
                break;
            }
        if (all_missed) ++bucket.jointly_misclassified;
    }
    for (auto& [m, bucket] : buckets)
        if (bucket.shared_videos > 0)
            bucket.rate = static_cast<double>(bucket.jointly_misclassified) /
                          static_cast<double>(bucket.shared_videos);
    return buckets;
}

} // namespace ppr
