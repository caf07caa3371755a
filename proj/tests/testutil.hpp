#ifndef PPR_TESTS_TESTUTIL_HPP
#define PPR_TESTS_TESTUTIL_HPP

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ppr/dataset.hpp"
#include "ppr/rng.hpp"
#include "ppr/splits.hpp"

namespace ppr::testutil {

/// Six separable classes over the Movement codes: class k displaces one
/// left-hand joint by a class-specific direction and magnitude, on top of a
/// fixed plausible upper-body pose with small Gaussian noise.
inline Dataset make_separable_dataset(int per_class, int frames = 150,
                                      std::uint64_t seed = 1234) {
    const auto& joints = upper_body_joints();
    std::vector<std::array<double, 2>> base(27, {0.0, 0.0});
    auto set = [&](const char* name, double x, double y) {
        for (std::size_t j = 0; j < joints.size(); ++j)
            if (joints[j] == name) base[j] = {x, y};
    };
    set("nose", 0.0, 1.0);
    set("left_eye", -0.08, 1.06);
    set("right_eye", 0.08, 1.06);
    set("left_shoulder", -0.5, 0.8);
    set("right_shoulder", 0.5, 0.8);
    set("left_elbow", -0.72, 0.45);
    set("right_elbow", 0.72, 0.45);
    set("left_wrist", -0.78, 0.12);
    set("right_wrist", 0.78, 0.12);
    for (std::size_t j = 9; j < 27; ++j) {
        double side = j < 18 ? -1.0 : 1.0;
        double spread = static_cast<double>(j % 9) * 0.04;
        base[j] = {side * (0.8 + spread), -0.05 - spread * 0.5};
    }

    static const char* movement_codes[6] = {"Straight",  "Curved", "BackAndForth",
                                            "Circular", "None",   "Other"};
    Dataset dataset;
    dataset.tracker = TrackerKind::Pose2D;
    dataset.coords_normalized = true;
    dataset.frames_per_sequence = frames;

    Rng rng(seed);
    int next_id = 0;
    for (int k = 0; k < 6; ++k) {
        int marked_joint = 9 + k; // left-hand joints
        double angle = 2.0 * M_PI * k / 6.0;
        double mag = 1.2 + 0.25 * k;
        double dx = mag * std::cos(angle), dy = mag * std::sin(angle);
        int glosses = std::max(3, per_class / 5);
        for (int i = 0; i < per_class; ++i) {
            SignRecord rec;
            char buf[32];
            std::snprintf(buf, sizeof buf, "v%04d", next_id++);
            rec.video_id = buf;
            rec.gloss = "m" + std::to_string(k) + "_g" + std::to_string(i % glosses);
            rec.signer_id = "s" + std::to_string(i % 4);
            rec.label.code(PropertyKind::Flexion) = "1";
            rec.label.code(PropertyKind::MajorLocation) = "Neutral";
            rec.label.code(PropertyKind::MinorLocation) = "Neutral";
            rec.label.code(PropertyKind::Movement) = movement_codes[k];
            rec.label.code(PropertyKind::SelectedFingers) = "imrp";
            rec.label.code(PropertyKind::SignType) = "One Handed";

            SkeletonSequence seq;
            seq.tracker = TrackerKind::Pose2D;
            seq.joint_names.assign(joints.begin(), joints.end());
            seq.frames = frames;
            seq.data.resize(static_cast<std::size_t>(frames) * 27 * 3);
            for (int t = 0; t < frames; ++t)
                for (int j = 0; j < 27; ++j) {
                    double x = base[static_cast<std::size_t>(j)][0] + 0.03 * rng.normal();
                    double y = base[static_cast<std::size_t>(j)][1] + 0.03 * rng.normal();
                    if (j == marked_joint) {
                        x += dx;
                        y += dy;
                    }
                    seq.at(t, j, 0) = x;
                    seq.at(t, j, 1) = y;
                    seq.at(t, j, 2) = 1.0;
                }
            rec.sequence = std::move(seq);
            dataset.records.push_back(std::move(rec));
        }
    }
    std::sort(dataset.records.begin(), dataset.records.end(),
              [](const SignRecord& a, const SignRecord& b) { return a.video_id < b.video_id; });
    return dataset;
}

/// Random split items: classes c0..c{k-1} with class sizes in
/// [min_per_class, max_per_class], several glosses per class.
inline std::vector<SplitItem> random_items(Rng& rng, int classes, int min_per_class,
                                           int max_per_class) {
    std::vector<SplitItem> items;
    int next = 0;
    for (int c = 0; c < classes; ++c) {
        int size = min_per_class +
                   static_cast<int>(rng.bounded(
                       static_cast<std::uint64_t>(max_per_class - min_per_class + 1)));
        int glosses = 3 + static_cast<int>(rng.bounded(3));
        for (int i = 0; i < size; ++i) {
            SplitItem item;
            item.video_id = "r" + std::to_string(next++);
            item.class_code = "c" + std::to_string(c);
            item.gloss = item.class_code + "_g" + std::to_string(i % glosses);
            items.push_back(std::move(item));
        }
    }
    return items;
}

/// Independent largest-remainder + min-1 allocation, mirroring the documented
/// split rule but written from the definition.
inline std::array<long long, 3> oracle_allocate(long long n,
                                                const std::array<double, 3>& ratios) {
    std::array<long long, 3> counts{};
    std::array<double, 3> rem{};
    long long used = 0;
    for (int i = 0; i < 3; ++i) {
        double ideal = ratios[i] * static_cast<double>(n);
        counts[i] = static_cast<long long>(std::floor(ideal));
        rem[i] = ideal - std::floor(ideal);
        used += counts[i];
    }
    for (long long left = n - used; left > 0; --left) {
        int pick = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[pick]) pick = i;
        ++counts[pick];
        rem[pick] = -1;
    }
    for (int i = 0; i < 3; ++i) {
        if (counts[i] > 0) continue;
        int donor = 0;
        for (int j = 1; j < 3; ++j)
            if (counts[j] > counts[donor]) donor = j;
        --counts[donor];
        ++counts[i];
    }
    return counts;
}

/// Per-record metric oracle computed without a confusion matrix. MCC uses the
/// Pearson-correlation form over one-hot indicator vectors.
struct OracleMetrics {
    double accuracy, balanced_accuracy, precision_micro, precision_macro, recall_micro,
        recall_macro, mcc;
};

inline OracleMetrics oracle_metrics(const std::vector<int>& truth,
                                    const std::vector<int>& pred, int k) {
    const auto n = static_cast<double>(truth.size());
    long long correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] == pred[i]) ++correct;

    OracleMetrics m{};
    m.accuracy = static_cast<double>(correct) / n;
    m.precision_micro = m.accuracy;
    m.recall_micro = m.accuracy;

    int supported = 0;
    double recall_sum = 0, precision_sum = 0;
    for (int c = 0; c < k; ++c) {
        long long support = 0, hits = 0, predicted = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] == c) {
                ++support;
                if (pred[i] == c) ++hits;
            }
            if (pred[i] == c) ++predicted;
        }
        if (support == 0) continue;
        ++supported;
        recall_sum += static_cast<double>(hits) / static_cast<double>(support);
        if (predicted > 0)
            precision_sum += static_cast<double>(hits) / static_cast<double>(predicted);
    }
    m.recall_macro = recall_sum / supported;
    m.balanced_accuracy = m.recall_macro;
    m.precision_macro = precision_sum / supported;

    double cov_xy = 0, cov_xx = 0, cov_yy = 0;
    for (int c = 0; c < k; ++c) {
        double mean_t = 0, mean_p = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            mean_t += truth[i] == c ? 1.0 : 0.0;
            mean_p += pred[i] == c ? 1.0 : 0.0;
        }
        mean_t /= n;
        mean_p /= n;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            double xt = (truth[i] == c ? 1.0 : 0.0) - mean_t;
            double xp = (pred[i] == c ? 1.0 : 0.0) - mean_p;
            cov_xy += xp * xt;
            cov_xx += xp * xp;
            cov_yy += xt * xt;
        }
    }
    m.mcc = (cov_xx > 0 && cov_yy > 0) ? cov_xy / std::sqrt(cov_xx * cov_yy) : 0.0;
    return m;
}

/// Dyadic-rational fill (multiples of 1/64 in [-2, 2)); sums of a few hundred
/// such values are exact in double, which makes permutation tests bit-exact.
inline void fill_dyadic(std::vector<double>& values, Rng& rng) {
    for (double& v : values)
        v = static_cast<double>(static_cast<long long>(rng.bounded(257)) - 128) / 64.0;
}

} // namespace ppr::testutil

#endif
