#ifndef PPR_INGEST_HPP
#define PPR_INGEST_HPP

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ppr/error.hpp"
#include "ppr/phonology.hpp"

namespace ppr {

enum class TrackerKind { Mocap3D, Pose2D };

std::string_view tracker_name(TrackerKind tracker); // "mocap3d" / "pose2d"
std::optional<TrackerKind> tracker_from_name(std::string_view name);

struct LexiconEntry {
    std::string gloss; // normalized
    PhonologicalLabel label;
};

struct VideoRecord {
    std::string video_id;
    std::string gloss; // normalized
    std::string signer_id;
    std::string keypoint_path;
    TrackerKind tracker = TrackerKind::Pose2D;
};

/// T x J x 3 joint series. Channel 2 is z for Mocap3D and the detector
/// confidence score for Pose2D.
struct SkeletonSequence {
    static constexpr int kChannels = 3;

    int frames = 0;
    std::vector<std::string> joint_names;
    TrackerKind tracker = TrackerKind::Pose2D;
    std::vector<double> data; // frames * joints * 3, row-major

    int joints() const { return static_cast<int>(joint_names.size()); }

    double at(int t, int j, int c) const {
        return data[(static_cast<std::size_t>(t) * joint_names.size() + j) * kChannels + c];
    }
    double& at(int t, int j, int c) {
        return data[(static_cast<std::size_t>(t) * joint_names.size() + j) * kChannels + c];
    }

    bool operator==(const SkeletonSequence&) const = default;
};

struct SignRecord {
    std::string video_id;
    std::string gloss;
    std::string signer_id;
    SkeletonSequence sequence;
    PhonologicalLabel label;
};

// errors
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("ParseError", "line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

class DuplicateGloss : public Error {
public:
    explicit DuplicateGloss(std::string g)
        : Error("DuplicateGloss", "gloss \"" + g + "\" appears more than once"), gloss(std::move(g)) {}
    std::string gloss;
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("FormatError", what) {}
};

class NonFiniteValue : public Error {
public:
    NonFiniteValue(int frame, int joint)
        : Error("NonFiniteValue", "frame " + std::to_string(frame) + ", joint " +
                                      std::to_string(joint)),
          frame(frame), joint(joint) {}
    int frame;
    int joint;
};

class MissingJoint : public Error {
public:
    explicit MissingJoint(std::string n)
        : Error("MissingJoint", "joint \"" + n + "\" not present"), name(std::move(n)) {}
    std::string name;
};

class EmptySequence : public Error {
public:
    EmptySequence() : Error("EmptySequence", "sequence has no frames") {}
};

/// Unicode-agnostic gloss normalization: ASCII case fold + whitespace trim.
std::string normalize_gloss(std::string_view gloss);

/// CSV with header gloss,flexion,major_location,minor_location,movement,
/// selected_fingers,sign_type. Duplicate glosses and unknown codes are fatal.
std::vector<LexiconEntry> parse_lexicon(const std::filesystem::path& path,
                                        const Taxonomy& tax = builtin_taxonomy());

/// CSV with header video_id,gloss,signer_id,keypoint_path,tracker.
std::vector<VideoRecord> parse_video_index(const std::filesystem::path& path);

struct JoinReport {
    long long matched_videos = 0;
    long long matched_glosses = 0;
    std::vector<std::string> unmatched_lexicon_glosses;
    std::vector<std::string> unmatched_index_glosses;
};

struct JoinResult {
    std::vector<std::pair<VideoRecord, PhonologicalLabel>> matched;
    JoinReport report;
};

/// Inner join of lexicon and video index on normalized gloss.
JoinResult cross_reference(const std::vector<LexiconEntry>& lexicon,
                           const std::vector<VideoRecord>& index);

/// Canonical upper-body joint subset, in the order the skeleton graph uses.
const std::array<std::string, 27>& upper_body_joints();

/// Parse one keypoint JSON file. Out-of-range Pose2D scores produce warnings,
/// not errors; NaN/inf coordinates are fatal.
SkeletonSequence load_keypoints(const std::filesystem::path& path, TrackerKind tracker,
                                std::vector<std::string>* warnings = nullptr);

/// Restrict to the 27 canonical joints, reordering to the canonical order.
SkeletonSequence select_upper_body(const SkeletonSequence& seq);

/// Truncate to target_frames, or loop whole-sequence repeats from frame 0.
SkeletonSequence normalize_length(const SkeletonSequence& seq, int target_frames = 150);

/// Translate so the frame-0 shoulder midpoint is the origin and scale so the
/// frame-0 shoulder distance is 1. The Pose2D score channel is untouched.
SkeletonSequence normalize_coords(const SkeletonSequence& seq,
                                  std::vector<std::string>* warnings = nullptr);

} // namespace ppr

#endif
