#include "ppr/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ppr {

using nlohmann::json;

std::string_view tracker_name(TrackerKind tracker) {
    return tracker == TrackerKind::Mocap3D ? "mocap3d" : "pose2d";
}

std::optional<TrackerKind> tracker_from_name(std::string_view name) {
    if (name == "mocap3d") return TrackerKind::Mocap3D;
    if (name == "pose2d") return TrackerKind::Pose2D;
    return std::nullopt;
}

std::string normalize_gloss(std::string_view gloss) {
    std::string out = trim(gloss);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

namespace {

// Minimal CSV: comma separated, optional double-quote quoting with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c == '\r') {
            // ignore stray CR before LF
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quote");
    fields.push_back(cur);
    return fields;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    std::string line;
    int line_no = 0;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line, line_no);
        if (line_no == 1) {
            std::vector<std::string> got;
            for (auto& f : fields) got.push_back(trim(f));
            if (got != header) throw ParseError(1, "unexpected header");
            continue;
        }
        if (fields.size() != header.size())
            throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                          " fields, got " + std::to_string(fields.size()));
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace

std::vector<LexiconEntry> parse_lexicon(const std::filesystem::path& path,
                                        const Taxonomy& tax) {
    static const std::vector<std::string> header = {
        "gloss",    "flexion",          "major_location", "minor_location",
        "movement", "selected_fingers", "sign_type"};
    auto rows = read_csv(path, header);
    std::vector<LexiconEntry> entries;
    std::set<std::string> seen;
    int line_no = 1;
    for (const auto& row : rows) {
        ++line_no;
        LexiconEntry entry;
        entry.gloss = normalize_gloss(row[0]);
        if (entry.gloss.empty()) throw ParseError(line_no, "empty gloss");
        if (!seen.insert(entry.gloss).second) throw DuplicateGloss(entry.gloss);
        for (int k = 0; k < kPropertyKindCount; ++k)
            entry.label.codes[static_cast<std::size_t>(k)] = trim(row[static_cast<std::size_t>(k) + 1]);
        auto check = validate_label(entry.label, tax);
        if (!check.valid()) {
            const auto& bad = check.unknown.front();
            throw UnknownValue(bad.kind, bad.code, line_no);
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<VideoRecord> parse_video_index(const std::filesystem::path& path) {
    static const std::vector<std::string> header = {"video_id", "gloss", "signer_id",
                                                    "keypoint_path", "tracker"};
    auto rows = read_csv(path, header);
    std::vector<VideoRecord> records;
    std::set<std::string> ids;
    int line_no = 1;
    for (const auto& row : rows) {
        ++line_no;
        VideoRecord rec;
        rec.video_id = trim(row[0]);
        rec.gloss = normalize_gloss(row[1]);
        rec.signer_id = trim(row[2]);
        rec.keypoint_path = trim(row[3]);
        if (rec.video_id.empty()) throw ParseError(line_no, "empty video_id");
        if (!ids.insert(rec.video_id).second)
            throw ParseError(line_no, "duplicate video_id " + rec.video_id);
        auto tracker = tracker_from_name(trim(row[4]));
        if (!tracker) throw ParseError(line_no, "unknown tracker \"" + trim(row[4]) + "\"");
        rec.tracker = *tracker;
        records.push_back(std::move(rec));
    }
    return records;
}

JoinResult cross_reference(const std::vector<LexiconEntry>& lexicon,
                           const std::vector<VideoRecord>& index) {
    JoinResult result;
    std::map<std::string, const LexiconEntry*> by_gloss;
    for (const auto& entry : lexicon) by_gloss[entry.gloss] = &entry;

    std::set<std::string> matched_glosses;
    std::set<std::string> unmatched_index;
    for (const auto& video : index) {
        auto it = by_gloss.find(video.gloss);
        if (it == by_gloss.end()) {
            unmatched_index.insert(video.gloss);
            continue;
        }
        matched_glosses.insert(video.gloss);
        result.matched.emplace_back(video, it->second->label);
    }
    result.report.matched_videos = static_cast<long long>(result.matched.size());
    result.report.matched_glosses = static_cast<long long>(matched_glosses.size());
    for (const auto& entry : lexicon) {
        if (!matched_glosses.count(entry.gloss))
            result.report.unmatched_lexicon_glosses.push_back(entry.gloss);
    }
    result.report.unmatched_index_glosses.assign(unmatched_index.begin(),
                                                 unmatched_index.end());
    std::sort(result.report.unmatched_lexicon_glosses.begin(),
              result.report.unmatched_lexicon_glosses.end());
    return result;
}

const std::array<std::string, 27>& upper_body_joints() {
    static const std::array<std::string, 27> joints = {
        "nose",
        "left_eye",
        "right_eye",
        "left_shoulder",
        "right_shoulder",
        "left_elbow",
        "right_elbow",
        "left_wrist",
        "right_wrist",
        "left_thumb_tip",
        "left_index_base_knuckle",
        "left_index_tip_knuckle",
        "left_middle_base_knuckle",
        "left_middle_tip_knuckle",
        "left_ring_base_knuckle",
        "left_ring_tip_knuckle",
        "left_pinky_base_knuckle",
        "left_pinky_tip_knuckle",
        "right_thumb_tip",
        "right_index_base_knuckle",
        "right_index_tip_knuckle",
        "right_middle_base_knuckle",
        "right_middle_tip_knuckle",
        "right_ring_base_knuckle",
        "right_ring_tip_knuckle",
        "right_pinky_base_knuckle",
        "right_pinky_tip_knuckle",
    };
    return joints;
}

SkeletonSequence load_keypoints(const std::filesystem::path& path, TrackerKind tracker,
                                std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (!doc.contains("video_id") || !doc.contains("tracker") ||
        !doc.contains("joint_names") || !doc.contains("frames"))
        throw FormatError(path.string() + ": missing required field");

    auto file_tracker = tracker_from_name(doc["tracker"].get<std::string>());
    if (!file_tracker) throw FormatError(path.string() + ": unknown tracker");
    if (*file_tracker != tracker)
        throw FormatError(path.string() + ": tracker is " +
                          std::string(tracker_name(*file_tracker)) + ", expected " +
                          std::string(tracker_name(tracker)));

    SkeletonSequence seq;
    seq.tracker = tracker;
    for (const auto& name : doc["joint_names"])
        seq.joint_names.push_back(name.get<std::string>());
    if (seq.joint_names.empty()) throw FormatError(path.string() + ": no joints");

    const auto& frames = doc["frames"];
    if (!frames.is_array() || frames.empty()) throw EmptySequence();
    seq.frames = static_cast<int>(frames.size());
    seq.data.reserve(static_cast<std::size_t>(seq.frames) * seq.joint_names.size() * 3);
    for (int t = 0; t < seq.frames; ++t) {
        const auto& frame = frames[static_cast<std::size_t>(t)];
        if (frame.size() != seq.joint_names.size())
            throw FormatError(path.string() + ": frame " + std::to_string(t) +
                              " has wrong joint count");
        for (int j = 0; j < seq.joints(); ++j) {
            const auto& triple = frame[static_cast<std::size_t>(j)];
            if (triple.size() != 3)
                throw FormatError(path.string() + ": joint value is not a triple");
            for (int c = 0; c < 3; ++c) {
                const auto& cell = triple[static_cast<std::size_t>(c)];
                // json.dump() emits NaN/inf as null
                if (cell.is_null()) throw NonFiniteValue(t, j);
                if (!cell.is_number())
                    throw FormatError(path.string() + ": non-numeric coordinate");
                double v = cell.get<double>();
                if (!std::isfinite(v)) throw NonFiniteValue(t, j);
                seq.data.push_back(v);
            }
            if (tracker == TrackerKind::Pose2D && warnings) {
                double score = seq.at(t, j, 2);
                if (score < 0.0 || score > 1.0)
                    warnings->push_back("score out of [0,1] at frame " + std::to_string(t) +
                                        ", joint " + seq.joint_names[static_cast<std::size_t>(j)]);
            }
        }
    }
    return seq;
}

SkeletonSequence select_upper_body(const SkeletonSequence& seq) {
    const auto& wanted = upper_body_joints();
    std::vector<int> src_index;
    src_index.reserve(wanted.size());
    for (const auto& name : wanted) {
        auto it = std::find(seq.joint_names.begin(), seq.joint_names.end(), name);
        if (it == seq.joint_names.end()) throw MissingJoint(name);
        src_index.push_back(static_cast<int>(it - seq.joint_names.begin()));
    }
    SkeletonSequence out;
    out.frames = seq.frames;
    out.tracker = seq.tracker;
    out.joint_names.assign(wanted.begin(), wanted.end());
    out.data.resize(static_cast<std::size_t>(out.frames) * wanted.size() * 3);
    for (int t = 0; t < out.frames; ++t)
        for (std::size_t j = 0; j < wanted.size(); ++j)
            for (int c = 0; c < 3; ++c)
                out.at(t, static_cast<int>(j), c) = seq.at(t, src_index[j], c);
    return out;
}

SkeletonSequence normalize_length(const SkeletonSequence& seq, int target_frames) {
    if (seq.frames < 1) throw EmptySequence();
    SkeletonSequence out;
    out.tracker = seq.tracker;
    out.joint_names = seq.joint_names;
    out.frames = target_frames;
    const std::size_t frame_size = seq.joint_names.size() * 3;
    out.data.resize(static_cast<std::size_t>(target_frames) * frame_size);
    for (int t = 0; t < target_frames; ++t) {
        int src = t % seq.frames; // truncation and looping in one rule
        std::copy_n(seq.data.begin() + static_cast<std::ptrdiff_t>(src) *
                                           static_cast<std::ptrdiff_t>(frame_size),
                    frame_size,
                    out.data.begin() + static_cast<std::ptrdiff_t>(t) *
                                           static_cast<std::ptrdiff_t>(frame_size));
    }
    return out;
}

SkeletonSequence normalize_coords(const SkeletonSequence& seq,
                                  std::vector<std::string>* warnings) {
    auto find_joint = [&](const std::string& name) {
        auto it = std::find(seq.joint_names.begin(), seq.joint_names.end(), name);
        if (it == seq.joint_names.end()) throw MissingJoint(name);
        return static_cast<int>(it - seq.joint_names.begin());
    };
    if (seq.frames < 1) throw EmptySequence();
    int ls = find_joint("left_shoulder");
    int rs = find_joint("right_shoulder");

    // z participates only when it is a coordinate, not a confidence score
    int coord_channels = seq.tracker == TrackerKind::Mocap3D ? 3 : 2;

    double mid[3] = {0, 0, 0};
    double dist2 = 0;
    for (int c = 0; c < coord_channels; ++c) {
        double a = seq.at(0, ls, c);
        double b = seq.at(0, rs, c);
        mid[c] = 0.5 * (a + b);
        dist2 += (a - b) * (a - b);
    }
    double dist = std::sqrt(dist2);
    double scale = 1.0;
    if (dist < 1e-9) {
        if (warnings) warnings->push_back("DegenerateScale: coincident shoulders in frame 0");
    } else {
        scale = 1.0 / dist;
    }

    SkeletonSequence out = seq;
    for (int t = 0; t < seq.frames; ++t)
        for (int j = 0; j < seq.joints(); ++j)
            for (int c = 0; c < coord_channels; ++c)
                out.at(t, j, c) = (seq.at(t, j, c) - mid[c]) * scale;
    return out;
}

} // namespace ppr
