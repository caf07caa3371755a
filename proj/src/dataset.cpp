#include "ppr/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace ppr {

using nlohmann::json;

const SignRecord* Dataset::find(const std::string& video_id) const {
    auto it = std::lower_bound(records.begin(), records.end(), video_id,
                               [](const SignRecord& r, const std::string& id) {
                                   return r.video_id < id;
                               });
    if (it == records.end() || it->video_id != video_id) return nullptr;
    return &*it;
}

Dataset build_dataset(const std::vector<LexiconEntry>& lexicon,
                      const std::vector<VideoRecord>& index,
                      const std::filesystem::path& keypoint_root,
                      const BuildOptions& options, JoinReport* report,
                      std::vector<std::string>* warnings) {
    std::vector<VideoRecord> selected;
    for (const auto& video : index)
        if (video.tracker == options.tracker) selected.push_back(video);

    auto join = cross_reference(lexicon, selected);
    if (report) *report = join.report;

    Dataset dataset;
    dataset.tracker = options.tracker;
    dataset.coords_normalized = options.normalize_coordinates;
    dataset.frames_per_sequence = options.target_frames;
    for (const auto& [video, label] : join.matched) {
        SignRecord rec;
        rec.video_id = video.video_id;
        rec.gloss = video.gloss;
        rec.signer_id = video.signer_id;
        rec.label = label;
        std::filesystem::path kp = keypoint_root / video.keypoint_path;
        std::vector<std::string> local_warnings;
        try {
            SkeletonSequence seq = load_keypoints(kp, options.tracker, &local_warnings);
            seq = select_upper_body(seq);
            seq = normalize_length(seq, options.target_frames);
            if (options.normalize_coordinates) seq = normalize_coords(seq, &local_warnings);
            rec.sequence = std::move(seq);
        } catch (const Error& e) {
            throw Error(e.category(), std::string("video ") + video.video_id + ": " +
                                          e.what());
        }
        if (warnings)
            for (auto& w : local_warnings)
                warnings->push_back(video.video_id + ": " + w);
        dataset.records.push_back(std::move(rec));
    }
    std::sort(dataset.records.begin(), dataset.records.end(),
              [](const SignRecord& a, const SignRecord& b) { return a.video_id < b.video_id; });
    return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "ppr-dataset-v1";
    doc["tracker"] = std::string(tracker_name(dataset.tracker));
    doc["coords_normalized"] = dataset.coords_normalized;
    doc["frames_per_sequence"] = dataset.frames_per_sequence;
    json records = json::array();
    for (const auto& rec : dataset.records) {
        json r;
        r["video_id"] = rec.video_id;
        r["gloss"] = rec.gloss;
        r["signer_id"] = rec.signer_id;
        json label = json::object();
        for (PropertyKind kind : all_property_kinds())
            label[std::string(property_kind_name(kind))] = rec.label.code(kind);
        r["label"] = label;
        r["joint_names"] = rec.sequence.joint_names;
        json frames = json::array();
        for (int t = 0; t < rec.sequence.frames; ++t) {
            json frame = json::array();
            for (int j = 0; j < rec.sequence.joints(); ++j)
                frame.push_back(json::array({rec.sequence.at(t, j, 0), rec.sequence.at(t, j, 1),
                                             rec.sequence.at(t, j, 2)}));
            frames.push_back(std::move(frame));
        }
        r["frames"] = std::move(frames);
        records.push_back(std::move(r));
    }
    doc["records"] = std::move(records);
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << doc.dump() << "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "ppr-dataset-v1")
        throw FormatError(path.string() + ": not a dataset file");
    Dataset dataset;
    auto tracker = tracker_from_name(doc.at("tracker").get<std::string>());
    if (!tracker) throw FormatError("unknown tracker in dataset");
    dataset.tracker = *tracker;
    dataset.coords_normalized = doc.at("coords_normalized").get<bool>();
    dataset.frames_per_sequence = doc.at("frames_per_sequence").get<int>();
    for (const auto& r : doc.at("records")) {
        SignRecord rec;
        rec.video_id = r.at("video_id").get<std::string>();
        rec.gloss = r.at("gloss").get<std::string>();
        rec.signer_id = r.at("signer_id").get<std::string>();
        for (PropertyKind kind : all_property_kinds())
            rec.label.code(kind) =
                r.at("label").at(std::string(property_kind_name(kind))).get<std::string>();
        rec.sequence.tracker = dataset.tracker;
        for (const auto& name : r.at("joint_names"))
            rec.sequence.joint_names.push_back(name.get<std::string>());
        const auto& frames = r.at("frames");
        rec.sequence.frames = static_cast<int>(frames.size());
        rec.sequence.data.reserve(frames.size() * rec.sequence.joint_names.size() * 3);
        for (const auto& frame : frames) {
            if (frame.size() != rec.sequence.joint_names.size())
                throw FormatError("frame joint count mismatch in " + rec.video_id);
            for (const auto& triple : frame)
                for (int c = 0; c < 3; ++c)
                    rec.sequence.data.push_back(triple.at(static_cast<std::size_t>(c)).get<double>());
        }
        dataset.records.push_back(std::move(rec));
    }
    std::sort(dataset.records.begin(), dataset.records.end(),
              [](const SignRecord& a, const SignRecord& b) { return a.video_id < b.video_id; });
    return dataset;
}

} // namespace ppr
