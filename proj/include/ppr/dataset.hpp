#ifndef PPR_DATASET_HPP
#define PPR_DATASET_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "ppr/ingest.hpp"

namespace ppr {

/// A fully ingested dataset: joined, joint-selected, length- and (optionally)
/// coordinate-normalized records, sorted by video_id.
struct Dataset {
    TrackerKind tracker = TrackerKind::Pose2D;
    bool coords_normalized = true;
    int frames_per_sequence = 150;
    std::vector<SignRecord> records;

    const SignRecord* find(const std::string& video_id) const;
};

struct BuildOptions {
    TrackerKind tracker = TrackerKind::Pose2D;
    bool normalize_coordinates = true;
    int target_frames = 150;
};

/// Full ingest chain over already-parsed inputs. The keypoint paths in the
/// index are resolved relative to keypoint_root.
Dataset build_dataset(const std::vector<LexiconEntry>& lexicon,
                      const std::vector<VideoRecord>& index,
                      const std::filesystem::path& keypoint_root,
                      const BuildOptions& options, JoinReport* report = nullptr,
                      std::vector<std::string>* warnings = nullptr);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace ppr

#endif
