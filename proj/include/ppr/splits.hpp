#ifndef PPR_SPLITS_HPP
#define PPR_SPLITS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppr/error.hpp"
#include "ppr/ingest.hpp"
#include "ppr/phonology.hpp"

namespace ppr {

enum class SplitMode { Phoneme, Gloss };

std::string_view split_mode_name(SplitMode mode);
std::optional<SplitMode> split_mode_from_name(std::string_view name);

struct SplitSpec {
    PropertyKind kind = PropertyKind::Flexion;
    SplitMode mode = SplitMode::Phoneme;
    std::array<double, 3> ratios = {0.70, 0.15, 0.15}; // train, val, test
    std::uint64_t seed = 0;
};

struct SplitManifest {
    SplitSpec spec;
    std::vector<std::string> train, val, test; // sorted video ids
    std::string dataset_hash;
};

class TooFewSamples : public Error {
public:
    TooFewSamples(std::string c, long long n)
        : Error("TooFewSamples", "class \"" + c + "\" has only " + std::to_string(n) +
                                     " member(s); need at least 3"),
          class_code(std::move(c)), count(n) {}
    std::string class_code;
    long long count;
};

class InconsistentGlossLabel : public Error {
public:
    explicit InconsistentGlossLabel(std::string g)
        : Error("InconsistentGlossLabel",
                "gloss \"" + g + "\" carries more than one label"),
          gloss(std::move(g)) {}
    std::string gloss;
};

/// The minimum a split needs to know about one record.
struct SplitItem {
    std::string video_id;
    std::string gloss;
    std::string class_code; // the record's value of spec.kind
};

std::vector<SplitItem> split_items(const std::vector<SignRecord>& records,
                                   PropertyKind kind);

/// Video-level split: every class stratified over videos. Per class, members
/// are sorted, shuffled with a seed-keyed SplitMix64 stream, then cut with
/// largest-remainder quotas (ties train -> val -> test) and a final pass that
/// moves one member from the largest cut into any empty one.
SplitManifest split_phoneme(const std::vector<SplitItem>& items, const SplitSpec& spec);
SplitManifest split_phoneme(const std::vector<SignRecord>& records, const SplitSpec& spec);

/// Gloss-level split: the same stratified rule applied to glosses, so all
/// videos of a gloss land in one cut.
SplitManifest split_gloss(const std::vector<SplitItem>& items, const SplitSpec& spec);
SplitManifest split_gloss(const std::vector<SignRecord>& records, const SplitSpec& spec);

struct SplitViolation {
    std::string kind; // Disjointness | Coverage | UnknownId | MissingClass | RatioDeviation | GlossLeak
    std::string detail;
};

/// Checks disjointness, coverage, per-class presence in all three cuts, the
/// per-class ratio deviation (<= 1 item around the feasible quota, i.e. the
/// ideal count clamped to [1, n-2]) and, in gloss mode, gloss leakage.
std::vector<SplitViolation> verify_split(const SplitManifest& manifest,
                                         const std::vector<SplitItem>& items);
std::vector<SplitViolation> verify_split(const SplitManifest& manifest,
                                         const std::vector<SignRecord>& records);

/// FNV-1a over the sorted (video_id, gloss, label) triples; stable across
/// platforms and record order.
std::string dataset_content_hash(const std::vector<SignRecord>& records);
std::string dataset_content_hash(const std::vector<SplitItem>& items);

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest load_manifest(const std::filesystem::path& path);

} // namespace ppr

#endif
