#include "ppr/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "ppr/rng.hpp"

namespace ppr {

using nlohmann::json;

std::string_view split_mode_name(SplitMode mode) {
    return mode == SplitMode::Phoneme ? "phoneme" : "gloss";
}

std::optional<SplitMode> split_mode_from_name(std::string_view name) {
    if (name == "phoneme") return SplitMode::Phoneme;
    if (name == "gloss") return SplitMode::Gloss;
    return std::nullopt;
}

std::vector<SplitItem> split_items(const std::vector<SignRecord>& records,
                                   PropertyKind kind) {
    std::vector<SplitItem> items;
    items.reserve(records.size());
    for (const auto& rec : records)
        items.push_back({rec.video_id, rec.gloss, rec.label.code(kind)});
    return items;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

void check_ratios(const SplitSpec& spec) {
    double sum = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
    if (std::abs(sum - 1.0) > 1e-12)
        throw Error("InvalidRatios", "ratios sum to " + std::to_string(sum));
    for (double r : spec.ratios)
        if (r < 0) throw Error("InvalidRatios", "negative ratio");
}

/// Largest-remainder allocation of n members to the three cuts, then the
/// min-1 pass. Returns counts per cut.
std::array<long long, 3> allocate(long long n, const std::array<double, 3>& ratios) {
    std::array<long long, 3> counts{};
    std::array<double, 3> remainders{};
    long long assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double ideal = static_cast<double>(n) * ratios[i];
        counts[i] = static_cast<long long>(std::floor(ideal));
        remainders[i] = ideal - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    long long leftover = n - assigned;
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (int k = 0; k < 3 && leftover > 0; ++k) {
        ++counts[order[static_cast<std::size_t>(k)]];
        --leftover;
    }
    // min-1: feasible whenever n >= 3, which split_* guarantee
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

/// Shuffle-and-cut for one class; appends member indices per cut.
void assign_class(const std::string& class_code, std::vector<std::string> members,
                  const SplitSpec& spec, std::array<std::vector<std::string>, 3>& cuts) {
    std::sort(members.begin(), members.end());
    Rng rng = Rng(spec.seed).fork(fnv1a(fnv1a(kFnvOffset, class_code), "|class"));
    rng.shuffle(members);
    auto counts = allocate(static_cast<long long>(members.size()), spec.ratios);
    std::size_t pos = 0;
    for (int cut = 0; cut < 3; ++cut)
        for (long long k = 0; k < counts[cut]; ++k)
            cuts[static_cast<std::size_t>(cut)].push_back(members[pos++]);
}

SplitManifest finalize(const SplitSpec& spec, std::array<std::vector<std::string>, 3>& cuts,
                       const std::vector<SplitItem>& items) {
    SplitManifest manifest;
    manifest.spec = spec;
    manifest.train = std::move(cuts[0]);
    manifest.val = std::move(cuts[1]);
    manifest.test = std::move(cuts[2]);
    std::sort(manifest.train.begin(), manifest.train.end());
    std::sort(manifest.val.begin(), manifest.val.end());
    std::sort(manifest.test.begin(), manifest.test.end());
    manifest.dataset_hash = dataset_content_hash(items);
    return manifest;
}

} // namespace

SplitManifest split_phoneme(const std::vector<SplitItem>& items, const SplitSpec& spec) {
    check_ratios(spec);
    std::map<std::string, std::vector<std::string>> by_class;
    for (const auto& item : items) by_class[item.class_code].push_back(item.video_id);
    for (const auto& [code, members] : by_class)
        if (members.size() < 3)
            throw TooFewSamples(code, static_cast<long long>(members.size()));

    std::array<std::vector<std::string>, 3> cuts;
    for (auto& [code, members] : by_class) assign_class(code, members, spec, cuts);
    return finalize(spec, cuts, items);
}

SplitManifest split_gloss(const std::vector<SplitItem>& items, const SplitSpec& spec) {
    check_ratios(spec);
    std::map<std::string, std::string> gloss_class;
    std::map<std::string, std::vector<std::string>> gloss_videos;
    for (const auto& item : items) {
        auto [it, inserted] = gloss_class.emplace(item.gloss, item.class_code);
        if (!inserted && it->second != item.class_code)
            throw InconsistentGlossLabel(item.gloss);
        gloss_videos[item.gloss].push_back(item.video_id);
    }
    std::map<std::string, std::vector<std::string>> glosses_by_class;
    for (const auto& [gloss, code] : gloss_class) glosses_by_class[code].push_back(gloss);
    for (const auto& [code, glosses] : glosses_by_class)
        if (glosses.size() < 3)
            throw TooFewSamples(code, static_cast<long long>(glosses.size()));

    std::array<std::vector<std::string>, 3> gloss_cuts;
    for (auto& [code, glosses] : glosses_by_class)
        assign_class(code, glosses, spec, gloss_cuts);

    std::array<std::vector<std::string>, 3> cuts;
    for (int cut = 0; cut < 3; ++cut)
        for (const auto& gloss : gloss_cuts[static_cast<std::size_t>(cut)])
            for (const auto& id : gloss_videos[gloss])
                cuts[static_cast<std::size_t>(cut)].push_back(id);
    return finalize(spec, cuts, items);
}

SplitManifest split_phoneme(const std::vector<SignRecord>& records, const SplitSpec& spec) {
    SplitManifest manifest = split_phoneme(split_items(records, spec.kind), spec);
    manifest.dataset_hash = dataset_content_hash(records); // full six-code labels
    return manifest;
}

SplitManifest split_gloss(const std::vector<SignRecord>& records, const SplitSpec& spec) {
    SplitManifest manifest = split_gloss(split_items(records, spec.kind), spec);
    manifest.dataset_hash = dataset_content_hash(records);
    return manifest;
}

std::vector<SplitViolation> verify_split(const SplitManifest& manifest,
                                         const std::vector<SplitItem>& items) {
    std::vector<SplitViolation> violations;
    std::map<std::string, const SplitItem*> by_id;
    for (const auto& item : items) by_id[item.video_id] = &item;

    const std::array<const std::vector<std::string>*, 3> cuts = {
        &manifest.train, &manifest.val, &manifest.test};
    static const std::array<std::string, 3> cut_names = {"train", "val", "test"};

    std::map<std::string, int> membership;
    for (int c = 0; c < 3; ++c) {
        for (const auto& id : *cuts[static_cast<std::size_t>(c)]) {
            if (!by_id.count(id))
                violations.push_back({"UnknownId", id + " in " + cut_names[static_cast<std::size_t>(c)]});
            auto [it, inserted] = membership.emplace(id, c);
            if (!inserted)
                violations.push_back({"Disjointness",
                                      id + " in both " + cut_names[static_cast<std::size_t>(it->second)] +
                                          " and " + cut_names[static_cast<std::size_t>(c)]});
        }
    }
    for (const auto& item : items)
        if (!membership.count(item.video_id))
            violations.push_back({"Coverage", item.video_id + " missing from all cuts"});

    // per-class presence and ratio deviation, in the mode's allocation unit
    bool gloss_mode = manifest.spec.mode == SplitMode::Gloss;
    std::map<std::string, std::set<std::string>> class_units; // class -> unit set
    std::map<std::string, std::array<std::set<std::string>, 3>> class_unit_cuts;
    std::map<std::string, std::set<int>> gloss_cut_span;
    for (const auto& item : items) {
        auto it = membership.find(item.video_id);
        if (it == membership.end()) continue;
        std::string unit = gloss_mode ? item.gloss : item.video_id;
        class_units[item.class_code].insert(unit);
        class_unit_cuts[item.class_code][static_cast<std::size_t>(it->second)].insert(unit);
        if (gloss_mode) gloss_cut_span[item.gloss].insert(it->second);
    }
    for (const auto& [code, units] : class_units) {
        auto n = static_cast<double>(units.size());
        for (int c = 0; c < 3; ++c) {
            auto count = static_cast<double>(
                class_unit_cuts[code][static_cast<std::size_t>(c)].size());
            if (count < 1) {
                violations.push_back({"MissingClass", "class \"" + code + "\" absent from " +
                                                          cut_names[static_cast<std::size_t>(c)]});
                continue;
            }
            double ideal = n * manifest.spec.ratios[static_cast<std::size_t>(c)];
            double feasible = std::clamp(ideal, 1.0, std::max(1.0, n - 2.0));
            if (std::abs(count - feasible) > 1.0 + 1e-9)
                violations.push_back(
                    {"RatioDeviation", "class \"" + code + "\" has " + std::to_string(count) +
                                           " of " + std::to_string(n) + " in " +
                                           cut_names[static_cast<std::size_t>(c)]});
        }
    }
    if (gloss_mode) {
        for (const auto& [gloss, span] : gloss_cut_span)
            if (span.size() > 1)
                violations.push_back({"GlossLeak", "gloss \"" + gloss + "\" spans cuts"});
    }
    return violations;
}

std::vector<SplitViolation> verify_split(const SplitManifest& manifest,
                                         const std::vector<SignRecord>& records) {
    return verify_split(manifest, split_items(records, manifest.spec.kind));
}

std::string dataset_content_hash(const std::vector<SplitItem>& items) {
    std::vector<std::string> lines;
    lines.reserve(items.size());
    for (const auto& item : items)
        lines.push_back(item.video_id + "|" + item.gloss + "|" + item.class_code);
    std::sort(lines.begin(), lines.end());
    std::uint64_t h = kFnvOffset;
    for (const auto& line : lines) {
        h = fnv1a(h, line);
        h = fnv1a(h, "\n");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string dataset_content_hash(const std::vector<SignRecord>& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& rec : records) {
        std::string line = rec.video_id + "|" + rec.gloss;
        for (PropertyKind kind : all_property_kinds())
            line += "|" + rec.label.code(kind);
        lines.push_back(std::move(line));
    }
    std::sort(lines.begin(), lines.end());
    std::uint64_t h = kFnvOffset;
    for (const auto& line : lines) {
        h = fnv1a(h, line);
        h = fnv1a(h, "\n");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "ppr-split-v1";
    doc["property"] = std::string(property_kind_name(manifest.spec.kind));
    doc["mode"] = std::string(split_mode_name(manifest.spec.mode));
    doc["ratios"] = manifest.spec.ratios;
    doc["seed"] = manifest.spec.seed;
    doc["dataset_hash"] = manifest.dataset_hash;
    doc["train"] = manifest.train;
    doc["val"] = manifest.val;
    doc["test"] = manifest.test;
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

SplitManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "ppr-split-v1")
        throw FormatError(path.string() + ": not a split manifest");
    SplitManifest manifest;
    auto kind = property_kind_from_name(doc.at("property").get<std::string>());
    auto mode = split_mode_from_name(doc.at("mode").get<std::string>());
    if (!kind || !mode) throw FormatError(path.string() + ": bad property or mode");
    manifest.spec.kind = *kind;
    manifest.spec.mode = *mode;
    manifest.spec.ratios = doc.at("ratios").get<std::array<double, 3>>();
    manifest.spec.seed = doc.at("seed").get<std::uint64_t>();
    manifest.dataset_hash = doc.at("dataset_hash").get<std::string>();
    manifest.train = doc.at("train").get<std::vector<std::string>>();
    manifest.val = doc.at("val").get<std::vector<std::string>>();
    manifest.test = doc.at("test").get<std::vector<std::string>>();
    return manifest;
}

} // namespace ppr
