#ifndef PPR_PHONOLOGY_HPP
#define PPR_PHONOLOGY_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppr/error.hpp"

namespace ppr {

/// The six manual phonological properties, in their canonical order.
enum class PropertyKind {
    Flexion = 0,
    MajorLocation,
    MinorLocation,
    Movement,
    SelectedFingers,
    SignType,
};

inline constexpr int kPropertyKindCount = 6;

constexpr std::array<PropertyKind, kPropertyKindCount> all_property_kinds() {
    return {PropertyKind::Flexion,         PropertyKind::MajorLocation,
            PropertyKind::MinorLocation,   PropertyKind::Movement,
            PropertyKind::SelectedFingers, PropertyKind::SignType};
}

std::string_view property_kind_name(PropertyKind kind);
std::optional<PropertyKind> property_kind_from_name(std::string_view name);

/// One admissible value of a property: short code, human-readable meaning,
/// and how many corpus videos carry it.
struct PropertyValue {
    std::string code;
    std::string definition;
    long long cardinality = 0;
};

class UnknownValue : public Error {
public:
    UnknownValue(PropertyKind kind, std::string code, int line = -1);
    PropertyKind kind;
    std::string code;
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("EmptyDataset", "no labels given") {}
};

/// Immutable per-kind value inventory. Safe to share across threads once built.
class Taxonomy {
public:
    Taxonomy() = default;

    /// Values of a kind in table order.
    const std::vector<PropertyValue>& values(PropertyKind kind) const;

    /// Lookup by code; the query is trimmed of surrounding whitespace first.
    /// Returns nullptr when the code is not in the inventory.
    const PropertyValue* find(PropertyKind kind, std::string_view code) const;

    /// Position of a code within its kind's table order, or -1.
    int index_of(PropertyKind kind, std::string_view code) const;

    int value_count(PropertyKind kind) const;
    int nonzero_value_count(PropertyKind kind) const;
    long long cardinality_sum(PropertyKind kind) const;

    void set_values(PropertyKind kind, std::vector<PropertyValue> values);

    void save_json(const std::filesystem::path& path) const;
    static Taxonomy load_json(const std::filesystem::path& path);

private:
    std::array<std::vector<PropertyValue>, kPropertyKindCount> values_;
};

/// The embedded WLASL-Lex inventory (values, definitions, cardinalities).
const Taxonomy& builtin_taxonomy();

/// A six-tuple of value codes, one per property kind.
struct PhonologicalLabel {
    std::array<std::string, kPropertyKindCount> codes;

    const std::string& code(PropertyKind kind) const {
        return codes[static_cast<int>(kind)];
    }
    std::string& code(PropertyKind kind) { return codes[static_cast<int>(kind)]; }

    bool operator==(const PhonologicalLabel&) const = default;
};

struct LabelIssue {
    PropertyKind kind;
    std::string code;
};

struct ValidationResult {
    std::vector<LabelIssue> unknown;
    bool valid() const { return unknown.empty(); }
};

/// Accepts iff every component code resolves against the taxonomy.
ValidationResult validate_label(const PhonologicalLabel& label, const Taxonomy& tax);

/// Most frequent code of `kind` across the labels; ties break toward the
/// earlier taxonomy table position. Throws EmptyDataset on no labels.
std::string majority_value(PropertyKind kind,
                           const std::vector<PhonologicalLabel>& labels,
                           const Taxonomy& tax);

std::string trim(std::string_view s);

} // namespace ppr

#endif
