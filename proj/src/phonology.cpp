#include "ppr/phonology.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "json.hpp"

namespace ppr {

using nlohmann::json;

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string_view property_kind_name(PropertyKind kind) {
    switch (kind) {
    case PropertyKind::Flexion: return "flexion";
    case PropertyKind::MajorLocation: return "major_location";
    case PropertyKind::MinorLocation: return "minor_location";
    case PropertyKind::Movement: return "movement";
    case PropertyKind::SelectedFingers: return "selected_fingers";
    case PropertyKind::SignType: return "sign_type";
    }
    return "?";
}

std::optional<PropertyKind> property_kind_from_name(std::string_view name) {
    for (PropertyKind kind : all_property_kinds()) {
        if (property_kind_name(kind) == name) return kind;
    }
    return std::nullopt;
}

UnknownValue::UnknownValue(PropertyKind k, std::string c, int line)
    : Error("UnknownValue",
            std::string(property_kind_name(k)) + " has no value \"" + c + "\"" +
                (line >= 0 ? " (line " + std::to_string(line) + ")" : "")),
      kind(k), code(std::move(c)) {}

const std::vector<PropertyValue>& Taxonomy::values(PropertyKind kind) const {
    return values_[static_cast<int>(kind)];
}

const PropertyValue* Taxonomy::find(PropertyKind kind, std::string_view code) const {
    int idx = index_of(kind, code);
    return idx < 0 ? nullptr : &values(kind)[static_cast<std::size_t>(idx)];
}

int Taxonomy::index_of(PropertyKind kind, std::string_view code) const {
    std::string needle = trim(code);
    const auto& vals = values(kind);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i].code == needle) return static_cast<int>(i);
    }
    return -1;
}

int Taxonomy::value_count(PropertyKind kind) const {
    return static_cast<int>(values(kind).size());
}

int Taxonomy::nonzero_value_count(PropertyKind kind) const {
    int n = 0;
    for (const auto& v : values(kind)) {
        if (v.cardinality > 0) ++n;
    }
    return n;
}

long long Taxonomy::cardinality_sum(PropertyKind kind) const {
    long long total = 0;
    for (const auto& v : values(kind)) total += v.cardinality;
    return total;
}

void Taxonomy::set_values(PropertyKind kind, std::vector<PropertyValue> values) {
    for (auto& v : values) v.code = trim(v.code);
    values_[static_cast<int>(kind)] = std::move(values);
}

void Taxonomy::save_json(const std::filesystem::path& path) const {
    json doc;
    doc["format"] = "ppr-taxonomy-v1";
    json props = json::object();
    for (PropertyKind kind : all_property_kinds()) {
        json rows = json::array();
        for (const auto& v : values(kind)) {
            rows.push_back(json::array({v.code, v.definition, v.cardinality}));
        }
        props[std::string(property_kind_name(kind))] = rows;
    }
    doc["properties"] = props;
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

Taxonomy Taxonomy::load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    json doc = json::parse(in, nullptr, /*allow_exceptions=*/true);
    if (doc.value("format", "") != "ppr-taxonomy-v1")
        throw Error("FormatError", "not a taxonomy file: " + path.string());
    Taxonomy tax;
    for (PropertyKind kind : all_property_kinds()) {
        std::string key(property_kind_name(kind));
        if (!doc["properties"].contains(key))
            throw Error("FormatError", "taxonomy missing kind " + key);
        std::vector<PropertyValue> vals;
        for (const auto& row : doc["properties"][key]) {
            PropertyValue v;
            v.code = row.at(0).get<std::string>();
            v.definition = row.at(1).get<std::string>();
            v.cardinality = row.at(2).get<long long>();
            if (v.cardinality < 0)
                throw Error("FormatError", "negative cardinality for " + v.code);
            vals.push_back(std::move(v));
        }
        for (std::size_t i = 0; i < vals.size(); ++i)
            for (std::size_t j = i + 1; j < vals.size(); ++j)
                if (trim(vals[i].code) == trim(vals[j].code))
                    throw Error("FormatError", "duplicate code " + vals[i].code +
                                                   " under " + key);
        tax.set_values(kind, std::move(vals));
    }
    return tax;
}

namespace {

Taxonomy make_builtin() {
    Taxonomy tax;
    tax.set_values(PropertyKind::Flexion, {
        {"1", "Fully open: no joints of the selected fingers are flexed", 5037},
        {"2", "Bent (closed): non-base joints are flexed", 693},
        {"3", "Flat-open: base joints flexed less than 90 degrees", 909},
        {"4", "Flat-closed: base joints flexed 90 degrees or more", 507},
        {"5", "Curved open: base and non-base joints flexed without contact", 1130},
        {"6", "Curved closed: base and non-base joints flexed with contact", 642},
        {"7", "Fully closed: base and non-base joints fully flexed", 795},
        {"Stacked", "Stacked: flexion of the selected fingers differs", 123},
        {"Crossed", "Crossed", 181},
    });
    tax.set_values(PropertyKind::MajorLocation, {
        {"Head", "Sign is produced on or near the head", 3137},
        {"Arm", "Sign is produced on or near the arm", 219},
        {"Body", "Sign is produced on or near the trunk", 1019},
        {"Hand", "Sign is produced on or near the non-dominant hand", 2194},
        {"Neutral", "Sign is not produced in another location on the body", 3448},
        {"Other", "Sign is produced in another unspecified location on the body", 0},
    });
    tax.set_values(PropertyKind::MinorLocation, {
        {"HeadTop", "Sign is produced on top of the head", 20},
        {"Forehead", "Sign is produced at the forehead", 246},
        {"Eye", "Sign is produced near the eye", 616},
        {"CheekNose", "Sign is produced on the cheek or nose", 511},
        {"UpperLip", "Sign is produced on the upper lip", 53},
        {"Mouth", "Sign is produced on the mouth", 431},
        {"Chin", "Sign is produced on the chin", 717},
        {"UnderChin", "Sign is produced under the chin", 74},
        {"UpperArm", "Sign is produced on the upper arm", 39},
        {"ElbowFront", "Sign is produced in the crook of the elbow", 0},
        {"ElbowBack", "Sign is produced on the outside of the elbow", 13},
        {"ForearmBack", "Sign is produced on the outside of the forearm", 32},
        {"ForearmFront", "Sign is produced on the inside of the forearm", 10},
        {"ForearmUlnar", "Sign is produced on the ulnar side of the forearm", 56},
        {"WristBack", "Sign is produced on the back of the wrist", 23},
        {"WristFront", "Sign is produced on the front of the wrist", 0},
        {"Neck", "Sign is produced on the neck", 68},
        {"Shoulder", "Sign is produced on the shoulder", 101},
        {"Clavicle", "Sign is produced on the clavicle", 419},
        {"TorsoTop", "Sign is produced in the upper third of the torso", 0},
        {"TorsoMid", "Sign is produced in the middle third of the torso", 0},
        {"TorsoBottom", "Sign is produced in the bottom third of the torso", 19},
        {"Waist", "Sign is produced at the waist", 34},
        {"Hips", "Sign is produced on the hips", 59},
        {"Palm", "Sign is produced on the palm of the non-dominant hand", 925},
        {"FingerFront", "Sign is produced on the front of the fingers of the non-dominant hand", 99},
        {"PalmBack", "Sign is produced on the back of the palm of the non-dominant hand", 218},
        {"FingerBack", "Sign is produced on the back of the fingers of the non-dominant hand", 186},
        {"FingerRadial", "Sign is produced on the radial side of the non-dominant hand", 410},
        {"FingerUlnar", "Sign is produced on the ulnar side of the non-dominant hand", 40},
        {"FingerTip", "Sign is produced on the tip of the fingers of the non-dominant hand", 158},
        {"Heel", "Sign is produced on the heel of the non-dominant hand", 88},
        {"Other", "Sign is produced in an unspecified location on the body", 707},
        {"Neutral", "Sign is not produced on or near the body", 3390},
    });
    tax.set_values(PropertyKind::Movement, {
        {"Straight", "Straight movement of the dominant hand through xyz space", 1938},
        {"Curved", "Single arc movement of the dominant hand through xyz space", 1255},
        {"BackAndForth", "Sequence of more than one straight or curved movements", 3549},
        {"Circular", "Circular movement of the dominant hand through space", 1129},
        {"None", "Entire sign (or first free morpheme) has no path movement", 1748},
        {"Other", "Sign has another unspecified path movement", 398},
    });
    tax.set_values(PropertyKind::SelectedFingers, {
        {"imrp", "index, middle, ring, pinky finger", 4824},
        {"imr", "index, middle, ring finger", 95},
        {"mrp", "middle, ring, pinky finger", 28},
        {"im", "index, middle finger", 1296},
        {"ip", "index, pinky finger", 51},
        {"mr", "middle, ring finger", 0},
        {"mp", "middle, pinky finger", 0},
        {"rp", "ring, pinky finger", 0},
        {"i", "index finger", 2547},
        {"m", "middle finger", 259},
        {"r", "ring finger", 0},
        {"p", "pinky", 407},
        {"thumb", "thumb", 510},
    });
    tax.set_values(PropertyKind::SignType, {
        {"One Handed", "Sign only recruits one hand", 3939},
        {"Symmetrical Or Alternating",
         "Sign recruits both hands with identical specifications; movement is "
         "symmetrical or alternating", 3358},
        {"Asymmetrical Same Handshape",
         "Sign recruits both hands, only the dominant hand moves, handshape "
         "specifications are the same", 938},
        {"Asymmetrical Different Handshape",
         "Sign recruits both hands, only the dominant hand moves, handshape "
         "specifications differ", 1639},
        {"Other", "Sign violates the symmetry and dominance conditions", 143},
    });
    return tax;
}

} // namespace

const Taxonomy& builtin_taxonomy() {
    static const Taxonomy tax = make_builtin();
    return tax;
}

ValidationResult validate_label(const PhonologicalLabel& label, const Taxonomy& tax) {
    ValidationResult result;
    for (PropertyKind kind : all_property_kinds()) {
        const std::string& code = label.code(kind);
        if (tax.find(kind, code) == nullptr) {
            result.unknown.push_back({kind, trim(code)});
        }
    }
    return result;
}

std::string majority_value(PropertyKind kind,
                           const std::vector<PhonologicalLabel>& labels,
                           const Taxonomy& tax) {
    if (labels.empty()) throw EmptyDataset();
    // Counted by taxonomy position so the tie-break falls out of the scan order.
    std::vector<long long> counts(tax.values(kind).size(), 0);
    std::map<std::string, long long> extra; // codes outside the taxonomy
    for (const auto& label : labels) {
        int idx = tax.index_of(kind, label.code(kind));
        if (idx >= 0) {
            ++counts[static_cast<std::size_t>(idx)];
        } else {
            ++extra[trim(label.code(kind))];
        }
    }
    long long best_count = -1;
    std::string best_code;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > best_count) {
            best_count = counts[i];
            best_code = tax.values(kind)[i].code;
        }
    }
    for (const auto& [code, count] : extra) {
        if (count > best_count) {
            best_count = count;
            best_code = code;
        }
    }
    return best_code;
}

} // namespace ppr
