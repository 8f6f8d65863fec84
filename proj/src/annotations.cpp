#include "contactforge/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {

const char* kStage = "annot-io";
using nlohmann::json;
using nlohmann::ordered_json;

std::string where(const AnnotationRecord& rec, std::size_t contact) {
    return "image '" + rec.image_id + "' contact " + std::to_string(contact);
}

AnnotationRecord record_from_json(const json& j) {
    AnnotationRecord rec;
    if (!j.is_object()) throw InputError(kStage, "annotation must be a JSON object");
    rec.image_id = j.at("image_id").get<std::string>();
    rec.width = j.at("width").get<int>();
    rec.height = j.at("height").get<int>();
    const auto& contacts = j.at("contacts");
    if (!contacts.is_array()) throw InputError(kStage, "image '" + rec.image_id + "': contacts must be an array");
    for (std::size_t i = 0; i < contacts.size(); ++i) {
        const auto& c = contacts[i];
        const int id = c.at("part").get<int>();
        if (id == 0) throw InputError(kStage, where(rec, i) + ": background not annotatable");
        if (!is_body_part(id))
            throw InputError(kStage, where(rec, i) + ": part id " + std::to_string(id) + " outside 1..17");
        ContactPolygon poly;
        poly.part = static_cast<Part>(id);
        for (const auto& pt : c.at("polygon")) {
            if (!pt.is_array() || pt.size() != 2)
                throw InputError(kStage, where(rec, i) + ": polygon points must be [x, y] pairs");
            poly.polygon.push_back({pt[0].get<double>(), pt[1].get<double>()});
        }
        rec.contacts.push_back(std::move(poly));
    }
    check_record(rec);
    return rec;
}

ordered_json record_to_json(const AnnotationRecord& rec) {
    ordered_json j;
    j["image_id"] = rec.image_id;
    j["width"] = rec.width;
    j["height"] = rec.height;
    j["contacts"] = ordered_json::array();
    for (const auto& c : rec.contacts) {
        ordered_json poly = ordered_json::array();
        for (const auto& p : c.polygon) poly.push_back({p.x, p.y});
        ordered_json jc;
        jc["part"] = part_id(c.part);
        jc["polygon"] = std::move(poly);
        j["contacts"].push_back(std::move(jc));
    }
    return j;
}

void fill_polygon(ContactMap& map, const ContactPolygon& contact) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : contact.polygon) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(xmin - 0.5)));
    const int x1 = std::min(map.width() - 1, static_cast<int>(std::floor(xmax - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(ymin - 0.5)));
    const int y1 = std::min(map.height() - 1, static_cast<int>(std::floor(ymax - 0.5)));
    const auto label = static_cast<std::uint8_t>(part_id(contact.part));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (winding_number(contact.polygon, {x + 0.5, y + 0.5}) != 0) map.set(x, y, label);
}

std::size_t polygon_pixel_count(const AnnotationRecord& rec, const ContactPolygon& contact) {
    ContactMap map(rec.width, rec.height);
    fill_polygon(map, contact);
    return static_cast<std::size_t>(std::count_if(map.labels().begin(), map.labels().end(),
                                                   [](std::uint8_t l) { return l != 0; }));
}

}  // namespace

void check_record(const AnnotationRecord& rec) {
    if (rec.width < 1 || rec.height < 1)
        throw InputError(kStage, "image '" + rec.image_id + "': width and height must be >= 1");
    for (std::size_t i = 0; i < rec.contacts.size(); ++i) {
        const auto& c = rec.contacts[i];
        if (part_id(c.part) == 0) throw InputError(kStage, where(rec, i) + ": background not annotatable");
        if (!is_body_part(part_id(c.part))) throw InputError(kStage, where(rec, i) + ": part id outside 1..17");
        if (c.polygon.size() < 3)
            throw InputError(kStage, where(rec, i) + ": polygon has " + std::to_string(c.polygon.size()) +
                                         " points (need >= 3)");
        for (const auto& p : c.polygon) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < -rec.width || p.x > 2.0 * rec.width ||
                p.y < -rec.height || p.y > 2.0 * rec.height)
                throw InputError(kStage, where(rec, i) + ": polygon point out of bounds");
        }
    }
}

std::vector<AnnotationRecord> parse_annotations_text(const std::string& text, const std::string& source) {
    std::vector<AnnotationRecord> out;
    // Whole-document form: one object or an array of objects.
    json whole = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (!whole.is_discarded() && (whole.is_object() || whole.is_array())) {
        try {
            if (whole.is_object()) {
                out.push_back(record_from_json(whole));
            } else {
                for (const auto& j : whole) out.push_back(record_from_json(j));
            }
        } catch (const json::exception& e) {
            throw InputError(kStage, source + ": " + e.what());
        }
        return out;
    }

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw InputError(kStage, source + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError(kStage, source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<AnnotationRecord> parse_annotations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(kStage, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_annotations_text(ss.str(), path.string());
}

std::string serialize_record(const AnnotationRecord& rec) { return record_to_json(rec).dump(); }

void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    for (const auto& r : records) out << serialize_record(r) << '\n';
}

int winding_number(const std::vector<Point2>& polygon, const Point2& p) {
    int wn = 0;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = polygon[i];
        const Point2& b = polygon[(i + 1) % n];
        const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if (a.y <= p.y) {
            if (b.y > p.y && side > 0.0) ++wn;
        } else {
            if (b.y <= p.y && side < 0.0) --wn;
        }
    }
    return wn;
}

ContactMap rasterize_polygons(const AnnotationRecord& rec) {
    check_record(rec);
    ContactMap map(rec.width, rec.height);
    for (const auto& c : rec.contacts) fill_polygon(map, c);
    return map;
}

DatasetStats dataset_stats(const std::vector<AnnotationRecord>& records, const SizeThresholds& th) {
    if (records.empty()) throw InputError(kStage, "no records to summarize");
    DatasetStats stats;
    stats.images = records.size();
    for (const auto& rec : records) {
        check_record(rec);
        stats.contacts += rec.contacts.size();
        ++stats.contacts_per_image[rec.contacts.size()];
        const double image_area = static_cast<double>(rec.width) * rec.height;
        for (const auto& c : rec.contacts) {
            ++stats.per_part[part_id(c.part)];
            const double fraction = static_cast<double>(polygon_pixel_count(rec, c)) / image_area;
            stats.area_fractions.push_back(fraction);
            ++stats.size_buckets[static_cast<int>(size_bucket(fraction, th))];
        }
    }
    return stats;
}

std::string stats_to_json(const DatasetStats& stats) {
    ordered_json j;
    j["images"] = stats.images;
    j["contacts"] = stats.contacts;
    ordered_json per_part;
    for (int id = 1; id <= kNumParts; ++id) per_part[std::string(kPartNames[id])] = stats.per_part[id];
    j["per_part"] = per_part;
    ordered_json hist;
    for (const auto& [k, v] : stats.contacts_per_image) hist[std::to_string(k)] = v;
    j["contacts_per_image"] = hist;
    ordered_json buckets;
    for (int b = 0; b < 3; ++b) buckets[std::string(kSizeBucketNames[b])] = stats.size_buckets[b];
    j["size_buckets"] = buckets;
    return j.dump(2);
}

Agreement agreement(const ContactMap& a, const ContactMap& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw InputError(kStage, "agreement needs maps of equal size");
    std::array<bool, kNumClasses> in_a{}, in_b{};
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto la = a.labels()[i], lb = b.labels()[i];
        in_a[la] = true;
        in_b[lb] = true;
        inter += (la != 0 && lb != 0);
        uni += (la != 0 || lb != 0);
    }
    int part_inter = 0, part_union = 0;
    for (int id = 1; id <= kNumParts; ++id) {
        part_inter += in_a[id] && in_b[id];
        part_union += in_a[id] || in_b[id];
    }
    Agreement out;
    out.part = part_union == 0 ? 1.0 : static_cast<double>(part_inter) / part_union;
    out.pixel = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return out;
}

PalmSoleSubsets load_palm_sole_subsets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(kStage, "cannot open " + path.string());
    PalmSoleSubsets out;
    try {
        const auto j = json::parse(in);
        for (const auto& [name, indices] : j.items()) {
            const auto part = part_from_name(name);
            if (!part || !is_hand_or_foot(*part))
                throw InputError(kStage, path.string() + ": '" + name + "' is not L_Hand, R_Hand, L_Foot or R_Foot");
            out[*part] = indices.get<std::vector<std::uint32_t>>();
        }
    } catch (const json::exception& e) {
        throw InputError(kStage, path.string() + ": " + e.what());
    }
    return out;
}

std::vector<std::uint32_t> lift_to_3d(const AnnotationRecord& rec, const BodyMesh& body,
                                      const PalmSoleSubsets& palm_sole) {
    require_valid(body);
    for (const auto& [part, subset] : palm_sole) {
        if (!is_hand_or_foot(part))
            throw InputError(kStage, std::string(part_name(part)) + " cannot carry a palm/sole subset");
        for (auto v : subset)
            if (v >= body.vertices.size() || body.part_of_vertex[v] != part)
                throw InputError(kStage, "subset vertex " + std::to_string(v) + " does not belong to " +
                                             std::string(part_name(part)));
    }
    std::set<Part> contacted;
    for (const auto& c : rec.contacts) contacted.insert(c.part);

    std::vector<std::uint32_t> out;
    for (Part part : contacted) {
        const auto subset = palm_sole.find(part);
        if (is_hand_or_foot(part) && subset != palm_sole.end()) {
            out.insert(out.end(), subset->second.begin(), subset->second.end());
        } else {
            const auto all = part_vertex_indices(body, part);
            out.insert(out.end(), all.begin(), all.end());
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void write_vertex_indices(const std::filesystem::path& path, const std::vector<std::uint32_t>& indices) {
    std::ofstream out(path);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    for (auto v : indices) out << v << '\n';
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
    const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
    for (double x : r)
        if (!(x > 0.0)) throw InputError(kStage, "split ratios must be positive");
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw InputError(kStage, "split ratios must sum to 1");

    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const double exact = static_cast<double>(n) * r[k];
        sizes[k] = static_cast<std::size_t>(std::floor(exact));
        remainder[k] = exact - static_cast<double>(sizes[k]);
        assigned += sizes[k];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 3]];
    return sizes;
}

DatasetSplit split_dataset(const std::vector<AnnotationRecord>& records, const SplitRatios& ratios,
                           std::uint64_t seed, const GroupKey& group_key) {
    if (records.empty()) throw InputError(kStage, "cannot split an empty dataset");

    // Units are record indices, or groups of record indices.
    std::vector<std::vector<std::size_t>> units;
    if (group_key) {
        std::map<std::string, std::size_t> slot;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto [it, inserted] = slot.emplace(group_key(records[i]), units.size());
            if (inserted) units.emplace_back();
            units[it->second].push_back(i);
        }
    } else {
        units.resize(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) units[i] = {i};
    }

    // Fisher-Yates with raw engine output so the permutation is identical
    // across standard library implementations.
    std::mt19937_64 rng(seed);
    for (std::size_t i = units.size() - 1; i > 0; --i) std::swap(units[i], units[rng() % (i + 1)]);

    const auto sizes = split_sizes(units.size(), ratios);
    DatasetSplit out;
    std::array<std::vector<AnnotationRecord>*, 3> dst = {&out.train, &out.val, &out.test};
    std::size_t u = 0;
    for (int k = 0; k < 3; ++k)
        for (std::size_t c = 0; c < sizes[k]; ++c, ++u)
            for (auto idx : units[u]) dst[k]->push_back(records[idx]);
    return out;
}

AnnotationRecord rescale_record(const AnnotationRecord& rec, int long_side) {
    if (rec.width < 1 || rec.height < 1) throw InputError(kStage, "record dimensions must be >= 1");
    if (long_side < 1) throw InputError(kStage, "long side must be >= 1");
    const double s = static_cast<double>(long_side) / std::max(rec.width, rec.height);
    AnnotationRecord out = rec;
    if (s == 1.0) return out;
    out.width = std::max(1, static_cast<int>(std::lround(rec.width * s)));
    out.height = std::max(1, static_cast<int>(std::lround(rec.height * s)));
    for (auto& c : out.contacts)
        for (auto& p : c.polygon) p = {p.x * s, p.y * s};
    return out;
}

}  // namespace contactforge
