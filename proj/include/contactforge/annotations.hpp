#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "contactforge/body_model.hpp"
#include "contactforge/contact_map.hpp"
#include "contactforge/size_bucket.hpp"

namespace contactforge {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

struct ContactPolygon {
    Part part = Part::Head;
    std::vector<Point2> polygon;
    bool operator==(const ContactPolygon&) const = default;
};

// One annotated image: polygons in pixel coordinates, each with a body part.
struct AnnotationRecord {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::vector<ContactPolygon> contacts;
    bool operator==(const AnnotationRecord&) const = default;
};

// Throws InputError naming the image and contact index on violations.
void check_record(const AnnotationRecord& rec);

// Accepts a single JSON object, a JSON array of objects, or JSON-lines.
std::vector<AnnotationRecord> parse_annotations(const std::filesystem::path& path);
std::vector<AnnotationRecord> parse_annotations_text(const std::string& text, const std::string& source = "<memory>");

// Canonical single-line JSON for one record.
std::string serialize_record(const AnnotationRecord& rec);
void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);

// Nonzero-winding fill at pixel centers; later contacts overwrite earlier ones.
ContactMap rasterize_polygons(const AnnotationRecord& rec);

// Winding number of `polygon` around `p` (half-open crossing rule).
int winding_number(const std::vector<Point2>& polygon, const Point2& p);

struct DatasetStats {
    std::size_t images = 0;
    std::size_t contacts = 0;
    std::array<std::size_t, kNumClasses> per_part{};       // index 0 unused
    std::map<std::size_t, std::size_t> contacts_per_image;  // contacts -> images
    std::vector<double> area_fractions;                     // one per contact, record order
    std::array<std::size_t, 3> size_buckets{};              // small, medium, large
};

DatasetStats dataset_stats(const std::vector<AnnotationRecord>& records, const SizeThresholds& th = {});
std::string stats_to_json(const DatasetStats& stats);

struct Agreement {
    double part = 1.0;   // Jaccard of the part-id sets
    double pixel = 1.0;  // IoU of binary contact masks
};

Agreement agreement(const ContactMap& a, const ContactMap& b);

// Part/subset vertex lists for hands and feet, keyed by part.
using PalmSoleSubsets = std::map<Part, std::vector<std::uint32_t>>;

PalmSoleSubsets load_palm_sole_subsets(const std::filesystem::path& path);

// Template vertices for every contacted part; hands and feet contribute only
// their palm/sole subset when one is supplied. Sorted, unique.
std::vector<std::uint32_t> lift_to_3d(const AnnotationRecord& rec, const BodyMesh& body,
                                      const PalmSoleSubsets& palm_sole);

void write_vertex_indices(const std::filesystem::path& path, const std::vector<std::uint32_t>& indices);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

// Largest-remainder rounding of n * ratios; leftover units go to the largest
// fractional parts, ties to the earlier split.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

struct DatasetSplit {
    std::vector<AnnotationRecord> train;
    std::vector<AnnotationRecord> val;
    std::vector<AnnotationRecord> test;
};

// Seeded shuffle then cut by split_sizes. With a group key, whole groups are
// shuffled and assigned so no group spans two splits; sizes then count groups.
using GroupKey = std::function<std::string(const AnnotationRecord&)>;
DatasetSplit split_dataset(const std::vector<AnnotationRecord>& records, const SplitRatios& ratios,
                           std::uint64_t seed, const GroupKey& group_key = {});

inline constexpr int kDefaultLongSide = 400;

// Uniform scale so max(width, height) == long_side.
AnnotationRecord rescale_record(const AnnotationRecord& rec, int long_side = kDefaultLongSide);

}  // namespace contactforge
