#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "contactforge/contact_map.hpp"
#include "contactforge/size_bucket.hpp"

namespace contactforge {

// counts[gt * kNumClasses + pred]. Merging is associative and commutative.
struct ConfusionMatrix {
    std::array<std::uint64_t, kNumClasses * kNumClasses> counts{};

    std::uint64_t& at(int gt, int pred) { return counts[gt * kNumClasses + pred]; }
    std::uint64_t at(int gt, int pred) const { return counts[gt * kNumClasses + pred]; }

    void add(const ContactMap& pred, const ContactMap& gt);
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

enum class CAccDenominator {
    GtContact,  // fraction of gt-contact pixels predicted as any contact
    AllPixels,  // binary contact accuracy over every pixel
};

struct EvalOptions {
    CAccDenominator c_acc = CAccDenominator::GtContact;
    SizeThresholds sizes;
};

struct MetricSet {
    double sc_acc = 1.0;
    double c_acc = 1.0;
    double miou = 1.0;
    double wiou = 1.0;
    // IoU of every part present in gt or pred.
    std::map<int, double> per_part_iou;
};

struct EvalReport : MetricSet {
    // Only buckets that contain at least one gt region.
    std::map<SizeBucket, MetricSet> per_size;
};

MetricSet metrics_from_confusion(const ConfusionMatrix& cm, CAccDenominator c_acc = CAccDenominator::GtContact);

struct EvalPair {
    const ContactMap* pred;
    const ContactMap* gt;
};

// Pixel counts are pooled over the corpus before any ratio is taken. For the
// size breakdown every 4-connected same-label gt region is bucketed by its
// area fraction and only its pixels are scored.
EvalReport evaluate_corpus(std::span<const EvalPair> pairs, const EvalOptions& options = {});
EvalReport evaluate(const ContactMap& pred, const ContactMap& gt, const EvalOptions& options = {});

// Fixed field names, six decimals.
std::string report_to_json(const EvalReport& report);

}  // namespace contactforge
