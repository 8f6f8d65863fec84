#include "contactforge/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {

const char* kStage = "metrics";

void check_same_size(const ContactMap& a, const ContactMap& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw InputError(kStage, "prediction and ground truth differ in size");
}

// Component id per pixel for 4-connected runs of equal non-zero label; -1 on
// background.
std::vector<int> label_regions(const ContactMap& gt, std::vector<std::size_t>& region_sizes) {
    const int w = gt.width(), h = gt.height();
    std::vector<int> region(gt.size(), -1);
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < gt.size(); ++seed) {
        if (gt.labels()[seed] == 0 || region[seed] >= 0) continue;
        const int id = static_cast<int>(region_sizes.size());
        const auto label = gt.labels()[seed];
        std::size_t size = 0;
        region[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
                if (region[q] < 0 && gt.labels()[q] == label) {
                    region[q] = id;
                    stack.push_back(q);
                }
            }
        }
        region_sizes.push_back(size);
    }
    return region;
}

void write_metric_fields(std::ostringstream& out, const MetricSet& m, const std::string& indent) {
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    out << indent << "\"sc_acc\": " << num(m.sc_acc) << ",\n";
    out << indent << "\"c_acc\": " << num(m.c_acc) << ",\n";
    out << indent << "\"miou\": " << num(m.miou) << ",\n";
    out << indent << "\"wiou\": " << num(m.wiou) << ",\n";
    out << indent << "\"per_part\": {";
    bool first = true;
    for (const auto& [id, iou] : m.per_part_iou) {
        out << (first ? "" : ", ") << '"' << kPartNames[id] << "\": " << num(iou);
        first = false;
    }
    out << "}";
}

}  // namespace

void ConfusionMatrix::add(const ContactMap& pred, const ContactMap& gt) {
    check_same_size(pred, gt);
    for (std::size_t i = 0; i < gt.size(); ++i) ++at(gt.labels()[i], pred.labels()[i]);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    return *this;
}

MetricSet metrics_from_confusion(const ConfusionMatrix& cm, CAccDenominator c_acc) {
    std::array<std::uint64_t, kNumClasses> row{}, col{};
    std::uint64_t total = 0;
    for (int g = 0; g < kNumClasses; ++g)
        for (int p = 0; p < kNumClasses; ++p) {
            row[g] += cm.at(g, p);
            col[p] += cm.at(g, p);
            total += cm.at(g, p);
        }
    std::uint64_t gt_contact = 0, pred_contact = 0, semantic_hits = 0, binary_hits = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        gt_contact += row[c];
        pred_contact += col[c];
        semantic_hits += cm.at(c, c);
        for (int p = 1; p < kNumClasses; ++p) binary_hits += cm.at(c, p);
    }

    MetricSet m;
    m.sc_acc = gt_contact == 0 ? 1.0 : static_cast<double>(semantic_hits) / static_cast<double>(gt_contact);
    if (c_acc == CAccDenominator::GtContact) {
        m.c_acc = gt_contact == 0 ? 1.0 : static_cast<double>(binary_hits) / static_cast<double>(gt_contact);
    } else {
        m.c_acc = total == 0 ? 1.0 : static_cast<double>(binary_hits + cm.at(0, 0)) / static_cast<double>(total);
    }

    double iou_sum = 0.0, weighted = 0.0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (row[c] + col[c] == 0) continue;
        const double iou = static_cast<double>(cm.at(c, c)) / static_cast<double>(row[c] + col[c] - cm.at(c, c));
        m.per_part_iou[c] = iou;
        iou_sum += iou;
        if (gt_contact > 0) weighted += static_cast<double>(row[c]) / static_cast<double>(gt_contact) * iou;
    }
    m.miou = m.per_part_iou.empty() ? 1.0 : iou_sum / static_cast<double>(m.per_part_iou.size());
    if (gt_contact > 0) m.wiou = weighted;
    else m.wiou = pred_contact == 0 ? 1.0 : 0.0;
    return m;
}

EvalReport evaluate_corpus(std::span<const EvalPair> pairs, const EvalOptions& options) {
    if (pairs.empty()) throw InputError(kStage, "nothing to evaluate");
    ConfusionMatrix all;
    std::array<ConfusionMatrix, 3> by_size;
    std::array<bool, 3> seen{};
    for (const auto& [pred, gt] : pairs) {
        all.add(*pred, *gt);
        std::vector<std::size_t> sizes;
        const auto region = label_regions(*gt, sizes);
        const double area = static_cast<double>(gt->size());
        std::vector<int> bucket_of(sizes.size());
        for (std::size_t r = 0; r < sizes.size(); ++r) {
            bucket_of[r] = static_cast<int>(size_bucket(static_cast<double>(sizes[r]) / area, options.sizes));
            seen[bucket_of[r]] = true;
        }
        for (std::size_t i = 0; i < gt->size(); ++i)
            if (region[i] >= 0) ++by_size[bucket_of[region[i]]].at(gt->labels()[i], pred->labels()[i]);
    }
    EvalReport report;
    static_cast<MetricSet&>(report) = metrics_from_confusion(all, options.c_acc);
    for (int b = 0; b < 3; ++b)
        if (seen[b]) report.per_size[static_cast<SizeBucket>(b)] = metrics_from_confusion(by_size[b], options.c_acc);
    return report;
}

EvalReport evaluate(const ContactMap& pred, const ContactMap& gt, const EvalOptions& options) {
    const EvalPair pair{&pred, &gt};
    return evaluate_corpus(std::span<const EvalPair>(&pair, 1), options);
}

std::string report_to_json(const EvalReport& report) {
    std::ostringstream out;
    out << "{\n";
    write_metric_fields(out, report, "  ");
    out << ",\n  \"per_size\": {";
    bool first = true;
    for (const auto& [bucket, m] : report.per_size) {
        out << (first ? "\n" : ",\n") << "    \"" << kSizeBucketNames[static_cast<int>(bucket)] << "\": {\n";
        write_metric_fields(out, m, "      ");
        out << "\n    }";
        first = false;
    }
    out << (first ? "}" : "\n  }") << "\n}\n";
    return out.str();
}

}  // namespace contactforge
