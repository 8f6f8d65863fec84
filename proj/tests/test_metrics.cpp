#include <gtest/gtest.h>

#include <random>

#include "contactforge/error.hpp"
#include "contactforge/metrics.hpp"
#include "oracles.hpp"

using namespace contactforge;

namespace {

ContactMap map_of(int w, int h, std::vector<std::uint8_t> labels) {
    ContactMap m(w, h);
    m.assign(std::move(labels));
    return m;
}

ContactMap random_map(std::mt19937_64& rng, int w, int h, int classes) {
    std::vector<std::uint8_t> l(static_cast<std::size_t>(w) * h);
    for (auto& v : l) v = static_cast<std::uint8_t>(rng() % 3 == 0 ? 0 : 1 + rng() % classes);
    return map_of(w, h, std::move(l));
}

}  // namespace

TEST(Metrics, WorkedExample) {
    const auto gt = map_of(4, 1, {5, 5, 0, 0});
    const auto pred = map_of(4, 1, {5, 8, 0, 0});
    const auto r = evaluate(pred, gt);
    EXPECT_DOUBLE_EQ(r.per_part_iou.at(5), 0.5);
    EXPECT_DOUBLE_EQ(r.per_part_iou.at(8), 0.0);
    EXPECT_DOUBLE_EQ(r.miou, 0.25);
    EXPECT_DOUBLE_EQ(r.sc_acc, 0.5);
    EXPECT_DOUBLE_EQ(r.c_acc, 1.0);
    EXPECT_DOUBLE_EQ(r.wiou, 0.5);
    EXPECT_DOUBLE_EQ(evaluate(pred, gt, {CAccDenominator::AllPixels, {}}).c_acc, 1.0);
    EXPECT_DOUBLE_EQ(evaluate(map_of(4, 1, {0, 0, 0, 3}), gt, {CAccDenominator::AllPixels, {}}).c_acc, 0.25);
}

TEST(Metrics, FourByFourExample) {
    ContactMap gt(4, 4), pred(4, 4);
    for (int x = 0; x < 4; ++x) gt.set(x, 1, 5);
    pred.set(0, 1, 5);
    pred.set(1, 1, 5);
    pred.set(2, 1, 8);
    pred.set(3, 1, 8);
    const auto r = evaluate(pred, gt);
    EXPECT_DOUBLE_EQ(r.per_part_iou.at(5), 0.5);
    EXPECT_DOUBLE_EQ(r.per_part_iou.at(8), 0.0);
    EXPECT_DOUBLE_EQ(r.miou, 0.25);
    EXPECT_DOUBLE_EQ(r.sc_acc, 0.5);

    const auto same = evaluate(gt, gt);
    EXPECT_EQ(same.sc_acc, 1.0);
    EXPECT_EQ(same.c_acc, 1.0);
    EXPECT_EQ(same.miou, 1.0);
    EXPECT_EQ(same.wiou, 1.0);
    const auto none = evaluate(ContactMap(4, 4), gt);
    EXPECT_EQ(none.sc_acc, 0.0);
    EXPECT_EQ(none.miou, 0.0);
}

TEST(Metrics, EmptyConventions) {
    const ContactMap zero(3, 3);
    auto r = evaluate(zero, zero);
    EXPECT_EQ(r.sc_acc, 1.0);
    EXPECT_EQ(r.c_acc, 1.0);
    EXPECT_EQ(r.miou, 1.0);
    EXPECT_EQ(r.wiou, 1.0);
    EXPECT_TRUE(r.per_size.empty());
    r = evaluate(map_of(3, 1, {0, 2, 0}), map_of(3, 1, {0, 0, 0}));
    EXPECT_EQ(r.wiou, 0.0);
    EXPECT_EQ(r.miou, 0.0);
    EXPECT_THROW(evaluate(zero, ContactMap(2, 2)), InputError);
}

TEST(Metrics, RandomMapsMatchDirectCounting) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const int classes = 1 + static_cast<int>(rng() % kNumParts);
        const auto gt = random_map(rng, 7, 5, classes);
        const auto pred = random_map(rng, 7, 5, classes);
        const auto r = evaluate(pred, gt);
        const auto o = oracle::brute_force_metrics(pred.labels(), gt.labels());
        EXPECT_NEAR(r.sc_acc, o.sc_acc, 1e-12);
        EXPECT_NEAR(r.c_acc, o.c_acc, 1e-12);
        EXPECT_NEAR(r.miou, o.miou, 1e-12);
        EXPECT_NEAR(r.wiou, o.wiou, 1e-12);
    }
}

TEST(Metrics, CorpusPoolsPixelsAndDuplicationIsNeutral) {
    std::mt19937_64 rng(2);
    const auto g1 = random_map(rng, 6, 6, 4), p1 = random_map(rng, 6, 6, 4);
    const auto g2 = random_map(rng, 6, 6, 4), p2 = random_map(rng, 6, 6, 4);
    const std::vector<EvalPair> once{{&p1, &g1}, {&p2, &g2}};
    const std::vector<EvalPair> twice{{&p1, &g1}, {&p2, &g2}, {&p2, &g2}, {&p1, &g1}};
    const auto a = evaluate_corpus(once), b = evaluate_corpus(twice);
    EXPECT_DOUBLE_EQ(a.sc_acc, b.sc_acc);
    EXPECT_DOUBLE_EQ(a.miou, b.miou);
    EXPECT_DOUBLE_EQ(a.wiou, b.wiou);

    // Pooled, not averaged per image.
    std::vector<std::uint8_t> pg(p1.labels()), gg(g1.labels());
    pg.insert(pg.end(), p2.labels().begin(), p2.labels().end());
    gg.insert(gg.end(), g2.labels().begin(), g2.labels().end());
    const auto o = oracle::brute_force_metrics(pg, gg);
    EXPECT_NEAR(a.miou, o.miou, 1e-12);
    EXPECT_NEAR(a.sc_acc, o.sc_acc, 1e-12);
}

TEST(Metrics, ConsistentRelabelingPreservesScores) {
    std::mt19937_64 rng(4);
    std::vector<std::uint8_t> perm(kNumClasses);
    for (int i = 0; i < kNumClasses; ++i) perm[i] = static_cast<std::uint8_t>(i);
    std::shuffle(perm.begin() + 1, perm.end(), rng);
    for (int trial = 0; trial < 20; ++trial) {
        const auto gt = random_map(rng, 5, 5, kNumParts), pred = random_map(rng, 5, 5, kNumParts);
        auto relabel = [&](const ContactMap& m) {
            auto l = m.labels();
            for (auto& v : l) v = perm[v];
            return map_of(m.width(), m.height(), l);
        };
        const auto a = evaluate(pred, gt), b = evaluate(relabel(pred), relabel(gt));
        EXPECT_DOUBLE_EQ(a.sc_acc, b.sc_acc);
        EXPECT_DOUBLE_EQ(a.c_acc, b.c_acc);
        EXPECT_NEAR(a.miou, b.miou, 1e-12);
        EXPECT_NEAR(a.wiou, b.wiou, 1e-12);
    }
}

TEST(Metrics, SizeBucketsUseConnectedRegions) {
    // 200x100 image: a 20-pixel region is 0.1% (medium), a 1-pixel region is
    // small, a 100-pixel region is large.
    ContactMap gt(200, 100), pred(200, 100);
    for (int x = 0; x < 20; ++x) gt.set(x, 10, 3);
    gt.set(100, 50, 3);  // same label, disconnected
    for (int y = 60; y < 70; ++y)
        for (int x = 100; x < 110; ++x) gt.set(x, y, 9);
    for (int x = 0; x < 10; ++x) pred.set(x, 10, 3);
    pred.set(100, 50, 4);
    const auto r = evaluate(pred, gt);
    ASSERT_EQ(r.per_size.size(), 3u);
    EXPECT_DOUBLE_EQ(r.per_size.at(SizeBucket::Medium).sc_acc, 0.5);
    EXPECT_DOUBLE_EQ(r.per_size.at(SizeBucket::Small).sc_acc, 0.0);
    EXPECT_DOUBLE_EQ(r.per_size.at(SizeBucket::Small).c_acc, 1.0);
    EXPECT_DOUBLE_EQ(r.per_size.at(SizeBucket::Large).c_acc, 0.0);

    // Diagonal neighbours are separate regions.
    ContactMap diag(200, 100);
    diag.set(0, 0, 2);
    diag.set(1, 1, 2);
    const auto d = evaluate(diag, diag);
    ASSERT_EQ(d.per_size.size(), 1u);
    EXPECT_EQ(d.per_size.begin()->first, SizeBucket::Small);
}

TEST(Metrics, ConfusionMergeIsAdditive) {
    std::mt19937_64 rng(8);
    const auto g1 = random_map(rng, 4, 4, 5), p1 = random_map(rng, 4, 4, 5);
    const auto g2 = random_map(rng, 4, 4, 5), p2 = random_map(rng, 4, 4, 5);
    ConfusionMatrix a, b, ab, ba;
    a.add(p1, g1);
    b.add(p2, g2);
    ab = a;
    ab += b;
    ba = b;
    ba += a;
    EXPECT_EQ(ab.counts, ba.counts);
    std::uint64_t total = 0;
    for (auto c : ab.counts) total += c;
    EXPECT_EQ(total, 32u);
}

TEST(Metrics, JsonReport) {
    const auto gt = map_of(4, 1, {5, 5, 0, 0});
    const auto pred = map_of(4, 1, {5, 8, 0, 0});
    const auto json = report_to_json(evaluate(pred, gt));
    EXPECT_NE(json.find("\"sc_acc\": 0.500000"), std::string::npos) << json;
    EXPECT_NE(json.find("\"miou\": 0.250000"), std::string::npos);
    EXPECT_NE(json.find("\"L_Hand\": 0.500000"), std::string::npos);
    EXPECT_NE(json.find("\"R_Hand\": 0.000000"), std::string::npos);
    EXPECT_NE(json.find("\"large\""), std::string::npos);
}
