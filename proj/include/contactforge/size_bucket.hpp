#pragma once

#include <array>
#include <string_view>

namespace contactforge {

// Contact-area size classes by fraction of image area.
enum class SizeBucket { Small = 0, Medium = 1, Large = 2 };

inline constexpr std::array<std::string_view, 3> kSizeBucketNames = {"small", "medium", "large"};

struct SizeThresholds {
    double small_below = 0.00052;  // 0.052 % of the image
    double large_from = 0.0022;    // 0.22 % of the image
};

// [0, small) small, [small, large) medium, [large, 1] large.
constexpr SizeBucket size_bucket(double fraction, const SizeThresholds& th = {}) {
    if (fraction < th.small_below) return SizeBucket::Small;
    if (fraction < th.large_from) return SizeBucket::Medium;
    return SizeBucket::Large;
}

}  // namespace contactforge
