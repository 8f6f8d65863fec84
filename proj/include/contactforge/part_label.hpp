#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace contactforge {

inline constexpr int kNumParts = 17;
inline constexpr int kNumClasses = kNumParts + 1;  // background + parts

// Merged 17-part body taxonomy; 0 is background / no contact.
enum class Part : std::uint8_t {
    Background = 0,
    Head,
    Chest,
    L_UpperArm,
    L_ForeArm,
    L_Hand,
    R_UpperArm,
    R_ForeArm,
    R_Hand,
    Buttocks,
    Hip,
    Back,
    L_Thigh,
    L_Calf,
    L_Foot,
    R_Thigh,
    R_Calf,
    R_Foot,
};

inline constexpr std::array<std::string_view, kNumClasses> kPartNames = {
    "Background", "Head",     "Chest",   "L_UpperArm", "L_ForeArm", "L_Hand",
    "R_UpperArm", "R_ForeArm", "R_Hand", "Buttocks",   "Hip",       "Back",
    "L_Thigh",    "L_Calf",   "L_Foot",  "R_Thigh",    "R_Calf",    "R_Foot",
};

constexpr int part_id(Part p) { return static_cast<int>(p); }

constexpr std::string_view part_name(Part p) { return kPartNames[static_cast<std::size_t>(p)]; }

constexpr bool is_body_part(int id) { return id >= 1 && id <= kNumParts; }

// Any id in 0..17, including background.
constexpr std::optional<Part> part_from_id(int id) {
    if (id < 0 || id > kNumParts) return std::nullopt;
    return static_cast<Part>(id);
}

constexpr std::optional<Part> part_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kPartNames.size(); ++i)
        if (kPartNames[i] == name) return static_cast<Part>(i);
    return std::nullopt;
}

constexpr bool is_hand_or_foot(Part p) {
    return p == Part::L_Hand || p == Part::R_Hand || p == Part::L_Foot || p == Part::R_Foot;
}

}  // namespace contactforge
