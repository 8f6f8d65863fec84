#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "contactforge/part_label.hpp"

namespace contactforge {

// H x W map of class ids 0..17 (0 = no contact), row-major.
class ContactMap {
  public:
    ContactMap() = default;
    ContactMap(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return labels_.size(); }

    std::uint8_t at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int x, int y, std::uint8_t label);

    const std::vector<std::uint8_t>& labels() const { return labels_; }

    // Replaces all labels; throws if the count or any id is wrong.
    void assign(std::vector<std::uint8_t> labels);

    bool operator==(const ContactMap&) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> labels_;
};

// 8-bit grayscale image, row-major, used for network inputs.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

// Binary PGM (P5), maxval 255.
void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels);
GrayImage read_pgm(const std::filesystem::path& path);

void write_contact_map_pgm(const std::filesystem::path& path, const ContactMap& map);
// Rejects pixel values above 17.
ContactMap read_contact_map_pgm(const std::filesystem::path& path);

// Fixed 18-entry RGB palette indexed by class id.
extern const std::array<std::array<std::uint8_t, 3>, kNumClasses> kContactPalette;

void write_contact_map_png(const std::filesystem::path& path, const ContactMap& map);

}  // namespace contactforge
