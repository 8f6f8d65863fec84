#include "contactforge/contact_map.hpp"

#include <png.h>

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "contactforge/error.hpp"

namespace contactforge {

namespace {
const char* kStage = "image-io";
}

ContactMap::ContactMap(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw InputError(kStage, "contact map dimensions must be >= 1");
    labels_.assign(static_cast<std::size_t>(width) * height, 0);
}

void ContactMap::set(int x, int y, std::uint8_t label) {
    if (label > kNumParts) throw InputError(kStage, "label " + std::to_string(label) + " outside 0..17");
    labels_[static_cast<std::size_t>(y) * width_ + x] = label;
}

void ContactMap::assign(std::vector<std::uint8_t> labels) {
    if (labels.size() != labels_.size()) throw InputError(kStage, "label count does not match map size");
    for (auto l : labels)
        if (l > kNumParts) throw InputError(kStage, "label " + std::to_string(l) + " outside 0..17");
    labels_ = std::move(labels);
}

const std::array<std::array<std::uint8_t, 3>, kNumClasses> kContactPalette = {{
    {0, 0, 0},       // Background
    {230, 25, 75},   // Head
    {60, 180, 75},   // Chest
    {255, 225, 25},  // L_UpperArm
    {0, 130, 200},   // L_ForeArm
    {245, 130, 48},  // L_Hand
    {145, 30, 180},  // R_UpperArm
    {70, 240, 240},  // R_ForeArm
    {240, 50, 230},  // R_Hand
    {210, 245, 60},  // Buttocks
    {250, 190, 212}, // Hip
    {0, 128, 128},   // Back
    {220, 190, 255}, // L_Thigh
    {170, 110, 40},  // L_Calf
    {255, 250, 200}, // L_Foot
    {128, 0, 0},     // R_Thigh
    {170, 255, 195}, // R_Calf
    {128, 128, 0},   // R_Foot
}};

void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw std::logic_error("pixel buffer does not match image size");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(kStage, "cannot write " + path.string());
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(kStage, "cannot open " + path.string());
    auto next_token = [&]() {
        std::string tok;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(c);
        }
        return tok;
    };
    if (next_token() != "P5") throw InputError(kStage, path.string() + ": not a binary PGM (P5)");
    GrayImage img;
    int maxval = 0;
    try {
        img.width = std::stoi(next_token());
        img.height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw InputError(kStage, path.string() + ": malformed PGM header");
    }
    if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 255)
        throw InputError(kStage, path.string() + ": unsupported PGM header");
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw InputError(kStage, path.string() + ": truncated PGM data");
    return img;
}

void write_contact_map_pgm(const std::filesystem::path& path, const ContactMap& map) {
    write_pgm(path, map.width(), map.height(), map.labels());
}

ContactMap read_contact_map_pgm(const std::filesystem::path& path) {
    GrayImage img = read_pgm(path);
    ContactMap map(img.width, img.height);
    try {
        map.assign(std::move(img.pixels));
    } catch (const InputError& e) {
        throw InputError(kStage, path.string() + ": " + e.what());
    }
    return map;
}

void write_contact_map_png(const std::filesystem::path& path, const ContactMap& map) {
    std::vector<png_byte> rgb(map.size() * 3);
    for (std::size_t i = 0; i < map.size(); ++i)
        for (int k = 0; k < 3; ++k) rgb[3 * i + k] = kContactPalette[map.labels()[i]][k];

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(map.width());
    image.height = static_cast<png_uint_32>(map.height());
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, rgb.data(), 0, nullptr))
        throw InputError(kStage, "cannot write " + path.string() + ": " + image.message);
}

}  // namespace contactforge
