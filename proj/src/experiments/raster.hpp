#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sentiflow::experiments::raster {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

// 8-bit RGB image with a few primitives and a 5x7 bitmap font.
class Canvas {
public:
    Canvas(int width, int height, Rgb background = {255, 255, 255});

    int width() const { return width_; }
    int height() const { return height_; }
    Rgb at(int x, int y) const;

    void blend(int x, int y, Rgb c, double alpha = 1.0);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c, double alpha = 1.0);
    void rect(int x0, int y0, int x1, int y1, Rgb c);
    void line(int x0, int y0, int x1, int y1, Rgb c);
    void fill_circle(double cx, double cy, double r, Rgb c, double alpha);
    void circle(double cx, double cy, double r, Rgb c);
    // Upper-cased text; `scale` multiplies the 5x7 cell. Returns the width drawn.
    int text(int x, int y, std::string_view s, Rgb c, int scale = 1);
    static int text_width(std::string_view s, int scale = 1);
    void text_centered(int cx, int y, std::string_view s, Rgb c, int scale = 1);

    std::string encode_png() const;

private:
    int width_, height_;
    std::vector<std::uint8_t> pixels_;
};

}  // namespace sentiflow::experiments::raster
