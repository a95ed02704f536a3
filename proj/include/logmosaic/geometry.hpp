#pragma once

namespace logmosaic {

struct PixelPos {
    int x = 0;
    int y = 0;

    friend bool operator==(PixelPos a, PixelPos b) { return a.x == b.x && a.y == b.y; }
    friend bool operator!=(PixelPos a, PixelPos b) { return !(a == b); }
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

}  // namespace logmosaic
