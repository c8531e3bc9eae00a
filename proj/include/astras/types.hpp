#ifndef ASTRAS_TYPES_HPP
#define ASTRAS_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace astras {

/// One-hot rotation direction: clockwise (increasing beta) is 1.
enum class Direction : std::uint8_t { counter_clockwise = 0, clockwise = 1 };

constexpr double direction_value(Direction d) noexcept { return d == Direction::clockwise ? 1.0 : 0.0; }
constexpr double direction_sign(Direction d) noexcept { return d == Direction::clockwise ? 1.0 : -1.0; }

/// W x H RGB raster, row-major with interleaved channels.
struct ShadowImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    ShadowImage() = default;
    ShadowImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0.0f) {}

    float& at(int row, int col, int ch) { return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + ch]; }
    float at(int row, int col, int ch) const { return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + ch]; }
    bool empty() const noexcept { return width <= 0 || height <= 0; }
    bool operator==(const ShadowImage&) const = default;
};

/// Column-wise channel sums normalised to a maximum of 100. Datasets store
/// these as float; feature computations run in double.
template <class T>
struct BasicIntensityVectors {
    std::vector<T> red;
    std::vector<T> green;
    std::vector<T> blue;
    /// Bit c set when channel c was identically zero.
    std::uint8_t degenerate_channels = 0;

    std::size_t size() const noexcept { return red.size(); }
    const std::vector<T>& channel(int c) const { return c == 0 ? red : (c == 1 ? green : blue); }
    std::vector<T>& channel(int c) { return c == 0 ? red : (c == 1 ? green : blue); }
    bool degenerate() const noexcept { return degenerate_channels != 0; }

    template <class U>
    BasicIntensityVectors<U> cast() const
    {
        BasicIntensityVectors<U> out;
        out.red.assign(red.begin(), red.end());
        out.green.assign(green.begin(), green.end());
        out.blue.assign(blue.begin(), blue.end());
        out.degenerate_channels = degenerate_channels;
        return out;
    }

    bool operator==(const BasicIntensityVectors&) const = default;
};

using IntensityVectors = BasicIntensityVectors<double>;
using CompactIntensity = BasicIntensityVectors<float>;

} // namespace astras

#endif // ASTRAS_TYPES_HPP
