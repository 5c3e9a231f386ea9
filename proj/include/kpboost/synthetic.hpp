#pragma once

#include <cstdint>
#include <vector>

#include "kpboost/corpus.hpp"
#include "kpboost/image.hpp"
#include "kpboost/random.hpp"

namespace kpboost::synthetic {

// Object template: a dark horizontal bar ("side skirt") above two dark 9-px discs ("wheels").
inline constexpr int kObjectWidth = 56;
inline constexpr int kObjectHeight = 15;
inline constexpr int kCorpusWidth = 100;
inline constexpr int kCorpusHeight = 40;
/// Darkest object gray level; generated objects range from here to +50.
inline constexpr int kObjectValue = 40;

/// Smooth value-noise background with random light and dark clutter blobs.
GrayImage background(int width, int height, SplitMix64& rng);

/// Paints the object with its top-left corner at (x, y); returns its bounding box.
Rect draw_object(GrayImage& img, int x, int y, int value = kObjectValue);


/// 100x40 images; positives carry the object at a random in-bounds position and gray level.
/// Byte-identical output for identical arguments.
Corpus generate(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed);

struct Scene {
    GrayImage image;
    std::vector<Rect> truths;
};

/// A larger frame holding `objects` implants at random non-overlapping positions.
Scene scene(int width, int height, int objects, std::uint64_t seed);

}  // namespace kpboost::synthetic
