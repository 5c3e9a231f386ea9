#include "kpboost/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "kpboost/error.hpp"

namespace kpboost::synthetic {

namespace {

constexpr int kCell = 10;

std::uint8_t clamp8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

void fill_disc(GrayImage& img, int cx, int cy, int r2, int value) {
    for (int y = 0; y < img.height(); ++y) {
        const int dy = y - cy;
        if (dy * dy > r2) continue;
        for (int x = 0; x < img.width(); ++x) {
            const int dx = x - cx;
            if (dx * dx + dy * dy <= r2) img(x, y) = clamp8(value);
        }
    }
}

void fill_rect(GrayImage& img, int x0, int y0, int w, int h, int value) {
    for (int y = std::max(0, y0); y < std::min(img.height(), y0 + h); ++y)
        for (int x = std::max(0, x0); x < std::min(img.width(), x0 + w); ++x) img(x, y) = clamp8(value);
}

bool overlaps(const Rect& a, const Rect& b, int margin) {
    return a.x < b.x + b.w + margin && b.x < a.x + a.w + margin && a.y < b.y + b.h + margin &&
           b.y < a.y + a.h + margin;
}

}  // namespace

GrayImage background(int width, int height, SplitMix64& rng) {
    // Bilinear value noise on a coarse lattice.
    const int gw = width / kCell + 2;
    const int gh = height / kCell + 2;
    std::vector<int> lattice(static_cast<std::size_t>(gw) * gh);
    for (int& v : lattice) v = static_cast<int>(rng.between(120, 200));

    GrayImage img(width, height);
    for (int y = 0; y < height; ++y) {
        const int gy = y / kCell;
        const int fy = y % kCell;
        for (int x = 0; x < width; ++x) {
            const int gx = x / kCell;
            const int fx = x % kCell;
            const int a = lattice[gy * gw + gx];
            const int b = lattice[gy * gw + gx + 1];
            const int c = lattice[(gy + 1) * gw + gx];
            const int d = lattice[(gy + 1) * gw + gx + 1];
            const int top = a * (kCell - fx) + b * fx;
            const int bottom = c * (kCell - fx) + d * fx;
            img(x, y) = clamp8((top * (kCell - fy) + bottom * fy) / (kCell * kCell));
        }
    }

    // Clutter: soft paraboloid bumps of both polarities, density proportional to area.
    const int blobs = static_cast<int>(rng.between(3, 6)) * width * height / 4000 + 1;
    for (int i = 0; i < blobs; ++i) {
        const int cx = static_cast<int>(rng.between(0, width - 1));
        const int cy = static_cast<int>(rng.between(0, height - 1));
        const int rx = static_cast<int>(rng.between(3, 10));
        const int ry = static_cast<int>(rng.between(3, 10));
        const int contrast = static_cast<int>(rng.between(40, 100)) * (rng.below(2) == 0 ? -1 : 1);
        for (int y = std::max(0, cy - ry); y <= std::min(height - 1, cy + ry); ++y) {
            for (int x = std::max(0, cx - rx); x <= std::min(width - 1, cx + rx); ++x) {
                // 1 - (dx/rx)^2 - (dy/ry)^2, scaled by rx^2 * ry^2
                const int dx = x - cx;
                const int dy = y - cy;
                const int den = rx * rx * ry * ry;
                const int inside = den - dx * dx * ry * ry - dy * dy * rx * rx;
                if (inside > 0) img(x, y) = clamp8(img(x, y) + contrast * inside / den);
            }
        }
    }
    return img;
}

Rect draw_object(GrayImage& img, int x, int y, int value) {
    fill_rect(img, x + 4, y, kObjectWidth - 8, 4, value);
    // 9-px discs: squared radius 20 covers offsets -4..4.
    fill_disc(img, x + 10, y + 10, 20, value);
    fill_disc(img, x + kObjectWidth - 10, y + 10, 20, value);
    return {x, y, kObjectWidth, kObjectHeight};
}

Corpus generate(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed) {
    Corpus c;
    c.seed = seed;
    SplitMix64 rng(seed);
    char name[32];
    for (std::size_t i = 0; i < n_pos; ++i) {
        GrayImage img = background(kCorpusWidth, kCorpusHeight, rng);
        const int x = static_cast<int>(rng.between(0, kCorpusWidth - kObjectWidth));
        const int y = static_cast<int>(rng.between(0, kCorpusHeight - kObjectHeight));
        const int value = static_cast<int>(rng.between(kObjectValue, kObjectValue + 50));
        const Rect box = draw_object(img, x, y, value);
        std::snprintf(name, sizeof name, "pos-%05zu", i);
        c.positives.push_back({name, std::move(img), box});
    }
    for (std::size_t i = 0; i < n_neg; ++i) {
        std::snprintf(name, sizeof name, "neg-%05zu", i);
        GrayImage img = background(kCorpusWidth, kCorpusHeight, rng);
        c.negatives.push_back({name, std::move(img), std::nullopt});
    }
    return c;
}

Scene scene(int width, int height, int objects, std::uint64_t seed) {
    if (width < kObjectWidth || height < kObjectHeight) throw ContractError("scene: frame smaller than the object");
    SplitMix64 rng(seed);
    Scene s{background(width, height, rng), {}};
    for (int i = 0; i < objects; ++i) {
        Rect box;
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            box = {static_cast<int>(rng.between(0, width - kObjectWidth)),
                   static_cast<int>(rng.between(0, height - kObjectHeight)), kObjectWidth, kObjectHeight};
            placed = std::none_of(s.truths.begin(), s.truths.end(),
                                  [&](const Rect& t) { return overlaps(t, box, kObjectWidth / 2); });
        }
        if (!placed) throw ContractError("scene: cannot place all objects without overlap");
        const int value = static_cast<int>(rng.between(kObjectValue, kObjectValue + 50));
        s.truths.push_back(draw_object(s.image, box.x, box.y, value));
    }
    return s;
}

}  // namespace kpboost::synthetic
