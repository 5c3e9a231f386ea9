#include "kpboost/localization.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "kpboost/error.hpp"

namespace kpboost {

namespace {

constexpr const char* kVotesMagic = "KPVOTES/1";

std::int64_t round_div(std::int64_t num, std::int64_t den) {
    // Round half away from zero; den > 0.
    return num >= 0 ? (num + den / 2) / den : -((-num + den / 2) / den);
}

struct Cell {
    std::int64_t mass = 0;   // alpha of every vote cast here
    std::vector<std::size_t> weaks;  // distinct weak classifiers voting here, ascending
    std::int64_t sum_x = 0;  // alpha-weighted FP8 predictions
    std::int64_t sum_y = 0;
    std::int64_t sum_w = 0;
    std::int64_t sum_h = 0;
};

}  // namespace

Vote vote_sample(const Keypoint& k, const Rect& truth) noexcept {
    const std::int64_t s = k.scale;
    const std::int64_t cx = (2 * std::int64_t{truth.x} + truth.w) * (kFp8One / 2);
    const std::int64_t cy = (2 * std::int64_t{truth.y} + truth.h) * (kFp8One / 2);
    Vote v;
    v.vx = static_cast<std::int32_t>((cx - std::int64_t{k.x} * kFp8One) * kFp8One / s);
    v.vy = static_cast<std::int32_t>((cy - std::int64_t{k.y} * kFp8One) * kFp8One / s);
    v.vw = static_cast<std::int32_t>(std::int64_t{truth.w} * kFp8One * kFp8One / s);
    v.vh = static_cast<std::int32_t>(std::int64_t{truth.h} * kFp8One * kFp8One / s);
    v.support = 1;
    return v;
}

VoteTable learn_votes(const StrongClassifier& model, std::span<const LabeledFeatures> positives) {
    VoteTable table;
    for (std::size_t t = 0; t < model.weaks.size(); ++t) {
        const WeakClassifier& weak = model.weaks[t];
        std::int64_t sx = 0, sy = 0, sw = 0, sh = 0;
        std::size_t count = 0;
        for (const LabeledFeatures& p : positives) {
            const ImageFeatures& f = *p.features;
            for (std::size_t k = 0; k < f.size(); ++k) {
                if (sad(weak.descriptor, f.descriptors[k]) >= weak.threshold) continue;
                const Vote s = vote_sample(f.keypoints[k], p.truth);
                sx += s.vx;
                sy += s.vy;
                sw += s.vw;
                sh += s.vh;
                ++count;
            }
        }
        if (count == 0) continue;
        const auto c = static_cast<std::int64_t>(count);
        table.votes.push_back({t, static_cast<std::int32_t>(sx / c), static_cast<std::int32_t>(sy / c),
                               static_cast<std::int32_t>(sw / c), static_cast<std::int32_t>(sh / c), count});
    }
    return table;
}

std::int32_t iou_fp8(const Rect& a, const Rect& b) noexcept {
    const std::int64_t ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const std::int64_t iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const std::int64_t inter = ix * iy;
    const std::int64_t uni = std::int64_t{a.w} * a.h + std::int64_t{b.w} * b.h - inter;
    if (uni <= 0) return 0;
    return static_cast<std::int32_t>(inter * kFp8One / uni);
}

std::vector<Detection> hough_detect(const StrongClassifier& model, const VoteTable& votes, const ImageFeatures& frame,
                                    int frame_width, int frame_height, const HoughParams& params) {
    if (params.cell_size < 1) throw ContractError("hough_detect: cell size must be >= 1");
    if (frame_width < 1 || frame_height < 1) throw ContractError("hough_detect: empty frame");
    const int c = params.cell_size;
    const int gw = (frame_width + c - 1) / c;
    const int gh = (frame_height + c - 1) / c;
    std::vector<Cell> acc(static_cast<std::size_t>(gw) * gh);

    for (const Vote& v : votes.votes) {
        if (v.weak >= model.weaks.size()) throw ContractError("hough_detect: vote table does not match the model");
        const WeakClassifier& weak = model.weaks[v.weak];
        for (std::size_t k = 0; k < frame.size(); ++k) {
            if (sad(weak.descriptor, frame.descriptors[k]) >= weak.threshold) continue;
            const Keypoint& kp = frame.keypoints[k];
            const std::int64_t px = std::int64_t{kp.x} * kFp8One + std::int64_t{kp.scale} * v.vx / kFp8One;
            const std::int64_t py = std::int64_t{kp.y} * kFp8One + std::int64_t{kp.scale} * v.vy / kFp8One;
            if (px < 0 || py < 0 || px >= std::int64_t{frame_width} * kFp8One || py >= std::int64_t{frame_height} * kFp8One)
                continue;
            Cell& cell = acc[static_cast<std::size_t>(py / kFp8One / c) * gw + static_cast<std::size_t>(px / kFp8One / c)];
            cell.mass += weak.alpha;
            if (cell.weaks.empty() || cell.weaks.back() != v.weak) cell.weaks.push_back(v.weak);
            cell.sum_x += weak.alpha * px;
            cell.sum_y += weak.alpha * py;
            cell.sum_w += weak.alpha * (std::int64_t{kp.scale} * v.vw / kFp8One);
            cell.sum_h += weak.alpha * (std::int64_t{kp.scale} * v.vh / kFp8One);
        }
    }

    // Like weak_eval, a weak classifier counts once however many of its matches land in
    // the 3x3 support; repeated matches on background texture would otherwise pile up.
    auto presence = [&](std::span<const std::size_t> weaks) {
        std::int64_t m = 0;
        for (std::size_t t : weaks) m += model.weaks[t].alpha;
        return m;
    };
    auto support = [&](int gx, int gy, std::vector<std::size_t>& weaks) {
        Cell s;
        weaks.clear();
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int x = gx + dx;
                const int y = gy + dy;
                if (x < 0 || y < 0 || x >= gw || y >= gh) continue;
                const Cell& q = acc[static_cast<std::size_t>(y) * gw + x];
                s.mass += q.mass;
                s.sum_x += q.sum_x;
                s.sum_y += q.sum_y;
                s.sum_w += q.sum_w;
                s.sum_h += q.sum_h;
                weaks.insert(weaks.end(), q.weaks.begin(), q.weaks.end());
            }
        }
        std::sort(weaks.begin(), weaks.end());
        weaks.erase(std::unique(weaks.begin(), weaks.end()), weaks.end());
        return s;
    };
    std::vector<std::size_t> scratch;
    std::vector<std::int64_t> smooth(acc.size());
    std::vector<std::int64_t> raw(acc.size());
    for (int gy = 0; gy < gh; ++gy) {
        for (int gx = 0; gx < gw; ++gx) {
            const std::size_t i = static_cast<std::size_t>(gy) * gw + gx;
            raw[i] = support(gx, gy, scratch).mass;
            smooth[i] = presence(scratch);
        }
    }

    std::vector<Detection> found;
    for (int gy = 0; gy < gh; ++gy) {
        for (int gx = 0; gx < gw; ++gx) {
            const std::size_t i = static_cast<std::size_t>(gy) * gw + gx;
            if (smooth[i] <= 0 || smooth[i] < params.min_mass) continue;
            // Plateaus are split by the mass of all votes in the support, then in the cell, then by raster order.
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = gx + dx;
                    const int y = gy + dy;
                    if ((dx == 0 && dy == 0) || x < 0 || y < 0 || x >= gw || y >= gh) continue;
                    const std::size_t j = static_cast<std::size_t>(y) * gw + x;
                    const auto mine = std::tuple(smooth[i], raw[i], acc[i].mass);
                    const auto theirs = std::tuple(smooth[j], raw[j], acc[j].mass);
                    if (theirs > mine || (theirs == mine && j < i)) {
                        peak = false;
                        break;
                    }
                }
            }
            if (!peak) continue;

            const Cell s = support(gx, gy, scratch);
            const std::int64_t cx = s.sum_x / s.mass;
            const std::int64_t cy = s.sum_y / s.mass;
            const std::int64_t w = std::max<std::int64_t>(kFp8One, s.sum_w / s.mass);
            const std::int64_t h = std::max<std::int64_t>(kFp8One, s.sum_h / s.mass);
            Rect box{static_cast<int>(round_div(cx - w / 2, kFp8One)), static_cast<int>(round_div(cy - h / 2, kFp8One)),
                     static_cast<int>(round_div(w, kFp8One)), static_cast<int>(round_div(h, kFp8One))};
            found.push_back({box, smooth[i]});
        }
    }

    std::stable_sort(found.begin(), found.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<Detection> kept;
    for (const Detection& d : found) {
        const bool merged = std::any_of(kept.begin(), kept.end(),
                                        [&](const Detection& k) { return iou_fp8(k.box, d.box) > params.merge_iou_fp8; });
        if (!merged) kept.push_back(d);
    }
    return kept;
}

void save_votes(const VoteTable& t, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << kVotesMagic << '\n';
    for (const Vote& v : t.votes)
        out << "V " << v.weak << ' ' << v.vx << ' ' << v.vy << ' ' << v.vw << ' ' << v.vh << ' ' << v.support << '\n';
    if (!out) throw IoError(path.string() + ": write failed");
}

VoteTable load_votes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    std::string line;
    std::size_t line_no = 1;
    auto fail = [&](const std::string& what) { throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + what); };
    if (!std::getline(in, line)) fail("empty vote file");
    if (line != kVotesMagic) fail(line.rfind("KPVOTES/", 0) == 0 ? "unsupported version" : "not a KPVOTES file");
    VoteTable t;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        Vote v;
        long long weak = -1, support = 0;
        std::string extra;
        if (!(ls >> tag >> weak >> v.vx >> v.vy >> v.vw >> v.vh >> support) || tag != "V" || (ls >> extra))
            fail("malformed vote line");
        if (weak < 0 || support < 1) fail("vote entry out of range");
        if (!t.votes.empty() && static_cast<std::size_t>(weak) <= t.votes.back().weak) fail("vote entries out of order");
        v.weak = static_cast<std::size_t>(weak);
        v.support = static_cast<std::size_t>(support);
        t.votes.push_back(v);
    }
    return t;
}

}  // namespace kpboost
