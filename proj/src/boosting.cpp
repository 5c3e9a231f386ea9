#include "kpboost/boosting.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kpboost/error.hpp"

namespace kpboost {

namespace {

using u128 = unsigned __int128;

constexpr const char* kModelMagic = "KPBOOST/1";

bool finite_distance(std::uint32_t d) { return d != kNoKeypointDistance; }

}  // namespace

std::int64_t half_alpha_sum(std::span<const WeakClassifier> weaks) noexcept {
    std::int64_t sum = 0;
    for (const auto& w : weaks) sum += w.alpha;
    return (sum + 1) / 2;
}

StrongClassifier StrongClassifier::from_weaks(std::vector<WeakClassifier> weaks) {
    StrongClassifier s;
    s.default_theta = half_alpha_sum(weaks);
    s.weaks = std::move(weaks);
    return s;
}

StrongClassifier StrongClassifier::prefix(std::size_t n) const {
    n = std::min(n, weaks.size());
    return from_weaks({weaks.begin(), weaks.begin() + static_cast<std::ptrdiff_t>(n)});
}

std::int64_t StrongClassifier::alpha_sum() const noexcept {
    std::int64_t sum = 0;
    for (const auto& w : weaks) sum += w.alpha;
    return sum;
}

bool weak_eval(const WeakClassifier& w, const ImageFeatures& feats) noexcept {
    return dist_to_image(w.descriptor, feats) < w.threshold;
}

std::int64_t strong_score(const StrongClassifier& s, const ImageFeatures& feats) noexcept {
    std::int64_t score = 0;
    for (const auto& w : s.weaks)
        if (weak_eval(w, feats)) score += w.alpha;
    return score;
}

std::vector<std::uint32_t> candidate_thresholds(std::span<const std::uint32_t> sorted_row) {
    std::vector<std::uint32_t> out;
    for (std::size_t k = 1; k < sorted_row.size(); ++k) {
        const std::uint32_t a = sorted_row[k - 1];
        const std::uint32_t b = sorted_row[k];
        if (a == b || !finite_distance(b)) continue;
        out.push_back(static_cast<std::uint32_t>((std::uint64_t{a} + b + 1) / 2));
    }
    return out;
}

std::uint64_t error_tolerance(std::span<const std::uint64_t> weights) noexcept {
    const u128 total = std::accumulate(weights.begin(), weights.end(), u128{0});
    const auto tol = static_cast<std::uint64_t>((total * weights.size()) >> kFp32Bits);
    return std::max<std::uint64_t>(tol, 1);
}

ThresholdChoice best_threshold(std::span<const std::uint32_t> row_order, std::span<const std::uint32_t> row,
                               std::span<const std::uint64_t> weights, std::span<const std::uint8_t> labels,
                               std::uint64_t tolerance) {
    std::uint64_t pos_total = 0;
    for (std::size_t j = 0; j < row.size(); ++j)
        if (labels[j]) pos_total += weights[j];

    ThresholdChoice best{0, pos_total};
    bool found = false;
    std::uint64_t cum_pos = 0;
    std::uint64_t cum_neg = 0;
    for (std::size_t k = 0; k < row_order.size(); ++k) {
        const std::uint32_t j = row_order[k];
        (labels[j] ? cum_pos : cum_neg) += weights[j];
        if (k + 1 == row_order.size()) break;
        const std::uint32_t a = row[j];
        const std::uint32_t b = row[row_order[k + 1]];
        if (a == b || !finite_distance(b)) continue;
        // Everything up to position k answers 1.
        const std::uint64_t err = cum_neg + (pos_total - cum_pos);
        if (!found || err + tolerance < best.error) {
            best = {static_cast<std::uint32_t>((std::uint64_t{a} + b + 1) / 2), err};
            found = true;
        }
    }
    return best;
}

TrainResult train_adaboost(const DistanceMatrix& m, int rounds) {
    if (rounds < 1) throw ContractError("train_adaboost: rounds must be >= 1");
    const std::size_t n = m.cols();
    const auto labels = std::span<const std::uint8_t>(m.labels);
    const std::size_t n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (n_pos == 0 || n_pos == n) throw ContractError("train_adaboost: both classes must be present");

    std::vector<std::uint64_t> w(n, kFp32One / n);
    std::vector<std::int64_t> scores(n, 0);
    const std::uint64_t eps_lo = (kFp32One / 4) / n;
    const std::uint64_t eps_hi = kFp32One / 2 - eps_lo;

    TrainResult result;
    std::vector<WeakClassifier> weaks;
    for (int t = 0; t < rounds; ++t) {
        const std::uint64_t tol = error_tolerance(w);
        std::size_t best_row = 0;
        ThresholdChoice best;
        bool found = false;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const ThresholdChoice c = best_threshold(m.row_order(i), m.row(i), w, labels, tol);
            if (c.threshold == 0) continue;
            if (!found || c.error + tol < best.error) {
                best = c;
                best_row = i;
                found = true;
            }
        }
        if (!found) throw ContractError("train_adaboost: no row offers a candidate threshold");

        const u128 total = std::accumulate(w.begin(), w.end(), u128{0});
        std::uint64_t eps = static_cast<std::uint64_t>((u128{best.error} << kFp32Bits) / total);
        eps = std::clamp(eps, eps_lo, eps_hi);
        const std::uint64_t beta = static_cast<std::uint64_t>((u128{eps} << kFp32Bits) / (kFp32One - eps));
        const std::int64_t alpha = ln_fp20(kFp32One - eps) - ln_fp20(eps);

        const PositiveKeypoint& src = m.provenance[best_row];
        weaks.push_back({src.descriptor, best.threshold, alpha, m.column_ids[src.column], src.keypoint.x,
                         src.keypoint.y, src.keypoint.scale});

        // Correctly classified examples shrink by beta; errors keep their weight.
        const auto row = m.row(best_row);
        u128 new_total = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const bool h = row[j] < best.threshold;
            if (h == (labels[j] != 0)) w[j] = static_cast<std::uint64_t>((u128{w[j]} * beta) >> kFp32Bits);
            new_total += w[j];
            if (h) scores[j] += alpha;
        }
        if (new_total == 0) {
            std::fill(w.begin(), w.end(), kFp32One / n);
        } else {
            for (auto& x : w) x = static_cast<std::uint64_t>((u128{x} << kFp32Bits) / new_total);
        }

        const std::int64_t theta = half_alpha_sum(weaks);
        std::size_t wrong = 0;
        for (std::size_t j = 0; j < n; ++j)
            if ((scores[j] >= theta) != (labels[j] != 0)) ++wrong;
        result.trace.push_back({best_row, best.threshold, eps, alpha, wrong});
    }
    result.model = StrongClassifier::from_weaks(std::move(weaks));
    return result;
}

void write_model(const StrongClassifier& s, std::ostream& out) {
    out << kModelMagic << " T=" << s.weaks.size() << " DNORM=" << kDescriptorNorm << '\n';
    for (const auto& w : s.weaks) {
        if (w.source_id.find_first_of(" \t\r\n") != std::string::npos)
            throw ContractError("save_model: image id contains whitespace: '" + w.source_id + "'");
        out << "W " << w.alpha << ' ' << w.threshold << ' ' << (w.source_id.empty() ? "-" : w.source_id) << ' '
            << w.kx << ' ' << w.ky << ' ' << w.kscale;
        for (std::int16_t v : w.descriptor.values) out << ' ' << v;
        out << '\n';
    }
    out << "THETA " << s.default_theta << '\n';
}

void save_model(const StrongClassifier& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    write_model(s, out);
    if (!out) throw IoError(path.string() + ": write failed");
}

StrongClassifier read_model(std::istream& in, const std::string& name) {
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) -> void {
        throw IoError(name + ":" + std::to_string(line_no) + ": " + what);
    };

    ++line_no;
    if (!std::getline(in, line)) fail("empty model file");
    std::istringstream header(line);
    std::string magic, t_field, dnorm_field;
    header >> magic >> t_field >> dnorm_field;
    if (magic.rfind("KPBOOST/", 0) != 0) fail("not a KPBOOST model");
    if (magic != kModelMagic) fail("unsupported version '" + magic + "'");
    std::size_t declared = 0;
    try {
        if (t_field.rfind("T=", 0) != 0) fail("malformed header");
        declared = std::stoul(t_field.substr(2));
    } catch (const std::logic_error&) {
        fail("malformed header");
    }
    if (dnorm_field != "DNORM=" + std::to_string(kDescriptorNorm)) fail("unsupported descriptor norm");

    StrongClassifier s;
    bool have_theta = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (have_theta) fail("content after THETA line");
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "W") {
            WeakClassifier w;
            long long threshold = 0;
            if (!(ls >> w.alpha >> threshold >> w.source_id >> w.kx >> w.ky >> w.kscale)) fail("malformed weak classifier");
            if (threshold <= 0 || threshold > 2 * kDescriptorNorm) fail("threshold out of range");
            if (w.alpha <= 0) fail("alpha must be positive");
            w.threshold = static_cast<std::uint32_t>(threshold);
            if (w.source_id == "-") w.source_id.clear();
            std::vector<long> values;
            long v;
            while (ls >> v) values.push_back(v);
            if (!ls.eof()) fail("malformed descriptor element");
            if (values.size() != kDescriptorSize)
                fail("descriptor has " + std::to_string(values.size()) + " elements, expected 64");
            for (int i = 0; i < kDescriptorSize; ++i) {
                if (values[i] < -kDescriptorNorm || values[i] > kDescriptorNorm) fail("descriptor element out of range");
                w.descriptor.values[i] = static_cast<std::int16_t>(values[i]);
            }
            s.weaks.push_back(std::move(w));
        } else if (tag == "THETA") {
            if (!(ls >> s.default_theta)) fail("malformed THETA line");
            std::string extra;
            if (ls >> extra) fail("malformed THETA line");
            have_theta = true;
        } else {
            fail("unknown record '" + tag + "'");
        }
    }
    if (!have_theta) fail("missing THETA line");
    if (s.weaks.empty()) fail("model has no weak classifier");
    if (s.weaks.size() != declared) fail("header declares T=" + std::to_string(declared) + " but file holds " +
                                         std::to_string(s.weaks.size()));
    return s;
}

StrongClassifier load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    return read_model(in, path.string());
}

}  // namespace kpboost
