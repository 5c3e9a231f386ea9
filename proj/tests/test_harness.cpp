#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "kpboost/corpus.hpp"
#include "kpboost/error.hpp"
#include "kpboost/evaluation.hpp"
#include "kpboost/synthetic.hpp"

using namespace kpboost;

namespace {

Corpus numbered_corpus(std::size_t n_pos, std::size_t n_neg) {
    Corpus c;
    for (std::size_t i = 0; i < n_pos; ++i) c.positives.push_back({"p" + std::to_string(i), GrayImage(2, 2, 0), {}});
    for (std::size_t i = 0; i < n_neg; ++i) c.negatives.push_back({"n" + std::to_string(i), GrayImage(2, 2, 0), {}});
    return c;
}

std::vector<std::string> names(const std::vector<Sample>& s) {
    std::vector<std::string> out;
    for (const auto& x : s) out.push_back(x.name);
    return out;
}

std::vector<std::vector<std::int64_t>> parse_csv(const std::string& text, std::string& header) {
    std::istringstream in(text);
    std::getline(in, header);
    std::vector<std::vector<std::int64_t>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::int64_t> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            std::size_t used = 0;
            row.push_back(std::stoll(cell, &used));
            REQUIRE(used == cell.size());
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("SplitMix64 reference stream") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next() == 0x06C45D188009454FULL);
    SplitMix64 r(99);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.between(-3, 3);
        REQUIRE(v >= -3);
        REQUIRE(v <= 3);
    }
}

TEST_CASE("split_corpus") {
    const Corpus c = numbered_corpus(550, 500);
    const CorpusSplit s = split_corpus(c, 352, 322, 2024);
    CHECK(s.train.positives.size() == 352);
    CHECK(s.train.negatives.size() == 322);
    CHECK(s.test.positives.size() == 198);
    CHECK(s.test.negatives.size() == 178);

    std::set<std::string> seen;
    for (const auto* part : {&s.train.positives, &s.train.negatives, &s.test.positives, &s.test.negatives})
        for (const auto& x : *part) REQUIRE(seen.insert(x.name).second);
    CHECK(seen.size() == 1050);

    const CorpusSplit again = split_corpus(c, 352, 322, 2024);
    CHECK(names(again.train.positives) == names(s.train.positives));
    CHECK(names(again.test.negatives) == names(s.test.negatives));
    const CorpusSplit other = split_corpus(c, 352, 322, 2025);
    CHECK(names(other.train.positives) != names(s.train.positives));

    CHECK_THROWS_AS(split_corpus(c, 551, 10, 1), ContractError);
    CHECK_THROWS_AS(split_corpus(c, 10, 501, 1), ContractError);
    try {
        split_corpus(c, 600, 10, 1);
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()).find("550") != std::string::npos);
    }

    const CorpusSplit none = split_corpus(c, 0, 10, 1);
    CHECK(none.train.positives.empty());
    CHECK(none.test.positives.size() == 550);
}

TEST_CASE("synthetic corpus") {
    const Corpus a = synthetic::generate(20, 20, 5);
    const Corpus b = synthetic::generate(20, 20, 5);
    REQUIRE(a.positives.size() == 20);
    REQUIRE(a.negatives.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        REQUIRE(a.positives[i].image == b.positives[i].image);
        REQUIRE(a.negatives[i].image == b.negatives[i].image);
        REQUIRE(a.positives[i].image.width() == 100);
        REQUIRE(a.positives[i].image.height() == 40);
        REQUIRE(a.positives[i].truth.has_value());
        REQUIRE_FALSE(a.negatives[i].truth.has_value());
    }
    CHECK_FALSE(synthetic::generate(20, 20, 6).positives[0].image == a.positives[0].image);

    const Corpus empty_pos = synthetic::generate(0, 3, 5);
    CHECK(empty_pos.positives.empty());
    CHECK(empty_pos.negatives.size() == 3);
}

TEST_CASE("every synthetic positive has keypoints on its template") {
    const Corpus c = synthetic::generate(100, 0, 8);
    for (const auto& s : c.positives) {
        const Rect t = *s.truth;
        const auto kps = detect_keypoints(IntegralImage(s.image));
        const auto on = std::count_if(kps.begin(), kps.end(), [&](const Keypoint& k) {
            return k.x >= t.x && k.x < t.x + t.w && k.y >= t.y && k.y < t.y + t.h;
        });
        REQUIRE(on >= 2);
    }
}

TEST_CASE("corpus directories round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "kpboost_corpus_test";
    std::filesystem::remove_all(dir);
    const Corpus c = synthetic::generate(4, 3, 9);
    save_corpus(c, dir);
    const Corpus back = load_corpus(dir);
    REQUIRE(back.positives.size() == 4);
    REQUIRE(back.negatives.size() == 3);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(back.positives[i].name == c.positives[i].name);
        CHECK(back.positives[i].image == c.positives[i].image);
        REQUIRE(back.positives[i].truth.has_value());
        const Rect a = *back.positives[i].truth, b = *c.positives[i].truth;
        CHECK(a.x == b.x);
        CHECK(a.y == b.y);
        CHECK(a.w == b.w);
        CHECK(a.h == b.h);
    }
    CHECK_THROWS_AS(load_corpus(dir / "nope"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pr_curve") {
    SUBCASE("separable scores reach precision 1 at recall 1") {
        const std::vector<std::int64_t> scores{9, 8, 7, 1, 0};
        const std::vector<std::uint8_t> labels{1, 1, 1, 0, 0};
        const PRCurve c = pr_curve(scores, labels);
        const bool perfect = std::any_of(c.begin(), c.end(), [](const PRRow& r) {
            return r.precision_fp20 == kFp20One && r.recall_fp20 == kFp20One;
        });
        CHECK(perfect);
        CHECK(max_recall_at_precision(c, kFp20One) == kFp20One);
    }
    SUBCASE("endpoints") {
        const std::vector<std::int64_t> scores{5, 3};
        const std::vector<std::uint8_t> labels{1, 0};
        const PRCurve c = pr_curve(scores, labels);
        REQUIRE(c.size() == 4);
        CHECK(c.front().theta == kThetaPlusInfinity);
        CHECK(c.front().recall_fp20 == 0);
        CHECK(c.front().precision_fp20 == kFp20One);
        CHECK(c.back().theta == kThetaMinusInfinity);
        CHECK(c.back().recall_fp20 == kFp20One);
        CHECK(c.back().precision_fp20 == kFp20One / 2);
    }
    SUBCASE("random scores equal a brute-force recount") {
        SplitMix64 rng(10);
        for (int k = 0; k < 300; ++k) {
            const std::size_t n = static_cast<std::size_t>(rng.between(1, 30));
            std::vector<std::int64_t> scores(n);
            std::vector<std::uint8_t> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                scores[i] = rng.between(0, 10);
                labels[i] = static_cast<std::uint8_t>(rng.below(2));
            }
            const PRCurve c = pr_curve(scores, labels);
            std::set<std::int64_t> distinct(scores.begin(), scores.end());
            REQUIRE(c.size() == distinct.size() + 2);
            const std::size_t n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
            for (std::size_t r = 0; r < c.size(); ++r) {
                std::size_t tp = 0, fp = 0, fn = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const bool pred = c[r].theta != kThetaPlusInfinity && scores[i] >= c[r].theta;
                    if (pred && labels[i]) ++tp;
                    if (pred && !labels[i]) ++fp;
                    if (!pred && labels[i]) ++fn;
                }
                REQUIRE(c[r].tp == tp);
                REQUIRE(c[r].fp == fp);
                REQUIRE(c[r].fn == fn);
                REQUIRE(tp + fn == n_pos);
                if (tp + fp == 0) REQUIRE(c[r].precision_fp20 == kFp20One);
                else REQUIRE(c[r].precision_fp20 == static_cast<std::int64_t>((tp << 20) / (tp + fp)));
                if (r > 0) {
                    REQUIRE(c[r - 1].theta > c[r].theta);
                    REQUIRE(c[r - 1].recall_fp20 <= c[r].recall_fp20);
                }
            }
        }
    }
}

TEST_CASE("error curve and evaluation on a synthetic split") {
    const Corpus c = synthetic::generate(60, 60, 12);
    const CorpusSplit s = split_corpus(c, 40, 40, 3);
    const auto tp = extract_all(s.train.positives);
    const auto tn = extract_all(s.train.negatives);
    const auto ep = extract_all(s.test.positives);
    const auto en = extract_all(s.test.negatives);
    const TrainResult r = train_adaboost(build_distance_matrix(tp, tn), 15);
    const auto curve = error_curve(r.model, r.trace, 80, ep, en);
    REQUIRE(curve.size() == 15);
    CHECK(curve.back().train_wrong == r.trace.back().train_errors);

    for (std::size_t t = 0; t < curve.size(); ++t) {
        CHECK(curve[t].round == t + 1);
        CHECK(curve[t].train_wrong == r.trace[t].train_errors);
        CHECK(curve[t].test_total == 40);
        CHECK(curve[t].train_total == 80);
        const StrongClassifier p = r.model.prefix(t + 1);
        std::size_t wrong = 0;
        for (const auto& f : ep) wrong += strong_score(p, f) < p.default_theta;
        for (const auto& f : en) wrong += strong_score(p, f) >= p.default_theta;
        CHECK(curve[t].test_wrong == wrong);
    }

    // A prefix of length 1 is its weak classifier alone.
    std::size_t single = 0;
    for (const auto& f : ep) single += !weak_eval(r.model.weaks[0], f);
    for (const auto& f : en) single += weak_eval(r.model.weaks[0], f);
    CHECK(curve[0].test_wrong == single);

    const PRCurve pr = eval_pr(r.model, ep, en);
    std::ostringstream pr_csv, curve_csv, trace_csv;
    write_pr_csv(pr, pr_csv);
    write_curve_csv(curve, curve_csv);
    write_trace_csv(r.trace, 80, trace_csv);

    std::string header;
    const auto pr_rows = parse_csv(pr_csv.str(), header);
    CHECK(header == "theta_fp20,precision_fp20,recall_fp20,tp,fp,fn");
    REQUIRE(pr_rows.size() == pr.size());
    for (std::size_t i = 0; i < pr.size(); ++i) {
        CHECK(pr_rows[i][0] == pr[i].theta);
        CHECK(pr_rows[i][1] == pr[i].precision_fp20);
        CHECK(pr_rows[i][2] == pr[i].recall_fp20);
        CHECK(pr_rows[i][3] == static_cast<std::int64_t>(pr[i].tp));
    }
    const auto curve_rows = parse_csv(curve_csv.str(), header);
    CHECK(header == "round,train_error_fp20,test_error_fp20,train_wrong,train_total,test_wrong,test_total");
    REQUIRE(curve_rows.size() == curve.size());
    CHECK(curve_rows[3][2] == curve[3].test_error_fp20());

    std::istringstream in(trace_csv.str());
    std::size_t n_train = 0;
    const auto trace = read_trace_csv(in, n_train);
    CHECK(n_train == 80);
    REQUIRE(trace.size() == r.trace.size());
    for (std::size_t t = 0; t < trace.size(); ++t) {
        CHECK(trace[t].row == r.trace[t].row);
        CHECK(trace[t].threshold == r.trace[t].threshold);
        CHECK(trace[t].weighted_error == r.trace[t].weighted_error);
        CHECK(trace[t].alpha == r.trace[t].alpha);
        CHECK(trace[t].train_errors == r.trace[t].train_errors);
    }
}
