#include "kpboost/evaluation.hpp"

#include <algorithm>
#include <istream>
#include <sstream>
#include <string>

#include "kpboost/error.hpp"

namespace kpboost {

namespace {

std::int64_t ratio_fp20(std::size_t num, std::size_t den) {
    return static_cast<std::int64_t>((static_cast<unsigned __int128>(num) << kFp20Bits) / den);
}

PRRow make_row(std::int64_t theta, std::size_t tp, std::size_t fp, std::size_t n_pos) {
    PRRow r;
    r.theta = theta;
    r.tp = tp;
    r.fp = fp;
    r.fn = n_pos - tp;
    r.precision_fp20 = tp + fp == 0 ? kFp20One : ratio_fp20(tp, tp + fp);
    r.recall_fp20 = n_pos == 0 ? 0 : ratio_fp20(tp, n_pos);
    return r;
}

}  // namespace

std::vector<ImageFeatures> extract_all(std::span<const Sample> samples, const FeatureParams& params) {
    std::vector<ImageFeatures> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(extract_features(s.image, params, s.name));
    return out;
}

PRCurve pr_curve(std::span<const std::int64_t> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ContractError("pr_curve: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));

    PRCurve curve;
    curve.push_back(make_row(kThetaPlusInfinity, 0, 0, n_pos));
    std::size_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (labels[order[k]] ? tp : fp) += 1;
        // Emit once all samples sharing this score are counted.
        if (k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]])
            curve.push_back(make_row(scores[order[k]], tp, fp, n_pos));
    }
    curve.push_back(make_row(kThetaMinusInfinity, tp, fp, n_pos));
    return curve;
}

PRCurve eval_pr(const StrongClassifier& model, std::span<const ImageFeatures> positives,
                std::span<const ImageFeatures> negatives) {
    if (positives.empty() && negatives.empty()) throw ContractError("eval_pr: empty test set");
    std::vector<std::int64_t> scores;
    std::vector<std::uint8_t> labels;
    for (const auto& f : positives) {
        scores.push_back(strong_score(model, f));
        labels.push_back(1);
    }
    for (const auto& f : negatives) {
        scores.push_back(strong_score(model, f));
        labels.push_back(0);
    }
    return pr_curve(scores, labels);
}

std::int64_t max_recall_at_precision(const PRCurve& curve, std::int64_t min_precision_fp20) noexcept {
    std::int64_t best = 0;
    for (const PRRow& r : curve)
        if (r.precision_fp20 >= min_precision_fp20) best = std::max(best, r.recall_fp20);
    return best;
}

std::int64_t CurveRow::train_error_fp20() const noexcept { return train_total ? ratio_fp20(train_wrong, train_total) : 0; }
std::int64_t CurveRow::test_error_fp20() const noexcept { return test_total ? ratio_fp20(test_wrong, test_total) : 0; }

std::vector<CurveRow> error_curve(const StrongClassifier& model, std::span<const RoundRecord> trace,
                                  std::size_t n_train, std::span<const ImageFeatures> test_positives,
                                  std::span<const ImageFeatures> test_negatives) {
    const std::size_t n_test = test_positives.size() + test_negatives.size();
    std::vector<std::int64_t> scores(n_test, 0);
    auto image = [&](std::size_t j) -> const ImageFeatures& {
        return j < test_positives.size() ? test_positives[j] : test_negatives[j - test_positives.size()];
    };

    std::vector<CurveRow> rows;
    std::int64_t alpha_sum = 0;
    for (std::size_t t = 0; t < model.weaks.size(); ++t) {
        const WeakClassifier& w = model.weaks[t];
        alpha_sum += w.alpha;
        const std::int64_t theta = (alpha_sum + 1) / 2;
        CurveRow row;
        row.round = t + 1;
        row.test_total = n_test;
        for (std::size_t j = 0; j < n_test; ++j) {
            if (weak_eval(w, image(j))) scores[j] += w.alpha;
            const bool positive = j < test_positives.size();
            if ((scores[j] >= theta) != positive) ++row.test_wrong;
        }
        if (t < trace.size()) {
            row.train_wrong = trace[t].train_errors;
            row.train_total = n_train;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_pr_csv(const PRCurve& curve, std::ostream& out) {
    out << "theta_fp20,precision_fp20,recall_fp20,tp,fp,fn\n";
    for (const PRRow& r : curve)
        out << r.theta << ',' << r.precision_fp20 << ',' << r.recall_fp20 << ',' << r.tp << ',' << r.fp << ',' << r.fn << '\n';
}

void write_curve_csv(std::span<const CurveRow> rows, std::ostream& out) {
    out << "round,train_error_fp20,test_error_fp20,train_wrong,train_total,test_wrong,test_total\n";
    for (const CurveRow& r : rows)
        out << r.round << ',' << r.train_error_fp20() << ',' << r.test_error_fp20() << ',' << r.train_wrong << ','
            << r.train_total << ',' << r.test_wrong << ',' << r.test_total << '\n';
}

void write_keypoints_csv(std::span<const Keypoint> kps, std::ostream& out) {
    out << "x,y,scale_fp8,response\n";
    for (const Keypoint& k : kps) out << k.x << ',' << k.y << ',' << k.scale << ',' << k.response << '\n';
}

void write_detections_csv(std::span<const Detection> dets, std::ostream& out) {
    out << "x,y,w,h,score_fp20\n";
    for (const Detection& d : dets)
        out << d.box.x << ',' << d.box.y << ',' << d.box.w << ',' << d.box.h << ',' << d.score << '\n';
}

void write_trace_csv(std::span<const RoundRecord> trace, std::size_t n_train, std::ostream& out) {
    out << "round,row,threshold,weighted_error_fp32,alpha_fp20,train_wrong,train_total\n";
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const RoundRecord& r = trace[t];
        out << t + 1 << ',' << r.row << ',' << r.threshold << ',' << r.weighted_error << ',' << r.alpha << ','
            << r.train_errors << ',' << n_train << '\n';
    }
}

std::vector<RoundRecord> read_trace_csv(std::istream& in, std::size_t& n_train) {
    std::vector<RoundRecord> trace;
    std::string line;
    std::size_t line_no = 0;
    n_train = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::size_t round = 0;
        RoundRecord r;
        if (!(ls >> round >> r.row >> r.threshold >> r.weighted_error >> r.alpha >> r.train_errors >> n_train) ||
            round != trace.size() + 1)
            throw IoError("trace line " + std::to_string(line_no) + ": malformed");
        trace.push_back(r);
    }
    return trace;
}

}  // namespace kpboost
