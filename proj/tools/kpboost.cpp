// kpboost command-line tool.
// Exit status: 0 success, 1 contract or usage error, 2 I/O error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kpboost/corpus.hpp"
#include "kpboost/error.hpp"
#include "kpboost/evaluation.hpp"
#include "kpboost/localization.hpp"
#include "kpboost/synthetic.hpp"

using namespace kpboost;
namespace fs = std::filesystem;

namespace {

// Detector settings are not stored in the model, so every command that extracts
// features takes the same flags; use the values given to `train`.
struct FeatureFlags {
    std::int64_t threshold = DetectorParams{}.response_threshold;
    std::size_t max_kp = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--threshold-resp", threshold, "Hessian response threshold")->capture_default_str();
        cmd->add_option("--max-kp", max_kp, "Keep at most N keypoints per image (0: no cap)");
    }
    FeatureParams params() const {
        FeatureParams p;
        p.detector.response_threshold = threshold;
        if (max_kp > 0) p.detector.max_keypoints = max_kp;
        return p;
    }
};

// Either --pos/--neg directories or a --data corpus (optionally split).
struct DataFlags {
    std::string pos, neg, data;
    std::size_t train_pos = 0, train_neg = 0;
    std::uint64_t seed = 1;

    void add(CLI::App* cmd, bool pos_only = false) {
        auto* p = cmd->add_option("--pos", pos, "Directory of positive .pgm images");
        auto* d = cmd->add_option("--data", data, "Corpus directory with pos/, neg/ and optional truth.csv");
        p->excludes(d);
        if (!pos_only) cmd->add_option("--neg", neg, "Directory of negative .pgm images")->excludes(d);
        cmd->add_option("--train-pos", train_pos, "With --data: positives in the training split (0: all)");
        cmd->add_option("--train-neg", train_neg, "With --data: negatives in the training split (0: all)");
        cmd->add_option("--seed", seed, "Split seed")->capture_default_str();
    }

    bool split() const { return !data.empty() && (train_pos > 0 || train_neg > 0); }

    // The training part, or the test part when `test` is set.
    Corpus load(bool test, bool need_neg = true) const {
        Corpus c;
        if (!data.empty()) {
            c = load_corpus(data);
            if (split()) {
                CorpusSplit s = split_corpus(c, train_pos, train_neg, seed);
                c = test ? std::move(s.test) : std::move(s.train);
            }
        } else {
            if (pos.empty()) throw ContractError("either --data or --pos is required");
            c.positives = load_image_dir(pos);
            if (need_neg) {
                if (neg.empty()) throw ContractError("--neg is required with --pos");
                c.negatives = load_image_dir(neg);
            }
        }
        return c;
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    return out;
}

template <typename F>
void write_to(const std::string& path, F&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out = open_out(path);
    write(out);
    if (!out) throw IoError(path + ": write failed");
}

double fp20(std::int64_t v) { return static_cast<double>(v) / static_cast<double>(kFp20One); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Object-category recognition with boosted keypoint presence features"};
    app.require_subcommand(1);

    FeatureFlags feat;

    // keypoints
    auto* kp_cmd = app.add_subcommand("keypoints", "Detect keypoints in one image");
    std::string kp_image, kp_out = "-";
    std::int64_t kp_threshold = DetectorParams{}.response_threshold;
    std::size_t kp_max = 0;
    kp_cmd->add_option("--image", kp_image, "Input .pgm")->required();
    kp_cmd->add_option("--threshold", kp_threshold, "Hessian response threshold")->capture_default_str();
    kp_cmd->add_option("--max", kp_max, "Keep the N strongest (0: all)");
    kp_cmd->add_option("--out", kp_out, "CSV output (- for stdout)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a boosted classifier");
    DataFlags train_data;
    int rounds = 50;
    std::string model_out, dump_matrix, trace_out;
    train_data.add(train_cmd);
    feat.add(train_cmd);
    train_cmd->add_option("--rounds", rounds, "Boosting rounds")->capture_default_str();
    train_cmd->add_option("--out", model_out, "Model file")->required();
    train_cmd->add_option("--dump-matrix", dump_matrix, "Write the distance matrix as CSV");
    train_cmd->add_option("--trace-out", trace_out, "Write the per-round training trace as CSV");

    // classify
    auto* cls_cmd = app.add_subcommand("classify", "Score one image");
    std::string cls_model, cls_image;
    std::optional<std::int64_t> cls_theta;
    cls_cmd->add_option("--model", cls_model, "Model file")->required();
    cls_cmd->add_option("--image", cls_image, "Input .pgm")->required();
    cls_cmd->add_option("--theta", cls_theta, "Decision threshold, FP20 (default: the model's)");
    feat.add(cls_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Precision-recall and error curves on a test set");
    DataFlags eval_data;
    std::string eval_model, pr_out, curve_out, eval_trace;
    eval_cmd->add_option("--model", eval_model, "Model file")->required();
    eval_data.add(eval_cmd);
    feat.add(eval_cmd);
    eval_cmd->add_option("--pr-out", pr_out, "Precision-recall CSV");
    eval_cmd->add_option("--curve-out", curve_out, "Per-round error CSV (needs --trace)");
    eval_cmd->add_option("--trace", eval_trace, "Trace CSV written by train --trace-out");

    // learn-votes
    auto* lv_cmd = app.add_subcommand("learn-votes", "Learn localization votes from positives");
    DataFlags lv_data;
    std::string lv_model, lv_truth, lv_out;
    lv_cmd->add_option("--model", lv_model, "Model file")->required();
    lv_data.add(lv_cmd, true);
    lv_cmd->add_option("--truth", lv_truth, "truth.csv with name,x,y,w,h (default: whole image)");
    lv_cmd->add_option("--out", lv_out, "Vote table file")->required();
    feat.add(lv_cmd);

    // detect
    auto* det_cmd = app.add_subcommand("detect", "Localize objects in one frame");
    std::string det_model, det_votes, det_image, det_out = "-";
    std::optional<std::int64_t> min_mass;
    det_cmd->add_option("--model", det_model, "Model file")->required();
    det_cmd->add_option("--votes", det_votes, "Vote table file")->required();
    det_cmd->add_option("--image", det_image, "Input .pgm")->required();
    det_cmd->add_option("--min-mass", min_mass, "Minimum vote mass, FP20 (default: the model's theta)");
    det_cmd->add_option("--out", det_out, "CSV output (- for stdout)");
    feat.add(det_cmd);

    // synth
    auto* syn_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
    std::size_t n_pos = 200, n_neg = 200, frames = 0;
    int objects = 1, frame_w = 160, frame_h = 120;
    std::uint64_t syn_seed = 1;
    std::string syn_out;
    syn_cmd->add_option("--n-pos", n_pos, "Positive images")->capture_default_str();
    syn_cmd->add_option("--n-neg", n_neg, "Negative images")->capture_default_str();
    syn_cmd->add_option("--seed", syn_seed, "Generator seed")->capture_default_str();
    syn_cmd->add_option("--out", syn_out, "Output directory")->required();
    syn_cmd->add_option("--frames", frames, "Also write N detection frames to OUT/frames");
    syn_cmd->add_option("--objects", objects, "Objects per frame")->capture_default_str();
    syn_cmd->add_option("--frame-width", frame_w, "Frame width")->capture_default_str();
    syn_cmd->add_option("--frame-height", frame_h, "Frame height")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*kp_cmd) {
            DetectorParams p;
            p.response_threshold = kp_threshold;
            if (kp_max > 0) p.max_keypoints = kp_max;
            const auto kps = detect_keypoints(IntegralImage(load_pgm(kp_image)), p);
            write_to(kp_out, [&](std::ostream& o) { write_keypoints_csv(kps, o); });
        } else if (*train_cmd) {
            if (rounds < 1) throw ContractError("--rounds must be >= 1");
            const Corpus c = train_data.load(false);
            const FeatureParams fp = feat.params();
            const auto pos = extract_all(c.positives, fp);
            const auto neg = extract_all(c.negatives, fp);
            const DistanceMatrix m = build_distance_matrix(pos, neg);
            std::fprintf(stderr, "%zu positive keypoints, %zu training images\n", m.rows(), m.cols());
            if (!dump_matrix.empty()) write_distance_matrix_csv(m, dump_matrix);
            const TrainResult r = train_adaboost(m, rounds);
            save_model(r.model, model_out);
            if (!trace_out.empty())
                write_to(trace_out, [&](std::ostream& o) { write_trace_csv(r.trace, m.cols(), o); });
            std::fprintf(stderr, "%zu weak classifiers, final training error %zu/%zu\n", r.model.weaks.size(),
                         r.trace.back().train_errors, m.cols());
        } else if (*cls_cmd) {
            const StrongClassifier model = load_model(cls_model);
            const ImageFeatures f = extract_features(load_pgm(cls_image), feat.params());
            const std::int64_t score = strong_score(model, f);
            std::printf("%lld %d\n", static_cast<long long>(score), score >= cls_theta.value_or(model.default_theta) ? 1 : 0);
        } else if (*eval_cmd) {
            const StrongClassifier model = load_model(eval_model);
            const Corpus c = eval_data.load(eval_data.split());
            const FeatureParams fp = feat.params();
            const auto pos = extract_all(c.positives, fp);
            const auto neg = extract_all(c.negatives, fp);
            const PRCurve pr = eval_pr(model, pos, neg);
            if (!pr_out.empty()) write_to(pr_out, [&](std::ostream& o) { write_pr_csv(pr, o); });
            if (!curve_out.empty()) {
                if (eval_trace.empty()) throw ContractError("--curve-out needs --trace");
                std::ifstream in(eval_trace);
                if (!in) throw IoError(eval_trace + ": cannot open");
                std::size_t n_train = 0;
                const auto trace = read_trace_csv(in, n_train);
                const auto curve = error_curve(model, trace, n_train, pos, neg);
                write_to(curve_out, [&](std::ostream& o) { write_curve_csv(curve, o); });
            }
            std::size_t wrong = 0;
            for (const auto& f : pos) wrong += strong_score(model, f) < model.default_theta;
            for (const auto& f : neg) wrong += strong_score(model, f) >= model.default_theta;
            std::printf("test images %zu, errors at default theta %zu, recall at precision >= 0.90: %.4f\n",
                        pos.size() + neg.size(), wrong, fp20(max_recall_at_precision(pr, kFp20One * 9 / 10)));
        } else if (*lv_cmd) {
            const StrongClassifier model = load_model(lv_model);
            Corpus c = lv_data.load(false, false);
            std::map<std::string, Rect> truth;
            if (!lv_truth.empty())
                for (auto& [name, box] : load_truth(lv_truth)) truth[name] = box;
            const FeatureParams fp = feat.params();
            const auto pos = extract_all(c.positives, fp);
            std::vector<LabeledFeatures> labeled;
            for (std::size_t i = 0; i < pos.size(); ++i) {
                const Sample& s = c.positives[i];
                Rect box{0, 0, s.image.width(), s.image.height()};
                if (auto it = truth.find(s.name); it != truth.end()) box = it->second;
                else if (lv_truth.empty() && s.truth) box = *s.truth;
                labeled.push_back({&pos[i], box});
            }
            const VoteTable votes = learn_votes(model, labeled);
            if (votes.empty()) std::fprintf(stderr, "warning: no weak classifier matched; detection is disabled\n");
            save_votes(votes, lv_out);
            std::fprintf(stderr, "%zu of %zu weak classifiers have votes\n", votes.votes.size(), model.weaks.size());
        } else if (*det_cmd) {
            const StrongClassifier model = load_model(det_model);
            const VoteTable votes = load_votes(det_votes);
            const GrayImage img = load_pgm(det_image);
            HoughParams hp;
            hp.min_mass = min_mass.value_or(model.default_theta);
            const auto dets = hough_detect(model, votes, extract_features(img, feat.params()), img.width(), img.height(), hp);
            write_to(det_out, [&](std::ostream& o) { write_detections_csv(dets, o); });
        } else if (*syn_cmd) {
            const Corpus c = synthetic::generate(n_pos, n_neg, syn_seed);
            save_corpus(c, syn_out);
            if (frames > 0) {
                const fs::path dir = fs::path(syn_out) / "frames";
                fs::create_directories(dir);
                std::ofstream truth = open_out((dir / "truth.csv").string());
                truth << "name,x,y,w,h\n";
                char name[32];
                for (std::size_t i = 0; i < frames; ++i) {
                    const auto sc = synthetic::scene(frame_w, frame_h, objects, syn_seed * 1'000'003 + i);
                    std::snprintf(name, sizeof name, "frame-%05zu", i);
                    save_pgm(sc.image, dir / (std::string(name) + ".pgm"));
                    for (const Rect& r : sc.truths)
                        truth << name << ',' << r.x << ',' << r.y << ',' << r.w << ',' << r.h << '\n';
                }
                if (!truth) throw IoError((dir / "truth.csv").string() + ": write failed");
            }
        }
    } catch (const IoError& e) {
        std::fprintf(stderr, "kpboost: %s\n", e.what());
        return 2;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "kpboost: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "kpboost: %s\n", e.what());
        return 1;
    }
    return 0;
}
