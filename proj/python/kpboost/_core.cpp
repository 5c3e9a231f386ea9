#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "kpboost/boosting.hpp"
#include "kpboost/corpus.hpp"
#include "kpboost/descriptor.hpp"
#include "kpboost/detector.hpp"
#include "kpboost/error.hpp"
#include "kpboost/evaluation.hpp"
#include "kpboost/fixed_point.hpp"
#include "kpboost/image.hpp"
#include "kpboost/localization.hpp"
#include "kpboost/matching.hpp"
#include "kpboost/synthetic.hpp"

namespace py = pybind11;
using namespace kpboost;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

GrayImage image_from_array(const U8Array& a) {
    if (a.ndim() != 2) throw ContractError("image array must be 2-D");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    std::vector<std::uint8_t> data(a.data(), a.data() + a.size());
    return GrayImage(w, h, std::move(data));
}

U8Array image_to_array(const GrayImage& img) {
    U8Array out({img.height(), img.width()});
    if (!img.empty()) std::memcpy(out.mutable_data(), img.pixels().data(), img.pixels().size());
    return out;
}

std::string rect_repr(const Rect& r) {
    return "Rect(" + std::to_string(r.x) + ", " + std::to_string(r.y) + ", " + std::to_string(r.w) + ", " +
           std::to_string(r.h) + ")";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Keypoint-based boosted object detection";

    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Rect>(m, "Rect")
        .def(py::init([](int x, int y, int w, int h) { return Rect{x, y, w, h}; }), py::arg("x") = 0,
             py::arg("y") = 0, py::arg("w") = 1, py::arg("h") = 1)
        .def_readwrite("x", &Rect::x)
        .def_readwrite("y", &Rect::y)
        .def_readwrite("w", &Rect::w)
        .def_readwrite("h", &Rect::h)
        .def("__eq__", [](const Rect& a, const Rect& b) { return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h; })
        .def("__repr__", rect_repr);

    py::class_<GrayImage>(m, "GrayImage")
        .def(py::init<int, int, std::uint8_t>(), py::arg("width"), py::arg("height"), py::arg("fill") = 0)
        .def(py::init(&image_from_array), py::arg("array"))
        .def_property_readonly("width", &GrayImage::width)
        .def_property_readonly("height", &GrayImage::height)
        .def("to_array", &image_to_array)
        .def("__getitem__", [](const GrayImage& img, std::pair<int, int> xy) {
            auto [x, y] = xy;
            if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) throw py::index_error();
            return img(x, y);
        })
        .def("__eq__", [](const GrayImage& a, const GrayImage& b) { return a == b; });

    m.def("load_pgm", &load_pgm, py::arg("path"));
    m.def("save_pgm", &save_pgm, py::arg("image"), py::arg("path"));
    m.def(
        "decode_pgm",
        [](py::bytes b) {
            std::string s = b;
            return decode_pgm(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        },
        py::arg("data"));

    py::class_<IntegralImage>(m, "IntegralImage")
        .def(py::init<const GrayImage&>(), py::arg("image"))
        .def_property_readonly("width", &IntegralImage::width)
        .def_property_readonly("height", &IntegralImage::height)
        .def("at", [](const IntegralImage& ii, int x, int y) {
            if (x < 0 || y < 0 || x >= ii.width() || y >= ii.height()) throw py::index_error();
            return ii.at(x, y);
        })
        .def("box_sum", &IntegralImage::box_sum, py::arg("rect"))
        .def("contains", &IntegralImage::contains, py::arg("rect"));
    m.def("integral", &integral, py::arg("image"));

    py::class_<Keypoint>(m, "Keypoint")
        .def(py::init<>())
        .def_readwrite("x", &Keypoint::x)
        .def_readwrite("y", &Keypoint::y)
        .def_readwrite("scale", &Keypoint::scale)
        .def_readwrite("response", &Keypoint::response)
        .def("__eq__", [](const Keypoint& a, const Keypoint& b) { return a == b; })
        .def("__repr__", [](const Keypoint& k) {
            return "Keypoint(x=" + std::to_string(k.x) + ", y=" + std::to_string(k.y) +
                   ", scale=" + std::to_string(k.scale) + ", response=" + std::to_string(k.response) + ")";
        });

    py::class_<DetectorParams>(m, "DetectorParams")
        .def(py::init<>())
        .def_readwrite("filter_sizes", &DetectorParams::filter_sizes)
        .def_readwrite("stride", &DetectorParams::stride)
        .def_readwrite("response_threshold", &DetectorParams::response_threshold)
        .def_readwrite("max_keypoints", &DetectorParams::max_keypoints)
        .def_readwrite("imbrication_radius", &DetectorParams::imbrication_radius)
        .def("validate", &DetectorParams::validate);

    py::enum_<BorderPolicy>(m, "BorderPolicy")
        .value("Skip", BorderPolicy::Skip)
        .value("PartialWindow", BorderPolicy::PartialWindow);

    py::class_<DescriptorParams>(m, "DescriptorParams")
        .def(py::init<>())
        .def_readwrite("border", &DescriptorParams::border);

    py::class_<FeatureParams>(m, "FeatureParams")
        .def(py::init<>())
        .def_readwrite("detector", &FeatureParams::detector)
        .def_readwrite("descriptor", &FeatureParams::descriptor);

    m.def("detect_keypoints", &detect_keypoints, py::arg("integral"), py::arg("params") = DetectorParams{});
    m.def("filter_scale_fp8", &filter_scale_fp8, py::arg("filter_size"));

    py::class_<Descriptor>(m, "Descriptor")
        .def(py::init<>())
        .def_property(
            "values", [](const Descriptor& d) { return std::vector<std::int16_t>(d.values.begin(), d.values.end()); },
            [](Descriptor& d, const std::vector<std::int16_t>& v) {
                if (v.size() != d.values.size()) throw ContractError("descriptor needs 64 values");
                std::copy(v.begin(), v.end(), d.values.begin());
            })
        .def("is_zero", &Descriptor::is_zero)
        .def("__eq__", [](const Descriptor& a, const Descriptor& b) { return a == b; });

    m.def("compute_descriptor", &compute_descriptor, py::arg("integral"), py::arg("keypoint"),
          py::arg("params") = DescriptorParams{});
    m.def("sad", &sad, py::arg("a"), py::arg("b"));
    m.def("ln_fp20", &ln_fp20, py::arg("x"));

    py::class_<ImageFeatures>(m, "ImageFeatures")
        .def(py::init<>())
        .def_readwrite("id", &ImageFeatures::id)
        .def_readwrite("keypoints", &ImageFeatures::keypoints)
        .def_readwrite("descriptors", &ImageFeatures::descriptors)
        .def("__len__", &ImageFeatures::size);

    m.def("extract_features", &extract_features, py::arg("image"), py::arg("params") = FeatureParams{},
          py::arg("id") = std::string{});
    m.def("dist_to_image", &dist_to_image, py::arg("descriptor"), py::arg("features"));
    m.attr("NO_KEYPOINT_DISTANCE") = kNoKeypointDistance;

    py::class_<DistanceMatrix>(m, "DistanceMatrix")
        .def_property_readonly("rows", &DistanceMatrix::rows)
        .def_property_readonly("cols", &DistanceMatrix::cols)
        .def("at", [](const DistanceMatrix& d, std::size_t i, std::size_t j) {
            if (i >= d.rows() || j >= d.cols()) throw py::index_error();
            return d.at(i, j);
        })
        .def_readonly("labels", &DistanceMatrix::labels)
        .def_readonly("column_ids", &DistanceMatrix::column_ids)
        .def_readonly("provenance", &DistanceMatrix::provenance);

    py::class_<PositiveKeypoint>(m, "PositiveKeypoint")
        .def_readonly("keypoint", &PositiveKeypoint::keypoint)
        .def_readonly("column", &PositiveKeypoint::column)
        .def_readonly("descriptor", &PositiveKeypoint::descriptor);

    m.def(
        "build_distance_matrix",
        [](const std::vector<ImageFeatures>& pos, const std::vector<ImageFeatures>& neg) {
            return build_distance_matrix(pos, neg);
        },
        py::arg("positives"), py::arg("negatives"));

    py::class_<WeakClassifier>(m, "WeakClassifier")
        .def(py::init<>())
        .def_readwrite("descriptor", &WeakClassifier::descriptor)
        .def_readwrite("threshold", &WeakClassifier::threshold)
        .def_readwrite("alpha", &WeakClassifier::alpha)
        .def_readwrite("source_id", &WeakClassifier::source_id)
        .def_readwrite("kx", &WeakClassifier::kx)
        .def_readwrite("ky", &WeakClassifier::ky)
        .def_readwrite("kscale", &WeakClassifier::kscale);

    py::class_<StrongClassifier>(m, "StrongClassifier")
        .def(py::init<>())
        .def_static("from_weaks", &StrongClassifier::from_weaks, py::arg("weaks"))
        .def_readwrite("weaks", &StrongClassifier::weaks)
        .def_readwrite("default_theta", &StrongClassifier::default_theta)
        .def("prefix", &StrongClassifier::prefix, py::arg("n"))
        .def("alpha_sum", &StrongClassifier::alpha_sum)
        .def("__len__", [](const StrongClassifier& s) { return s.weaks.size(); })
        .def("__eq__", [](const StrongClassifier& a, const StrongClassifier& b) { return a == b; });

    py::class_<RoundRecord>(m, "RoundRecord")
        .def_readonly("row", &RoundRecord::row)
        .def_readonly("threshold", &RoundRecord::threshold)
        .def_readonly("weighted_error", &RoundRecord::weighted_error)
        .def_readonly("alpha", &RoundRecord::alpha)
        .def_readonly("train_errors", &RoundRecord::train_errors);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("model", &TrainResult::model)
        .def_readonly("trace", &TrainResult::trace);

    m.def("train_adaboost", &train_adaboost, py::arg("matrix"), py::arg("rounds"),
          py::call_guard<py::gil_scoped_release>());
    m.def("weak_eval", &weak_eval, py::arg("weak"), py::arg("features"));
    m.def("strong_score", &strong_score, py::arg("model"), py::arg("features"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));

    py::class_<Sample>(m, "Sample")
        .def(py::init<>())
        .def_readwrite("name", &Sample::name)
        .def_readwrite("image", &Sample::image)
        .def_readwrite("truth", &Sample::truth);

    py::class_<Corpus>(m, "Corpus")
        .def(py::init<>())
        .def_readwrite("positives", &Corpus::positives)
        .def_readwrite("negatives", &Corpus::negatives)
        .def_readwrite("seed", &Corpus::seed);

    py::class_<CorpusSplit>(m, "CorpusSplit").def_readonly("train", &CorpusSplit::train).def_readonly("test", &CorpusSplit::test);

    m.def("split_corpus", &split_corpus, py::arg("corpus"), py::arg("n_pos_train"), py::arg("n_neg_train"),
          py::arg("seed"));
    m.def("load_corpus", &load_corpus, py::arg("dir"));
    m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("dir"));
    m.def(
        "extract_all",
        [](const std::vector<Sample>& samples, const FeatureParams& params) { return extract_all(samples, params); },
        py::arg("samples"), py::arg("params") = FeatureParams{}, py::call_guard<py::gil_scoped_release>());

    m.def("generate", &synthetic::generate, py::arg("n_pos"), py::arg("n_neg"), py::arg("seed"));
    py::class_<synthetic::Scene>(m, "Scene")
        .def_readonly("image", &synthetic::Scene::image)
        .def_readonly("truths", &synthetic::Scene::truths);
    m.def("scene", &synthetic::scene, py::arg("width"), py::arg("height"), py::arg("objects"), py::arg("seed"));

    py::class_<Vote>(m, "Vote")
        .def(py::init<>())
        .def_readwrite("weak", &Vote::weak)
        .def_readwrite("vx", &Vote::vx)
        .def_readwrite("vy", &Vote::vy)
        .def_readwrite("vw", &Vote::vw)
        .def_readwrite("vh", &Vote::vh)
        .def_readwrite("support", &Vote::support);

    py::class_<VoteTable>(m, "VoteTable")
        .def(py::init<>())
        .def_readwrite("votes", &VoteTable::votes)
        .def("__len__", [](const VoteTable& t) { return t.votes.size(); })
        .def("__eq__", [](const VoteTable& a, const VoteTable& b) { return a == b; });

    m.def("vote_sample", &vote_sample, py::arg("keypoint"), py::arg("truth"));
    // Positives are given as (features, truth box) pairs.
    m.def(
        "learn_votes",
        [](const StrongClassifier& model, const std::vector<std::pair<ImageFeatures, Rect>>& positives) {
            std::vector<LabeledFeatures> lf;
            lf.reserve(positives.size());
            for (const auto& [f, r] : positives) lf.push_back({&f, r});
            return learn_votes(model, lf);
        },
        py::arg("model"), py::arg("positives"));
    m.def("save_votes", &save_votes, py::arg("table"), py::arg("path"));
    m.def("load_votes", &load_votes, py::arg("path"));
    m.def("iou_fp8", &iou_fp8, py::arg("a"), py::arg("b"));

    py::class_<Detection>(m, "Detection")
        .def_readonly("box", &Detection::box)
        .def_readonly("score", &Detection::score)
        .def("__repr__", [](const Detection& d) { return "Detection(" + rect_repr(d.box) + ", score=" + std::to_string(d.score) + ")"; });

    py::class_<HoughParams>(m, "HoughParams")
        .def(py::init<>())
        .def_readwrite("min_mass", &HoughParams::min_mass)
        .def_readwrite("cell_size", &HoughParams::cell_size)
        .def_readwrite("merge_iou_fp8", &HoughParams::merge_iou_fp8);

    m.def("hough_detect", &hough_detect, py::arg("model"), py::arg("votes"), py::arg("frame"), py::arg("frame_width"),
          py::arg("frame_height"), py::arg("params"));

    py::class_<PRRow>(m, "PRRow")
        .def_readonly("theta", &PRRow::theta)
        .def_readonly("precision_fp20", &PRRow::precision_fp20)
        .def_readonly("recall_fp20", &PRRow::recall_fp20)
        .def_readonly("tp", &PRRow::tp)
        .def_readonly("fp", &PRRow::fp)
        .def_readonly("fn", &PRRow::fn);

    m.def(
        "pr_curve",
        [](const std::vector<std::int64_t>& scores, const std::vector<std::uint8_t>& labels) {
            return pr_curve(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "eval_pr",
        [](const StrongClassifier& model, const std::vector<ImageFeatures>& pos, const std::vector<ImageFeatures>& neg) {
            return eval_pr(model, pos, neg);
        },
        py::arg("model"), py::arg("positives"), py::arg("negatives"));
}
