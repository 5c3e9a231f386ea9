#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kpboost/image.hpp"

namespace kpboost {

struct Sample {
    std::string name;
    GrayImage image;
    std::optional<Rect> truth;  // object box, when known
};

struct Corpus {
    std::vector<Sample> positives;
    std::vector<Sample> negatives;
    std::uint64_t seed = 0;
};

struct CorpusSplit {
    Corpus train;
    Corpus test;
};

/// Shuffles each class independently (Fisher-Yates driven by SplitMix64(seed), positives
/// first) and sends the first n of each class to train, the rest to test.
CorpusSplit split_corpus(const Corpus& c, std::size_t n_pos_train, std::size_t n_neg_train, std::uint64_t seed);

/// All *.pgm files of a directory in lexicographic order.
std::vector<Sample> load_image_dir(const std::filesystem::path& dir);

/// Reads DIR/pos/*.pgm, DIR/neg/*.pgm and, if present, DIR/truth.csv (name,x,y,w,h).
Corpus load_corpus(const std::filesystem::path& dir);

/// Inverse of load_corpus.
void save_corpus(const Corpus& c, const std::filesystem::path& dir);

/// Reads a truth.csv file into (name -> box) pairs, in file order.
std::vector<std::pair<std::string, Rect>> load_truth(const std::filesystem::path& path);

}  // namespace kpboost
