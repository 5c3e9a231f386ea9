#include "kpboost/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "kpboost/error.hpp"
#include "kpboost/random.hpp"

namespace kpboost {

namespace fs = std::filesystem;

namespace {

template <class T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

CorpusSplit split_corpus(const Corpus& c, std::size_t n_pos_train, std::size_t n_neg_train, std::uint64_t seed) {
    if (n_pos_train > c.positives.size() || n_neg_train > c.negatives.size()) {
        std::ostringstream msg;
        msg << "split_corpus: requested " << n_pos_train << " positive / " << n_neg_train << " negative training images but only "
            << c.positives.size() << " / " << c.negatives.size() << " are available";
        throw ContractError(msg.str());
    }
    SplitMix64 rng(seed);
    std::vector<std::size_t> pos(c.positives.size()), neg(c.negatives.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = i;
    shuffle(pos, rng);
    shuffle(neg, rng);

    CorpusSplit s;
    s.train.seed = s.test.seed = seed;
    for (std::size_t i = 0; i < pos.size(); ++i)
        (i < n_pos_train ? s.train : s.test).positives.push_back(c.positives[pos[i]]);
    for (std::size_t i = 0; i < neg.size(); ++i)
        (i < n_neg_train ? s.train : s.test).negatives.push_back(c.negatives[neg[i]]);
    return s;
}

std::vector<Sample> load_image_dir(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Sample> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back({f.stem().string(), load_pgm(f), std::nullopt});
    return out;
}

std::vector<std::pair<std::string, Rect>> load_truth(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    std::vector<std::pair<std::string, Rect>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line_no == 1 && line.rfind("name,", 0) == 0)) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::string name;
        Rect r;
        if (!(ls >> name >> r.x >> r.y >> r.w >> r.h) || r.w < 1 || r.h < 1)
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed truth row");
        out.emplace_back(name, r);
    }
    return out;
}

Corpus load_corpus(const fs::path& dir) {
    Corpus c;
    c.positives = load_image_dir(dir / "pos");
    c.negatives = load_image_dir(dir / "neg");
    if (fs::exists(dir / "truth.csv")) {
        std::map<std::string, Rect> truth;
        for (auto& [name, r] : load_truth(dir / "truth.csv")) truth[name] = r;
        for (Sample& s : c.positives)
            if (auto it = truth.find(s.name); it != truth.end()) s.truth = it->second;
    }
    return c;
}

void save_corpus(const Corpus& c, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "pos", ec);
    fs::create_directories(dir / "neg", ec);
    if (ec) throw IoError(dir.string() + ": cannot create directories: " + ec.message());
    std::ofstream truth(dir / "truth.csv");
    if (!truth) throw IoError((dir / "truth.csv").string() + ": cannot open for writing");
    truth << "name,x,y,w,h\n";
    for (const Sample& s : c.positives) {
        save_pgm(s.image, dir / "pos" / (s.name + ".pgm"));
        if (s.truth) truth << s.name << ',' << s.truth->x << ',' << s.truth->y << ',' << s.truth->w << ',' << s.truth->h << '\n';
    }
    for (const Sample& s : c.negatives) save_pgm(s.image, dir / "neg" / (s.name + ".pgm"));
}

}  // namespace kpboost
