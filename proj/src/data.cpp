#include "msnn/data.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>

#include "msnn/error.hpp"
#include "msnn/io.hpp"
#include "msnn/pgm.hpp"
#include "msnn/rng.hpp"

namespace msnn {

namespace fs = std::filesystem;

LabeledSet load_mnist_idx(const std::string& image_path, const std::string& label_path) {
    BinaryReader images(image_path);
    if (images.read_u32_be() != 0x00000803u)
        throw IoError("'" + image_path + "': bad image-file magic");
    const std::uint32_t image_count = images.read_u32_be();
    const std::uint32_t rows = images.read_u32_be();
    const std::uint32_t cols = images.read_u32_be();
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
        throw IoError("'" + image_path + "': implausible image dimensions");

    BinaryReader labels(label_path);
    if (labels.read_u32_be() != 0x00000801u)
        throw IoError("'" + label_path + "': bad label-file magic");
    const std::uint32_t label_count = labels.read_u32_be();
    if (label_count != image_count)
        throw IoError("image count " + std::to_string(image_count) + " != label count " +
                      std::to_string(label_count));

    LabeledSet set;
    set.name = "mnist";
    set.class_count = 10;
    set.samples.resize(image_count);
    std::vector<char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < image_count; ++i) {
        images.read_bytes(buf.data(), buf.size());
        Tensor2 img(static_cast<int>(rows), static_cast<int>(cols));
        for (std::size_t p = 0; p < buf.size(); ++p)
            img.v[p] = static_cast<unsigned char>(buf[p]) / 255.0;
        char lbl;
        labels.read_bytes(&lbl, 1);
        if (static_cast<unsigned char>(lbl) > 9)
            throw IoError("'" + label_path + "': label out of range");
        set.samples[i].image = std::move(img);
        set.samples[i].label = static_cast<unsigned char>(lbl);
    }
    images.expect_eof();
    labels.expect_eof();
    return set;
}

namespace {

constexpr int kCoilSide = 32;
constexpr int kCoilClasses = 20;

Tensor2 to_coil_tensor(const PgmImage& img, const std::string& path) {
    PgmImage use = img;
    if (img.width != kCoilSide || img.height != kCoilSide) {
        if (img.width < kCoilSide || img.height < kCoilSide)
            throw IoError("'" + path + "': image smaller than 32x32");
        std::fprintf(stderr, "warning: rescaling %dx%d image '%s' to 32x32\n", img.width,
                     img.height, path.c_str());
        PgmImage scaled;
        scaled.width = scaled.height = kCoilSide;
        scaled.pixels.resize(kCoilSide * kCoilSide);
        for (int r = 0; r < kCoilSide; ++r)
            for (int c = 0; c < kCoilSide; ++c) {
                int sr = r * img.height / kCoilSide;
                int sc = c * img.width / kCoilSide;
                scaled.pixels[static_cast<std::size_t>(r) * kCoilSide + c] =
                    img.pixels[static_cast<std::size_t>(sr) * img.width + sc];
            }
        use = std::move(scaled);
    }
    Tensor2 out(kCoilSide, kCoilSide);
    for (std::size_t i = 0; i < use.pixels.size(); ++i)
        out.v[i] = use.pixels[i] / 255.0 * 2.0 - 1.0;
    return out;
}

// obj<K>__<A>.<ext> -> (K, A); returns false on any other name
bool parse_coil_name(const std::string& stem, int& obj, int& angle) {
    if (stem.rfind("obj", 0) != 0) return false;
    const std::size_t sep = stem.find("__");
    if (sep == std::string::npos || sep <= 3) return false;
    try {
        std::size_t used = 0;
        obj = std::stoi(stem.substr(3, sep - 3), &used);
        if (used != sep - 3) return false;
        angle = std::stoi(stem.substr(sep + 2), &used);
        if (used != stem.size() - sep - 2) return false;
    } catch (const std::exception&) {
        return false;
    }
    return obj >= 1 && angle >= 0;
}

} // namespace

LabeledSet load_coil20(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");

    std::map<std::pair<int, int>, std::string> files; // (obj, angle) -> path
    int max_obj = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".pgm") continue;
        int obj = 0, angle = 0;
        if (!parse_coil_name(p.stem().string(), obj, angle)) continue;
        files[{obj, angle}] = p.string();
        max_obj = std::max(max_obj, obj);
    }
    if (files.empty()) throw IoError("'" + dir + "': no obj<K>__<A>.pgm files found");
    if (max_obj > kCoilClasses) throw IoError("'" + dir + "': object index above 20");

    std::vector<int> seen(max_obj, 0);
    for (const auto& [key, path] : files) seen[key.first - 1]++;
    for (int k = 0; k < max_obj; ++k)
        if (seen[k] == 0)
            throw IoError("'" + dir + "': missing object class obj" + std::to_string(k + 1));

    LabeledSet set;
    set.name = "coil20";
    set.class_count = max_obj;
    set.samples.reserve(files.size());
    for (const auto& [key, path] : files) {
        Sample s;
        s.image = to_coil_tensor(read_pgm(path), path);
        s.label = key.first - 1;
        set.samples.push_back(std::move(s));
    }
    return set;
}

std::pair<LabeledSet, LabeledSet> split_coil(const LabeledSet& set, int per_class,
                                             std::uint64_t seed) {
    std::vector<std::vector<int>> by_class(set.class_count);
    for (int i = 0; i < set.size(); ++i) by_class[set.samples[i].label].push_back(i);

    for (int c = 0; c < set.class_count; ++c) {
        if (per_class < 1 || per_class > static_cast<int>(by_class[c].size()))
            throw ConfigError("split: per_class " + std::to_string(per_class) +
                              " out of range for class " + std::to_string(c) + " (" +
                              std::to_string(by_class[c].size()) + " samples)");
        if (per_class == static_cast<int>(by_class[c].size()))
            throw ConfigError("split: per_class " + std::to_string(per_class) +
                              " leaves an empty test set");
    }

    Rng rng(sub_seed(seed, 0x5911u));
    std::vector<char> in_train(set.size(), 0);
    for (int c = 0; c < set.class_count; ++c) {
        std::vector<int>& idx = by_class[c];
        rng.shuffle(idx);
        for (int i = 0; i < per_class; ++i) in_train[idx[i]] = 1;
    }

    LabeledSet train, test;
    train.class_count = test.class_count = set.class_count;
    train.name = set.name + "-train";
    test.name = set.name + "-test";
    for (int i = 0; i < set.size(); ++i)
        (in_train[i] ? train : test).samples.push_back(set.samples[i]);
    return {train, test};
}

LabeledSet subset_per_class(const LabeledSet& set, int per_class, std::uint64_t seed) {
    std::vector<std::vector<int>> by_class(set.class_count);
    for (int i = 0; i < set.size(); ++i) by_class[set.samples[i].label].push_back(i);

    Rng rng(sub_seed(seed, 0x5b5eu));
    std::vector<int> chosen;
    for (int c = 0; c < set.class_count; ++c) {
        std::vector<int>& idx = by_class[c];
        if (per_class < 1 || per_class > static_cast<int>(idx.size()))
            throw ConfigError("subset: per_class " + std::to_string(per_class) +
                              " out of range for class " + std::to_string(c));
        rng.shuffle(idx);
        chosen.insert(chosen.end(), idx.begin(), idx.begin() + per_class);
    }
    std::sort(chosen.begin(), chosen.end());

    LabeledSet out;
    out.class_count = set.class_count;
    out.name = set.name + "-subset" + std::to_string(per_class);
    out.samples.reserve(chosen.size());
    for (int i : chosen) out.samples.push_back(set.samples[i]);
    return out;
}

Vec one_hot(int label, int c) {
    if (label < 0 || label >= c)
        throw ConfigError("one_hot: label " + std::to_string(label) + " out of range for " +
                          std::to_string(c) + " classes");
    Vec t(c, 0.0);
    t[label] = 1.0;
    return t;
}

std::vector<int> class_counts(const LabeledSet& set) {
    std::vector<int> counts(set.class_count, 0);
    for (const Sample& s : set.samples) counts[s.label]++;
    return counts;
}

void save_cache(const std::string& path, const LabeledSet& set) {
    BinaryWriter w(path);
    w.write_bytes("MSDS", 4);
    w.write_u32(static_cast<std::uint32_t>(set.size()));
    w.write_u32(static_cast<std::uint32_t>(set.class_count));
    w.write_u32(static_cast<std::uint32_t>(set.side()));
    for (const Sample& s : set.samples) w.write_tensor(s.image);
    for (const Sample& s : set.samples) w.write_u16(static_cast<std::uint16_t>(s.label));
}

LabeledSet load_cache(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("MSDS");
    const int count = static_cast<int>(r.read_u32());
    const int classes = static_cast<int>(r.read_u32());
    const int side = static_cast<int>(r.read_u32());
    if (count < 1 || classes < 1 || side < 1) throw IoError("'" + path + "': corrupt cache header");

    LabeledSet set;
    set.class_count = classes;
    set.name = "cache";
    set.samples.resize(count);
    for (Sample& s : set.samples) s.image = r.read_tensor(side, side);
    for (Sample& s : set.samples) s.label = r.read_u16();
    r.expect_eof();
    return set;
}

} // namespace msnn
