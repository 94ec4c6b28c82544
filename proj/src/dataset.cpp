#include "lanenum/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace lanenum {
namespace {

constexpr char kMagic[4] = {'L', 'N', 'D', '1'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    void need(std::size_t n) const {
        if (n > left) throw DataError("dataset file truncated");
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        left -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        const std::uint8_t v = *p;
        ++p;
        --left;
        return v;
    }
    void bytes(std::uint8_t* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, p, n);
        p += n;
        left -= n;
    }
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

Sample generate_sample(const DatasetRequest& req, int index) {
    Rng scene_rng = derive_stream(req.seed, static_cast<std::uint64_t>(index), 0, "scene");
    SceneParams scene = generate_scene(scene_rng, req.gen);

    Sample s;
    s.label = scene.label();
    s.image = render_image(scene);
    const int n = req.gen.temporal_radius;
    for (int k = -n; k <= n; ++k) {
        const RenderedMask rm = render_mask(scene, k);
        Rng crng = derive_stream(req.seed, static_cast<std::uint64_t>(index), k, "corrupt");
        s.masks.push_back(corrupt(rm, req.corruption, crng));
    }
    s.scene = std::move(scene);
    return s;
}

Dataset generate_dataset(const DatasetRequest& req) {
    if (req.sample_count < 10) throw DataError("sample_count must be at least 10");
    if (req.gen.temporal_radius < 0) throw ConfigError("temporal_radius must be >= 0");
    if (req.train_fraction <= 0.0 || req.train_fraction >= 1.0)
        throw ConfigError("train_fraction must lie in (0, 1)");

    Dataset ds;
    ds.meta.name = req.name;
    ds.meta.sample_count = req.sample_count;
    ds.meta.height = req.gen.height;
    ds.meta.width = req.gen.width;
    ds.meta.temporal_radius = req.gen.temporal_radius;
    ds.meta.seed = req.seed;
    ds.meta.p_ambiguous = req.gen.p_ambiguous;
    ds.meta.train_fraction = req.train_fraction;
    ds.meta.corruption = req.corruption;

    ds.samples.reserve(static_cast<std::size_t>(req.sample_count));
    for (int i = 0; i < req.sample_count; ++i) {
        ds.samples.push_back(generate_sample(req, i));
        ++ds.meta.class_histogram[static_cast<std::size_t>(ds.samples.back().label)];
    }

    // Shuffled split with a dedicated stream; indices are stored sorted so
    // the file does not depend on the shuffle order.
    std::vector<int> perm(static_cast<std::size_t>(req.sample_count));
    std::iota(perm.begin(), perm.end(), 0);
    Rng srng = derive_stream(req.seed, 0, 0, "split");
    for (int i = 0; i < req.sample_count - 1; ++i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(srng.uniform_int(i, req.sample_count - 1))]);
    const int train_count =
        static_cast<int>(std::llround(req.train_fraction * req.sample_count));
    ds.train_indices.assign(perm.begin(), perm.begin() + train_count);
    ds.test_indices.assign(perm.begin() + train_count, perm.end());
    std::sort(ds.train_indices.begin(), ds.train_indices.end());
    std::sort(ds.test_indices.begin(), ds.test_indices.end());
    return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);

    std::string bin;
    const std::size_t plane = static_cast<std::size_t>(ds.meta.height) * ds.meta.width;
    const int frames = 2 * ds.meta.temporal_radius + 1;
    bin.reserve(16 + ds.samples.size() * (1 + plane * (3 + static_cast<std::size_t>(frames))));
    bin.append(kMagic, 4);
    put_u16(bin, kVersion);
    put_u32(bin, static_cast<std::uint32_t>(ds.samples.size()));
    put_u16(bin, static_cast<std::uint16_t>(ds.meta.height));
    put_u16(bin, static_cast<std::uint16_t>(ds.meta.width));
    bin.push_back(static_cast<char>(frames));
    for (const Sample& s : ds.samples) {
        bin.push_back(static_cast<char>(s.label));
        bin.append(reinterpret_cast<const char*>(s.image.data.data()), s.image.data.size());
        for (const Mask& m : s.masks)
            bin.append(reinterpret_cast<const char*>(m.data.data()), m.data.size());
    }
    write_file(dir / "samples.bin", bin);

    nlohmann::json manifest{
        {"name", ds.meta.name},
        {"sample_count", ds.meta.sample_count},
        {"height", ds.meta.height},
        {"width", ds.meta.width},
        {"temporal_radius", ds.meta.temporal_radius},
        {"seed", ds.meta.seed},
        {"p_ambiguous", ds.meta.p_ambiguous},
        {"train_fraction", ds.meta.train_fraction},
        {"corruption",
         {{"line_dropout_p", ds.meta.corruption.line_dropout_p},
          {"pixel_flip_q", ds.meta.corruption.pixel_flip_q},
          {"thickness_jitter", ds.meta.corruption.thickness_jitter}}},
        {"class_histogram", ds.meta.class_histogram}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    nlohmann::json split{{"train", ds.train_indices}, {"test", ds.test_indices}};
    write_file(dir / "split.json", split.dump() + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    try {
        const nlohmann::json manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
        ds.meta.name = manifest.at("name").get<std::string>();
        ds.meta.sample_count = manifest.at("sample_count").get<int>();
        ds.meta.height = manifest.at("height").get<int>();
        ds.meta.width = manifest.at("width").get<int>();
        ds.meta.temporal_radius = manifest.at("temporal_radius").get<int>();
        ds.meta.seed = manifest.at("seed").get<std::uint64_t>();
        ds.meta.p_ambiguous = manifest.at("p_ambiguous").get<double>();
        ds.meta.train_fraction = manifest.at("train_fraction").get<double>();
        const nlohmann::json& corr = manifest.at("corruption");
        ds.meta.corruption.line_dropout_p = corr.at("line_dropout_p").get<double>();
        ds.meta.corruption.pixel_flip_q = corr.at("pixel_flip_q").get<double>();
        ds.meta.corruption.thickness_jitter = corr.at("thickness_jitter").get<int>();
        const auto hist = manifest.at("class_histogram").get<std::vector<int>>();
        if (hist.size() != 5) throw DataError("class_histogram must have 5 entries");
        std::copy(hist.begin(), hist.end(), ds.meta.class_histogram.begin());

        const nlohmann::json split = nlohmann::json::parse(read_file(dir / "split.json"));
        ds.train_indices = split.at("train").get<std::vector<int>>();
        ds.test_indices = split.at("test").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad dataset metadata: ") + e.what());
    }

    const std::string bin = read_file(dir / "samples.bin");
    Reader r{reinterpret_cast<const std::uint8_t*>(bin.data()), bin.size()};
    char magic[4];
    r.bytes(reinterpret_cast<std::uint8_t*>(magic), 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("samples.bin: bad magic");
    if (r.u16() != kVersion) throw DataError("samples.bin: unsupported version");
    const std::uint32_t count = r.u32();
    const int h = r.u16(), w = r.u16();
    const int frames = r.u8();
    if (static_cast<int>(count) != ds.meta.sample_count || h != ds.meta.height ||
        w != ds.meta.width || frames != 2 * ds.meta.temporal_radius + 1)
        throw DataError("samples.bin does not match manifest.json");

    const std::size_t plane = static_cast<std::size_t>(h) * w;
    ds.samples.resize(count);
    for (Sample& s : ds.samples) {
        s.label = r.u8();
        if (s.label > 4) throw DataError("sample label out of range");
        s.image.height = h;
        s.image.width = w;
        s.image.channels = 3;
        s.image.data.resize(3 * plane);
        r.bytes(s.image.data.data(), 3 * plane);
        s.masks.resize(static_cast<std::size_t>(frames));
        for (Mask& m : s.masks) {
            m.height = h;
            m.width = w;
            m.data.resize(plane);
            r.bytes(m.data.data(), plane);
            for (const std::uint8_t v : m.data)
                if (v != 0 && v != 255) throw DataError("mask byte must be 0 or 255");
        }
    }
    if (r.left != 0) throw DataError("samples.bin has trailing bytes");

    for (const int idx : ds.train_indices)
        if (idx < 0 || idx >= static_cast<int>(count)) throw DataError("split index out of range");
    for (const int idx : ds.test_indices)
        if (idx < 0 || idx >= static_cast<int>(count)) throw DataError("split index out of range");
    return ds;
}

}  // namespace lanenum
