#include "lanenum/model_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace lanenum {

namespace {

constexpr char kMagic[4] = {'L', 'N', 'M', '1'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32_array(std::string& out, const std::vector<float>& v) {
    static_assert(sizeof(float) == 4);
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
    const std::size_t base = out.size();
    out.resize(base + v.size() * 4);
    std::memcpy(out.data() + base, v.data(), v.size() * 4);
#else
    for (const float f : v) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
#endif
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    explicit Reader(const std::string& b) : buf(b) {}

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw DataError("model file truncated");
    }
    std::uint16_t u16() {
        need(2);
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 2;
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    std::uint32_t u32() {
        need(4);
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }
    void f32_array(std::vector<float>& out) {
        need(out.size() * 4);
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
        std::memcpy(out.data(), buf.data() + pos, out.size() * 4);
        pos += out.size() * 4;
#else
        for (auto& f : out) {
            const std::uint32_t bits = u32();
            std::memcpy(&f, &bits, 4);
        }
#endif
    }
};

const char* kind_tag(LayerKind k) { return layer_kind_name(k); }

LayerKind kind_from_tag(const std::string& tag) {
    for (const LayerKind k : {LayerKind::ConvStem, LayerKind::ConvBlock, LayerKind::Flatten,
                              LayerKind::Dense, LayerKind::SoftmaxOutput}) {
        if (tag == kind_tag(k)) return k;
    }
    throw DataError("unknown layer kind in model file: " + tag);
}

}  // namespace

std::string arch_to_json(const ArchConfig& cfg, const std::string& variant) {
    nlohmann::json j;
    j["variant"] = variant;
    j["input_channels"] = cfg.input_channels;
    j["input_h"] = cfg.input_h;
    j["input_w"] = cfg.input_w;
    j["layers"] = nlohmann::json::array();
    for (const auto& spec : cfg.layers) {
        nlohmann::json l;
        l["kind"] = kind_tag(spec.kind);
        switch (spec.kind) {
            case LayerKind::ConvStem:
                l["out_channels"] = spec.out_channels;
                break;
            case LayerKind::ConvBlock:
                l["out_channels"] = spec.out_channels;
                l["dropout_rate"] = spec.dropout_rate;
                break;
            case LayerKind::Flatten:
                break;
            case LayerKind::Dense:
                l["out_units"] = spec.out_units;
                l["dropout_rate"] = spec.dropout_rate;
                break;
            case LayerKind::SoftmaxOutput:
                l["classes"] = spec.out_units;
                break;
        }
        j["layers"].push_back(std::move(l));
    }
    return j.dump();
}

std::pair<ArchConfig, std::string> arch_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad model config block: ") + e.what());
    }
    ArchConfig cfg;
    std::string variant;
    try {
        variant = j.at("variant").get<std::string>();
        cfg.input_channels = j.at("input_channels").get<int>();
        cfg.input_h = j.at("input_h").get<int>();
        cfg.input_w = j.at("input_w").get<int>();
        for (const auto& l : j.at("layers")) {
            LayerSpec spec;
            spec.kind = kind_from_tag(l.at("kind").get<std::string>());
            switch (spec.kind) {
                case LayerKind::ConvStem:
                    spec.out_channels = l.at("out_channels").get<int>();
                    break;
                case LayerKind::ConvBlock:
                    spec.out_channels = l.at("out_channels").get<int>();
                    spec.dropout_rate = l.at("dropout_rate").get<double>();
                    break;
                case LayerKind::Flatten:
                    break;
                case LayerKind::Dense:
                    spec.out_units = l.at("out_units").get<int>();
                    spec.dropout_rate = l.at("dropout_rate").get<double>();
                    break;
                case LayerKind::SoftmaxOutput:
                    spec.out_units = l.at("classes").get<int>();
                    break;
            }
            cfg.layers.push_back(spec);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad model config block: ") + e.what());
    }
    return {cfg, variant};
}

void save_model(const std::string& path, const TrainState& state, const std::string& variant) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    const std::string cfg_json = arch_to_json(state.cfg, variant);
    put_u32(out, static_cast<std::uint32_t>(cfg_json.size()));
    out += cfg_json;

    for (const auto& lv : state.layers) {
        if (!lv.w.empty()) put_f32_array(out, lv.w.value);
        if (!lv.b.empty()) put_f32_array(out, lv.b.value);
        if (!lv.gain.empty()) {
            put_f32_array(out, lv.gain.value);
            put_f32_array(out, lv.beta.value);
            put_f32_array(out, lv.run_mean);
            put_f32_array(out, lv.run_var);
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open model file for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("failed writing model file: " + path);
}

ModelFile load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open model file: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r(buf);
    r.need(4);
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw DataError("not an LNM1 model file");
    r.pos = 4;
    const std::uint16_t version = r.u16();
    if (version != kVersion)
        throw DataError("unsupported model version " + std::to_string(version));
    const std::uint32_t cfg_len = r.u32();
    r.need(cfg_len);
    const std::string cfg_json = buf.substr(r.pos, cfg_len);
    r.pos += cfg_len;

    ModelFile mf;
    std::tie(mf.cfg, mf.variant) = arch_from_json(cfg_json);
    mf.state = init_state<float>(mf.cfg, 0);
    for (auto& lv : mf.state.layers) {
        if (!lv.w.empty()) r.f32_array(lv.w.value);
        if (!lv.b.empty()) r.f32_array(lv.b.value);
        if (!lv.gain.empty()) {
            r.f32_array(lv.gain.value);
            r.f32_array(lv.beta.value);
            r.f32_array(lv.run_mean);
            r.f32_array(lv.run_var);
        }
    }
    if (r.pos != buf.size()) throw DataError("trailing bytes in model file");
    return mf;
}

}  // namespace lanenum
