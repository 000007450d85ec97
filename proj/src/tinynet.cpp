#include "upsr/tinynet.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>

namespace upsr {

TinyNetModel make_tinynet(int channels, int steps, ModelRole role, int hidden, int n_layers, int r) {
    if (channels < 1 || steps < 1 || hidden < 1 || n_layers < 2 || r < 1)
        throw ParamError("make_tinynet: need channels,steps,hidden >= 1, n_layers >= 2, r >= 1");
    TinyNetModel m;
    m.role = role;
    m.channels = channels;
    m.r = r;
    m.hidden = hidden;
    m.steps = steps;
    const int in0 = 3 * channels * r * r;
    const int out_last = channels * r * r;
    m.layers.resize(static_cast<size_t>(n_layers));
    for (int l = 0; l < n_layers; ++l) {
        ConvLayer<float>& cl = m.layers[static_cast<size_t>(l)];
        cl.k = 3;
        cl.in_ch = l == 0 ? in0 : hidden;
        cl.out_ch = l == n_layers - 1 ? out_last : hidden;
        cl.w.assign(static_cast<size_t>(cl.in_ch) * cl.out_ch * cl.k * cl.k, 0.0f);
        cl.b.assign(static_cast<size_t>(cl.out_ch), 0.0f);
    }
    m.t_table.assign(static_cast<size_t>(steps) * hidden, 0.0f);
    return m;
}

void randomize_params(TinyNetModel& m, Rng& rng) {
    for (size_t l = 0; l < m.layers.size(); ++l) {
        ConvLayer<float>& cl = m.layers[l];
        double scale = std::sqrt(2.0 / (static_cast<double>(cl.in_ch) * cl.k * cl.k));
        // near-zero head: the initial prediction stays close to x_t while
        // gradients still reach every layer from the first step
        if (l + 1 == m.layers.size()) scale *= 0.05;
        for (auto& w : cl.w) w = static_cast<float>(scale * rng.normal());
    }
}

NetT<double> widen(const TinyNetModel& m) {
    NetT<double> d;
    d.format_version = m.format_version;
    d.role = m.role;
    d.channels = m.channels;
    d.r = m.r;
    d.hidden = m.hidden;
    d.steps = m.steps;
    d.layers.resize(m.layers.size());
    for (size_t l = 0; l < m.layers.size(); ++l) {
        d.layers[l].in_ch = m.layers[l].in_ch;
        d.layers[l].out_ch = m.layers[l].out_ch;
        d.layers[l].k = m.layers[l].k;
        d.layers[l].w.assign(m.layers[l].w.begin(), m.layers[l].w.end());
        d.layers[l].b.assign(m.layers[l].b.begin(), m.layers[l].b.end());
    }
    d.t_table.assign(m.t_table.begin(), m.t_table.end());
    return d;
}

Tensor<float> to_tensor(const Image& img) {
    Tensor<float> t(img.height, img.width, img.channels);
    t.v = img.data;
    return t;
}

Image to_image(const Tensor<float>& t) {
    Image img(t.h, t.w, t.c);
    img.data = t.v;
    return img;
}

Image tinynet_forward(const TinyNetModel& m, const Image& x_t, const Image& y0, const Image& g_y0,
                      int t) {
    return to_image(net_forward(m, to_tensor(x_t), to_tensor(y0), to_tensor(g_y0), t));
}

MixedLoss mixed_loss(const Image& pred, const Image& x0, double lambda) {
    require_same_shape(pred, x0, "mixed_loss");
    LossResult<float> r = mixed_loss_t(to_tensor(pred), to_tensor(x0), lambda);
    MixedLoss out;
    out.total = r.total;
    out.mse = r.mse;
    out.perceptual = r.perceptual;
    out.grad = to_image(r.grad);
    return out;
}

// ---------------------------------------------------------------------------
// container format

namespace {

constexpr char kMagic[4] = {'U', 'P', 'S', 'R'};
constexpr uint32_t kFormatVersion = 1;

struct ByteSink {
    std::vector<unsigned char> bytes;
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    }
    void f32(float f) {
        uint32_t v;
        std::memcpy(&v, &f, 4);
        u32(v);
    }
    void raw(const char* p, size_t n) {
        bytes.insert(bytes.end(), p, p + n);
    }
};

struct ByteSource {
    const std::vector<unsigned char>& bytes;
    size_t pos = 0;
    const std::string& path;

    bool exhausted(size_t need) const { return pos + need > bytes.size(); }
    uint32_t u32() {
        if (exhausted(4)) throw ChecksumError("model file truncated: " + path);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        const uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

}  // namespace

void save_model(const TinyNetModel& m, const std::string& path) {
    ByteSink s;
    s.raw(kMagic, 4);
    s.u32(kFormatVersion);
    s.u32(static_cast<uint32_t>(m.role));
    s.u32(static_cast<uint32_t>(m.channels));
    s.u32(static_cast<uint32_t>(m.r));
    s.u32(static_cast<uint32_t>(m.hidden));
    s.u32(static_cast<uint32_t>(m.steps));
    s.u32(static_cast<uint32_t>(m.layers.size()));
    for (const auto& l : m.layers) {
        s.u32(static_cast<uint32_t>(l.in_ch));
        s.u32(static_cast<uint32_t>(l.out_ch));
        s.u32(static_cast<uint32_t>(l.k));
    }
    for (const auto& l : m.layers) {
        for (float w : l.w) s.f32(w);
        for (float b : l.b) s.f32(b);
    }
    for (float v : m.t_table) s.f32(v);

    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(s.bytes.data()), static_cast<uInt>(s.bytes.size())));
    s.u32(crc);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open model file for writing: " + path);
    f.write(reinterpret_cast<const char*>(s.bytes.data()), static_cast<std::streamsize>(s.bytes.size()));
    if (!f) throw IoError("short write to model file: " + path);
}

TinyNetModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagicError("not a UPSR model file: " + path);

    // checksum covers everything before the trailing u32
    if (bytes.size() < 12) throw ChecksumError("model file truncated: " + path);
    const size_t body = bytes.size() - 4;
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<uint32_t>(bytes[body + static_cast<size_t>(i)]) << (8 * i);
    const uint32_t computed = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(body)));
    if (stored != computed)
        throw ChecksumError("model checksum mismatch (corrupt or truncated): " + path);

    ByteSource src{bytes, 4, path};
    const uint32_t version = src.u32();
    if (version != kFormatVersion)
        throw VersionError("unsupported model format version " + std::to_string(version) + " in " + path);

    TinyNetModel m;
    m.format_version = version;
    const uint32_t role = src.u32();
    if (role > 1) throw ModelFormatError("unknown model role tag in " + path);
    m.role = static_cast<ModelRole>(role);
    m.channels = static_cast<int>(src.u32());
    m.r = static_cast<int>(src.u32());
    m.hidden = static_cast<int>(src.u32());
    m.steps = static_cast<int>(src.u32());
    const uint32_t n_layers = src.u32();
    if (n_layers == 0 || n_layers > 64) throw ModelFormatError("implausible layer count in " + path);
    m.layers.resize(n_layers);
    for (auto& l : m.layers) {
        l.in_ch = static_cast<int>(src.u32());
        l.out_ch = static_cast<int>(src.u32());
        l.k = static_cast<int>(src.u32());
        if (l.in_ch < 1 || l.out_ch < 1 || l.k < 1 || l.k % 2 == 0)
            throw ModelFormatError("bad layer spec in " + path);
        l.w.resize(static_cast<size_t>(l.in_ch) * l.out_ch * l.k * l.k);
        l.b.resize(static_cast<size_t>(l.out_ch));
    }
    for (auto& l : m.layers) {
        for (auto& w : l.w) w = src.f32();
        for (auto& b : l.b) b = src.f32();
    }
    m.t_table.resize(static_cast<size_t>(m.steps) * m.hidden);
    for (auto& v : m.t_table) v = src.f32();
    if (src.pos != body)
        throw ModelFormatError("model file has trailing bytes: " + path);
    return m;
}

}  // namespace upsr
