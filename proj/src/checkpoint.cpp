#include "invnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace invnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'I', 'V', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

enum RecordKind : unsigned char { kTensorRecord = 0, kBlobRecord = 1 };

std::uint32_t crc32(const unsigned char* data, std::size_t size) {
    static std::uint32_t table[256];
    static bool initialized = false;
    if (!initialized) {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) {
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            }
            table[i] = c;
        }
        initialized = true;
    }
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i) {
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

class Writer {
public:
    void raw(const void* data, std::size_t size) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        bytes_.insert(bytes_.end(), p, p + size);
    }
    void u32(std::uint32_t v) { raw(&v, sizeof(v)); }
    void u64(std::uint64_t v) { raw(&v, sizeof(v)); }

    void tensor(const std::string& name, const Tensor& t) {
        const unsigned char kind = kTensorRecord;
        raw(&kind, 1);
        u32(static_cast<std::uint32_t>(name.size()));
        raw(name.data(), name.size());
        u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t e : t.shape()) {
            u64(e);
        }
        raw(t.data(), t.size() * sizeof(double));
        ++count_;
    }

    void blob(const std::string& name, const std::string& payload) {
        const unsigned char kind = kBlobRecord;
        raw(&kind, 1);
        u32(static_cast<std::uint32_t>(name.size()));
        raw(name.data(), name.size());
        u32(1);
        u64(payload.size());
        raw(payload.data(), payload.size());
        ++count_;
    }

    std::vector<unsigned char> finish() {
        std::vector<unsigned char> out;
        out.insert(out.end(), kMagic, kMagic + 4);
        const std::uint32_t version = kVersion;
        const unsigned char* vp =
            reinterpret_cast<const unsigned char*>(&version);
        out.insert(out.end(), vp, vp + 4);
        const std::uint32_t count = count_;
        const unsigned char* cp = reinterpret_cast<const unsigned char*>(&count);
        out.insert(out.end(), cp, cp + 4);
        out.insert(out.end(), bytes_.begin(), bytes_.end());
        const std::uint32_t checksum = crc32(out.data(), out.size());
        const unsigned char* sp =
            reinterpret_cast<const unsigned char*>(&checksum);
        out.insert(out.end(), sp, sp + 4);
        return out;
    }

private:
    std::vector<unsigned char> bytes_;
    std::uint32_t count_ = 0;
};

class Reader {
public:
    Reader(const unsigned char* data, std::size_t size, std::string path)
        : data_(data), size_(size), path_(std::move(path)) {}

    void raw(void* out, std::size_t size) {
        if (pos_ + size > size_) {
            throw IoError(path_ + ": corrupt checkpoint (truncated record at "
                                  "byte " + std::to_string(pos_) + ")");
        }
        std::memcpy(out, data_ + pos_, size);
        pos_ += size;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        raw(&v, sizeof(v));
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        raw(&v, sizeof(v));
        return v;
    }
    std::size_t position() const { return pos_; }

private:
    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string path_;
};

// Compact structural description of the network: a flat numeric vector.
// [depth] then per layer: [kind, slope, field_count, fields...]
//   dense: fields = [width]
//   conv:  fields = [KY, KX, stride, C_out, forward, correction]
Tensor encode_layout(const Network& net) {
    std::vector<double> v;
    v.push_back(static_cast<double>(net.depth()));
    for (std::size_t l = 0; l < net.depth(); ++l) {
        if (const auto* dense = std::get_if<DenseLayer>(&net.layer(l))) {
            v.push_back(0.0);
            v.push_back(dense->slope);
            v.push_back(1.0);
            v.push_back(static_cast<double>(dense->width()));
        } else {
            const auto& conv = std::get<ConvLayer>(net.layer(l));
            v.push_back(1.0);
            v.push_back(conv.slope);
            v.push_back(6.0);
            v.push_back(static_cast<double>(conv.kernel_h()));
            v.push_back(static_cast<double>(conv.kernel_w()));
            v.push_back(static_cast<double>(conv.stride));
            v.push_back(static_cast<double>(conv.out_channels()));
            v.push_back(static_cast<double>(conv.forward_channels));
            v.push_back(conv.correction == OverlapCorrection::divide ? 1.0
                                                                     : 0.0);
        }
    }
    return Tensor::from_values({v.size()}, std::move(v));
}

}  // namespace

void checkpoint_save(const std::string& path, const Checkpoint& checkpoint) {
    const Network& net = checkpoint.net;
    Writer w;
    w.blob("meta.algorithm", checkpoint.algorithm);
    w.tensor("meta.step",
             Tensor::from_values({1}, {static_cast<double>(checkpoint.step)}));
    w.tensor("meta.epoch",
             Tensor::from_values({1}, {static_cast<double>(checkpoint.epoch)}));
    w.tensor("meta.adam_step",
             Tensor::from_values(
                 {1}, {static_cast<double>(checkpoint.opt.step_count())}));
    w.tensor("meta.precision",
             Tensor::from_values(
                 {1}, {net.precision() == Precision::f32 ? 1.0 : 0.0}));
    {
        std::vector<double> dims;
        for (std::size_t e : net.input_shape()) {
            dims.push_back(static_cast<double>(e));
        }
        w.tensor("net.input_shape",
                 Tensor::from_values({dims.size()}, std::move(dims)));
    }
    w.tensor("net.layout", encode_layout(net));

    const std::vector<const Tensor*> params = net.parameters();
    for (std::size_t l = 0; l < net.depth(); ++l) {
        w.tensor("layer" + std::to_string(l) + ".weight", *params[2 * l]);
        w.tensor("layer" + std::to_string(l) + ".bias", *params[2 * l + 1]);
    }
    for (std::size_t k = 0; k < checkpoint.opt.first_moments().size(); ++k) {
        w.tensor("adam.m." + std::to_string(k),
                 checkpoint.opt.first_moments()[k]);
        w.tensor("adam.v." + std::to_string(k),
                 checkpoint.opt.second_moments()[k]);
    }

    const std::vector<unsigned char> bytes = w.finish();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open checkpoint for writing: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing checkpoint: " + path);
    }
}

Checkpoint checkpoint_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path);
    }
    const std::vector<unsigned char> bytes(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16) {
        throw IoError(path + ": corrupt checkpoint (too short)");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw IoError(path + ": not a checkpoint file (bad magic)");
    }
    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    if (version != kVersion) {
        throw IoError(path + ": unsupported checkpoint version " +
                      std::to_string(version));
    }
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc) {
        throw IoError(path + ": corrupt checkpoint (checksum mismatch)");
    }

    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 8, 4);
    Reader r(bytes.data() + 12, bytes.size() - 16, path);

    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> blobs;
    for (std::uint32_t i = 0; i < count; ++i) {
        unsigned char kind = 0;
        r.raw(&kind, 1);
        const std::uint32_t name_len = r.u32();
        std::string name(name_len, '\0');
        r.raw(name.data(), name_len);
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<std::size_t>(r.u64());
        }
        const std::size_t n = shape_size(shape);
        if (kind == kTensorRecord) {
            std::vector<double> data(n);
            r.raw(data.data(), n * sizeof(double));
            tensors.emplace(name,
                            Tensor::from_values(std::move(shape), std::move(data)));
        } else if (kind == kBlobRecord) {
            std::string payload(n, '\0');
            r.raw(payload.data(), n);
            blobs.emplace(name, std::move(payload));
        } else {
            throw IoError(path + ": corrupt checkpoint (unknown record kind)");
        }
    }

    auto tensor = [&](const std::string& name) -> const Tensor& {
        auto it = tensors.find(name);
        if (it == tensors.end()) {
            throw IoError(path + ": corrupt checkpoint (missing record '" +
                          name + "')");
        }
        return it->second;
    };

    Checkpoint ck;
    ck.step = static_cast<long>(tensor("meta.step")[0]);
    ck.epoch = static_cast<long>(tensor("meta.epoch")[0]);
    {
        auto it = blobs.find("meta.algorithm");
        if (it == blobs.end()) {
            throw IoError(path + ": corrupt checkpoint (missing algorithm)");
        }
        ck.algorithm = it->second;
    }

    const Precision precision =
        tensor("meta.precision")[0] == 1.0 ? Precision::f32 : Precision::f64;
    const Tensor& in_shape = tensor("net.input_shape");
    std::vector<std::size_t> input_shape(in_shape.size());
    for (std::size_t i = 0; i < in_shape.size(); ++i) {
        input_shape[i] = static_cast<std::size_t>(in_shape[i]);
    }

    ck.net = Network(input_shape, precision);
    const Tensor& layout = tensor("net.layout");
    std::size_t pos = 0;
    const std::size_t depth = static_cast<std::size_t>(layout[pos++]);
    std::vector<std::size_t> boundary = input_shape;
    for (std::size_t l = 0; l < depth; ++l) {
        const int kind = static_cast<int>(layout[pos++]);
        const double slope = layout[pos++];
        const std::size_t fields = static_cast<std::size_t>(layout[pos++]);
        const Tensor& weight = tensor("layer" + std::to_string(l) + ".weight");
        const Tensor& bias = tensor("layer" + std::to_string(l) + ".bias");
        if (kind == 0) {
            if (fields != 1) {
                throw IoError(path + ": corrupt checkpoint (dense layout)");
            }
            pos += fields;
            ck.net.add(make_dense_layer(Matrix(weight), bias, slope));
            boundary = {bias.size()};
        } else {
            if (fields != 6) {
                throw IoError(path + ": corrupt checkpoint (conv layout)");
            }
            const std::size_t stride = static_cast<std::size_t>(layout[pos + 2]);
            const std::size_t fwd = static_cast<std::size_t>(layout[pos + 4]);
            const OverlapCorrection corr =
                layout[pos + 5] == 1.0 ? OverlapCorrection::divide
                                       : OverlapCorrection::subtract_forward;
            pos += fields;
            ConvLayer layer =
                make_conv_layer(weight, bias, stride, slope, fwd, boundary, corr);
            boundary = layer.forward_output_shape();
            ck.net.add(std::move(layer));
        }
    }

    const std::vector<const Tensor*> params =
        static_cast<const Network&>(ck.net).parameters();
    ck.opt = AdamState(params, AdamOptions{});
    ck.opt.set_step_count(static_cast<long>(tensor("meta.adam_step")[0]));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Tensor& m = tensor("adam.m." + std::to_string(k));
        const Tensor& v = tensor("adam.v." + std::to_string(k));
        if (!m.same_shape(*params[k]) || !v.same_shape(*params[k])) {
            throw IoError(path + ": corrupt checkpoint (optimizer shape "
                                  "mismatch)");
        }
        ck.opt.first_moments()[k] = m;
        ck.opt.second_moments()[k] = v;
    }
    return ck;
}

}  // namespace invnet
