#include "csla/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "csla/config_json.hpp"

namespace csla {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
    return v;
}

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

template <typename P>
Tensor tensor_of(const P& view) {
    Tensor t;
    if (view.is_vector) {
        t.shape = {view.rows};
        t.data.assign(view.data, view.data + view.rows);
        return t;
    }
    // Eigen storage is column-major; archives hold row-major [out, in].
    t.shape = {view.rows, view.cols};
    t.data.resize(static_cast<std::size_t>(view.rows * view.cols));
    for (Eigen::Index r = 0; r < view.rows; ++r)
        for (Eigen::Index c = 0; c < view.cols; ++c)
            t.data[static_cast<std::size_t>(r * view.cols + c)] = view.data[c * view.rows + r];
    return t;
}

void load_into(const ParamView<float>& view, const Tensor& t, const std::string& name) {
    const std::vector<std::int64_t> expected =
        view.is_vector ? std::vector<std::int64_t>{view.rows} : std::vector<std::int64_t>{view.rows, view.cols};
    if (t.shape != expected) throw CheckpointError("tensor '" + name + "' has unexpected shape");
    if (view.is_vector) {
        std::copy(t.data.begin(), t.data.end(), view.data);
        return;
    }
    for (Eigen::Index r = 0; r < view.rows; ++r)
        for (Eigen::Index c = 0; c < view.cols; ++c)
            view.data[c * view.rows + r] = t.data[static_cast<std::size_t>(r * view.cols + c)];
}

Tensor vector_tensor(const std::vector<float>& v) { return Tensor{{static_cast<std::int64_t>(v.size())}, v}; }

std::vector<float> vector_from(const Tensor& t, std::size_t expected, const std::string& name) {
    if (t.shape.size() != 1 || static_cast<std::size_t>(t.shape[0]) != expected)
        throw CheckpointError("tensor '" + name + "' has unexpected shape");
    return t.data;
}

} // namespace

const Tensor& TensorArchive::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError("archive is missing tensor '" + name + "'");
    return it->second;
}

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive) {
    json header = json::object();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : archive.tensors) {
        if (name == "__metadata__") throw CheckpointError("reserved tensor name");
        if (element_count(t.shape) != static_cast<std::int64_t>(t.data.size()))
            throw CheckpointError("tensor '" + name + "' shape does not match its data");
        const std::uint64_t bytes = t.data.size() * sizeof(float);
        header[name] = {{"dtype", "F32"}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
        offset += bytes;
    }
    header["__metadata__"] = {{"manifest", archive.manifest.dump()}};
    std::string text = header.dump();
    while ((text.size() + 8) % 8 != 0) text.push_back(' ');

    std::vector<std::uint8_t> out;
    out.reserve(8 + text.size() + offset);
    put_u64_le(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& [name, t] : archive.tensors) {
        for (float f : t.data) {
            const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(f));
            const auto* p = reinterpret_cast<const std::uint8_t*>(&bits);
            out.insert(out.end(), p, p + 4);
        }
    }
    return out;
}

TensorArchive decode_archive(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw CheckpointError("archive truncated: missing header length");
    const std::uint64_t header_len = get_u64_le(bytes.data());
    if (header_len > bytes.size() - 8) throw CheckpointError("archive truncated: header overruns file");
    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("archive header is not valid JSON: ") + e.what());
    }
    const std::uint8_t* data = bytes.data() + 8 + header_len;
    const std::uint64_t data_len = bytes.size() - 8 - header_len;

    TensorArchive archive;
    try {
        for (const auto& [name, entry] : header.items()) {
            if (name == "__metadata__") {
                archive.manifest = json::parse(entry.at("manifest").get<std::string>());
                continue;
            }
            if (entry.at("dtype").get<std::string>() != "F32")
                throw CheckpointError("tensor '" + name + "' has unsupported dtype");
            Tensor t;
            t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
            const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
            if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > data_len)
                throw CheckpointError("tensor '" + name + "' has invalid data offsets");
            const std::uint64_t n = (offsets[1] - offsets[0]) / 4;
            if (n * 4 != offsets[1] - offsets[0] || static_cast<std::int64_t>(n) != element_count(t.shape))
                throw CheckpointError("tensor '" + name + "' size does not match its shape");
            t.data.resize(n);
            for (std::uint64_t i = 0; i < n; ++i) {
                std::uint32_t bits;
                std::memcpy(&bits, data + offsets[0] + 4 * i, 4);
                t.data[i] = std::bit_cast<float>(to_le(bits));
            }
            archive.tensors.emplace(name, std::move(t));
        }
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("archive header is malformed: ") + e.what());
    }
    return archive;
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
    const auto bytes = encode_archive(archive);
    auto tmp = path;
    tmp += ".tmp";
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            out.flush();
            if (!out) throw CheckpointError("failed writing " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
}

TensorArchive read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_archive(bytes);
}

TensorArchive to_archive(const TrainState& st) {
    TensorArchive a;
    json& m = a.manifest;
    m["format"] = "csla-checkpoint";
    m["format_version"] = kCheckpointFormatVersion;
    m["adapters"] = {{"generator", "toy"}, {"encoder", "toy"}};
    m["generator"] = st.generator;
    m["encoder"] = st.encoder;
    m["mapper"] = st.mapper_config;
    m["train"] = st.train;
    m["loss_weights"] = st.weights;
    m["iteration"] = st.iteration;
    m["adam_step"] = st.adam.step;
    m["degenerate_norms"] = st.degenerate_norms;
    m["rng"] = {{"z", st.z_rng.state()}, {"trc", st.trc_rng.state()}};
    m["dims"] = {{"d_clip", st.mappers.d_clip()}, {"d_w", st.mappers.d_w()}, {"dim_s", st.mappers.dim_s()}};
    m["bank"] = {{"capacity", st.bank.capacity()}, {"size", st.bank.size()}};

    const auto params = st.mappers.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
        a.tensors["mapper." + params[p].name] = tensor_of(params[p]);
        ParamView<const float> mv{params[p].name, st.adam.m[p].data(), params[p].rows, params[p].cols,
                                  params[p].is_vector};
        ParamView<const float> vv{params[p].name, st.adam.v[p].data(), params[p].rows, params[p].cols,
                                  params[p].is_vector};
        a.tensors["adam.m." + params[p].name] = tensor_of(mv);
        a.tensors["adam.v." + params[p].name] = tensor_of(vv);
    }
    a.tensors["centers.f_base"] = vector_tensor(st.centers.f_base.values);
    a.tensors["centers.w_base"] = vector_tensor(st.centers.w_base.values);
    for (std::size_t i = 0; i < st.centers.s_base.n_layers(); ++i)
        a.tensors["centers.s_base." + std::to_string(i)] = vector_tensor(st.centers.s_base.layers[i]);

    const auto rows = static_cast<std::int64_t>(st.bank.size());
    Tensor bf{{rows, st.mappers.d_clip()}, {}};
    Tensor bw{{rows, st.mappers.d_w()}, {}};
    for (std::size_t k = 0; k < st.bank.size(); ++k) {
        bf.data.insert(bf.data.end(), st.bank.f_at(k).values.begin(), st.bank.f_at(k).values.end());
        bw.data.insert(bw.data.end(), st.bank.w_at(k).values.begin(), st.bank.w_at(k).values.end());
    }
    a.tensors["bank.f"] = std::move(bf);
    a.tensors["bank.w"] = std::move(bw);
    return a;
}

TrainState from_archive(const TensorArchive& a) {
    const json& m = a.manifest;
    TrainState st;
    try {
        if (m.at("format").get<std::string>() != "csla-checkpoint")
            throw CheckpointError("not a csla checkpoint");
        if (m.at("format_version").get<int>() != kCheckpointFormatVersion)
            throw CheckpointError("unsupported checkpoint format version");
        const auto& adapters = m.at("adapters");
        if (adapters.at("generator").get<std::string>() != "toy" || adapters.at("encoder").get<std::string>() != "toy")
            throw CheckpointError("checkpoint references an adapter backend that is not available");
        st.generator = m.at("generator").get<GeneratorConfig>();
        st.encoder = m.at("encoder").get<EncoderConfig>();
        st.mapper_config = m.at("mapper").get<MapperConfig>();
        st.train = m.at("train").get<TrainConfig>();
        st.weights = m.at("loss_weights").get<LossWeights>();
        st.iteration = m.at("iteration").get<std::int64_t>();
        st.adam.step = m.at("adam_step").get<std::int64_t>();
        st.degenerate_norms = m.at("degenerate_norms").get<std::int64_t>();
        st.z_rng.set_state(m.at("rng").at("z").get<std::string>());
        st.trc_rng.set_state(m.at("rng").at("trc").get<std::string>());

        const auto& dims = m.at("dims");
        const int d_clip = dims.at("d_clip").get<int>();
        const int d_w = dims.at("d_w").get<int>();
        const auto dim_s = dims.at("dim_s").get<std::vector<int>>();
        st.mappers = MapperStack::build(st.mapper_config, d_clip, d_w, dim_s);
        for (const auto& p : st.mappers.parameters()) {
            load_into(p, a.at("mapper." + p.name), "mapper." + p.name);
            std::vector<float> mm(static_cast<std::size_t>(p.size()));
            std::vector<float> vv(static_cast<std::size_t>(p.size()));
            load_into({p.name, mm.data(), p.rows, p.cols, p.is_vector}, a.at("adam.m." + p.name), "adam.m." + p.name);
            load_into({p.name, vv.data(), p.rows, p.cols, p.is_vector}, a.at("adam.v." + p.name), "adam.v." + p.name);
            st.adam.m.push_back(std::move(mm));
            st.adam.v.push_back(std::move(vv));
        }

        st.centers.f_base = Embedding(vector_from(a.at("centers.f_base"), d_clip, "centers.f_base"));
        st.centers.w_base = WLatent(vector_from(a.at("centers.w_base"), d_w, "centers.w_base"));
        for (std::size_t i = 0; i < dim_s.size(); ++i) {
            const std::string name = "centers.s_base." + std::to_string(i);
            st.centers.s_base.layers.push_back(vector_from(a.at(name), static_cast<std::size_t>(dim_s[i]), name));
        }

        st.bank = CenterBank(m.at("bank").at("capacity").get<std::size_t>());
        const auto& bf = a.at("bank.f");
        const auto& bw = a.at("bank.w");
        const auto rows = m.at("bank").at("size").get<std::int64_t>();
        if (bf.shape != std::vector<std::int64_t>{rows, d_clip} || bw.shape != std::vector<std::int64_t>{rows, d_w})
            throw CheckpointError("bank tensors have unexpected shapes");
        for (std::int64_t k = 0; k < rows; ++k) {
            Embedding f(std::vector<float>(bf.data.begin() + k * d_clip, bf.data.begin() + (k + 1) * d_clip));
            WLatent w(std::vector<float>(bw.data.begin() + k * d_w, bw.data.begin() + (k + 1) * d_w));
            st.bank.push(f, w);
        }
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint manifest is malformed: ") + e.what());
    }
    return st;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
    write_archive(path, to_archive(state));
}

TrainState load_checkpoint(const std::filesystem::path& path) { return from_archive(read_archive(path)); }

} // namespace csla
