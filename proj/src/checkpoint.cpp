#include "spottune/checkpoint.hpp"

#include <unordered_map>

#include "spottune/io.hpp"

namespace spottune {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x43545053;  // "SPTC" little-endian
constexpr std::uint32_t kCheckpointVersion = 1;

void write_header_and_blobs(const std::string& path, const CheckpointMeta& meta,
                            const std::vector<const Param*>& params) {
    ByteWriter w;
    w.u32(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(meta.kind));
    w.u32(static_cast<std::uint32_t>(meta.dims.input_dim));
    w.u32(static_cast<std::uint32_t>(meta.dims.width));
    w.u32(static_cast<std::uint32_t>(meta.dims.num_classes));
    w.u32(static_cast<std::uint32_t>(meta.dims.blocks));
    w.u32(static_cast<std::uint32_t>(meta.dims.frozen_prefix));
    w.u32(static_cast<std::uint32_t>(meta.dims.policy_hidden));
    w.u64(meta.source_hash);
    w.str(meta.config_echo);
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const Param* p : params) {
        w.str(p->name);
        w.u32(static_cast<std::uint32_t>(p->value.rank()));
        for (std::size_t d : p->value.shape) w.u64(d);
        w.bytes(p->value.data.data(), p->value.data.size() * sizeof(double));
    }
    write_file_atomic(path, w.buffer().data(), w.buffer().size());
}

}  // namespace

void save_checkpoint(const std::string& path, const Backbone& model, const CheckpointMeta& meta) {
    CheckpointMeta m = meta;
    m.kind = ModelKind::backbone;
    m.dims = model.dims;
    write_header_and_blobs(path, m, all_params(model));
}

void save_checkpoint(const std::string& path, const SpotTuneModel& model,
                     const CheckpointMeta& meta) {
    CheckpointMeta m = meta;
    m.kind = ModelKind::spottune;
    m.dims = model.dims;
    write_header_and_blobs(path, m, all_params(model));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const auto buf = read_file(path);
    ByteReader r(buf);
    if (r.u32("checkpoint magic") != kCheckpointMagic) {
        throw ParseError("bad checkpoint magic (not an SPTC file, or foreign byte order)", 0);
    }
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32("checkpoint version");
    if (version != kCheckpointVersion) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version), version_at);
    }
    const std::size_t kind_at = r.offset();
    const std::uint32_t kind = r.u32("checkpoint kind");
    if (kind > 1) throw ParseError("unknown checkpoint kind " + std::to_string(kind), kind_at);

    LoadedCheckpoint out;
    out.meta.kind = static_cast<ModelKind>(kind);
    ModelDims& dims = out.meta.dims;
    dims.input_dim = r.u32("checkpoint input dim");
    dims.width = r.u32("checkpoint width");
    dims.num_classes = r.u32("checkpoint class count");
    const std::size_t blocks_at = r.offset();
    dims.blocks = r.u32("checkpoint block count");
    dims.frozen_prefix = r.u32("checkpoint frozen prefix");
    dims.policy_hidden = r.u32("checkpoint policy hidden");
    if (dims.input_dim == 0 || dims.width == 0 || dims.num_classes == 0 || dims.blocks == 0) {
        throw ParseError("checkpoint dims must be positive", blocks_at);
    }
    if (dims.frozen_prefix > dims.blocks) {
        throw ParseError("checkpoint frozen prefix exceeds block count", blocks_at);
    }
    out.meta.source_hash = r.u64("checkpoint source hash");
    out.meta.config_echo = r.str("checkpoint config echo");

    std::vector<Param*> params;
    if (out.meta.kind == ModelKind::backbone) {
        out.backbone = make_backbone_shell(dims);
        params = all_params(*out.backbone);
    } else {
        out.spottune = make_spottune_shell(dims);
        params = all_params(*out.spottune);
    }
    std::unordered_map<std::string, Param*> by_name;
    for (Param* p : params) by_name[p->name] = p;

    const std::size_t count_at = r.offset();
    const std::uint32_t blob_count = r.u32("checkpoint blob count");
    if (blob_count != params.size()) {
        throw ParseError("checkpoint holds " + std::to_string(blob_count) + " blobs, expected " +
                             std::to_string(params.size()),
                         count_at);
    }
    std::unordered_map<std::string, bool> seen;
    for (std::uint32_t i = 0; i < blob_count; ++i) {
        const std::size_t blob_at = r.offset();
        const std::string name = r.str("blob name");
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw ParseError("unexpected parameter blob '" + name + "'", blob_at);
        }
        if (seen[name]) {
            throw ParseError("duplicate parameter blob '" + name + "'", blob_at);
        }
        seen[name] = true;
        Param& p = *it->second;
        const std::uint32_t rank = r.u32("blob rank");
        Shape shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = r.u64("blob extent");
        if (shape != p.value.shape) {
            throw ParseError("blob '" + name + "' has shape " + shape_str(shape) + ", expected " +
                                 shape_str(p.value.shape),
                             blob_at);
        }
        r.bytes(p.value.data.data(), p.value.data.size() * sizeof(double), "blob values");
        if (!p.value.all_finite()) {
            throw ParseError("blob '" + name + "' contains non-finite values", blob_at);
        }
    }
    r.expect_end("checkpoint");
    return out;
}

}  // namespace spottune
