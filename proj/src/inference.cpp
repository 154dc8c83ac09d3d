#include "csla/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

#include "csla/checkpoint.hpp"
#include "csla/trainer.hpp"

namespace csla {

std::string to_string(EditSpace space) { return space == EditSpace::w ? "w" : "s"; }

EditSpace edit_space_from_string(std::string_view name) {
    if (name == "w") return EditSpace::w;
    if (name == "s") return EditSpace::s;
    throw ContractViolation("unknown edit space '" + std::string(name) + "' (expected w or s)");
}

Model::Model(std::shared_ptr<const GeneratorAdapter> gen, std::shared_ptr<const EncoderAdapter> enc,
             std::shared_ptr<const MapperStack> mappers, CenterSet centers, InferenceOptions options)
    : gen_(std::move(gen)),
      enc_(std::move(enc)),
      mappers_(std::move(mappers)),
      centers_(std::move(centers)),
      options_(options) {
    require(gen_ && enc_ && mappers_, "Model: generator, encoder and mappers must be loaded");
    require(mappers_->d_clip() == enc_->d_clip(), "Model: encoder width does not match mappers");
    require(mappers_->d_w() == gen_->config().d_w && mappers_->dim_s() == gen_->config().dim_s,
            "Model: generator shape does not match mappers");
    require(static_cast<int>(centers_.f_base.size()) == enc_->d_clip() &&
                static_cast<int>(centers_.w_base.size()) == gen_->config().d_w,
            "Model: center shapes do not match adapters");
    require_same_shape(centers_.s_base, SBundle::zeros(gen_->config().dim_s), "Model");
}

Model Model::from_state(const TrainState& state, InferenceOptions options) {
    return Model(std::make_shared<ToyGenerator>(state.generator), std::make_shared<ToyEncoder>(state.encoder),
                 std::make_shared<const MapperStack>(state.mappers), state.centers, options);
}

Model Model::from_checkpoint(const std::filesystem::path& path, InferenceOptions options) {
    return from_state(load_checkpoint(path), options);
}

std::string Model::model_id() const { return gen_->model_id() + "+" + enc_->model_id(); }

SBundle Model::map_residual(const Embedding& delta_f, bool use_asm, WLatent* delta_w_out) const {
    const WLatent delta_w = mappers_->map_w(delta_f);
    SBundle delta_s;
    if (use_asm || !mappers_->asm_enabled()) {
        delta_s = mappers_->map_s(delta_w);
    } else {
        const int n = mappers_->n_layers();
        MatT<float> identity(2 * n, 1);
        identity.topRows(n).setOnes();
        identity.bottomRows(n).setZero();
        const MatT<float> x = Eigen::Map<const VecT<float>>(delta_w.values.data(), mappers_->d_w());
        for (const auto& l : mappers_->map_s_with_signals(x, identity))
            delta_s.layers.emplace_back(l.data(), l.data() + l.size());
    }
    if (delta_w_out) *delta_w_out = delta_w;
    return delta_s;
}

Latents Model::invert(const Image& image) const {
    const Embedding delta_f = residual(enc_->encode_image(image), centers_.f_base);
    WLatent delta_w;
    const SBundle delta_s = map_residual(delta_f, true, &delta_w);
    return {add_scaled(centers_.w_base, delta_w, 1.0f), add_scaled(centers_.s_base, delta_s, 1.0f)};
}

Image Model::generate(std::string_view text) const {
    const Embedding delta_f = residual(enc_->encode_text(text), centers_.f_base);
    return gen_->synthesize_from_s(add_scaled(centers_.s_base, map_residual(delta_f, true, nullptr), 1.0f));
}

Direction Model::direction_from_texts(std::string_view src_text, std::string_view trg_text) const {
    require(!src_text.empty() && !trg_text.empty(), "direction_from_texts: texts must be non-empty");
    const Embedding df_src = residual(enc_->encode_text(src_text), centers_.f_base);
    const Embedding df_trg = residual(enc_->encode_text(trg_text), centers_.f_base);
    WLatent dw_src, dw_trg;
    const SBundle ds_src = map_residual(df_src, options_.asm_in_directions, &dw_src);
    const SBundle ds_trg = map_residual(df_trg, options_.asm_in_directions, &dw_trg);
    return {residual(dw_trg, dw_src), residual(ds_trg, ds_src)};
}

std::vector<int> Model::resolve_mask(const std::optional<std::vector<int>>& layer_mask) const {
    const int n = n_layers();
    if (!layer_mask) {
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    for (int i : *layer_mask)
        require(i >= 0 && i < n, "layer index " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
    std::set<int> unique(layer_mask->begin(), layer_mask->end());
    return {unique.begin(), unique.end()};
}

Latents Model::apply_direction(const Latents& latents, const Direction& direction, float strength,
                               const std::optional<std::vector<int>>& layer_mask, EditSpace space) const {
    require(std::isfinite(strength), "apply_direction: strength must be finite");
    const auto mask = resolve_mask(layer_mask);
    Latents out = latents;
    if (space == EditSpace::s) {
        require_same_shape(latents.s, direction.delta_s, "apply_direction");
        for (int i : mask)
            out.s.layers[i] = add_scaled(latents.s.layers[i], direction.delta_s.layers[i], strength);
        return out;
    }
    out.w = add_scaled(latents.w, direction.delta_w, strength);
    const SBundle edited = gen_->styles_of(out.w);
    out.s = gen_->styles_of(latents.w);
    for (int i : mask) out.s.layers[i] = edited.layers[i];
    return out;
}

Image Model::decode(const Latents& latents, EditSpace space) const {
    if (space == EditSpace::s) return gen_->synthesize_from_s(latents.s);
    return gen_->synthesize_from_s(gen_->styles_of(latents.w));
}

Image Model::apply_edit(const Image& source, const EditRequest& request) const {
    const Latents inverted = invert(source);
    const Direction d = direction_from_texts(request.src_text, request.trg_text);
    // A w-space edit carries its styles in the s bundle, so both spaces
    // decode through s.
    return decode(apply_direction(inverted, d, request.strength, request.layer_mask, request.space), EditSpace::s);
}

void EditComposer::apply(const Direction& direction, float strength,
                         const std::optional<std::vector<int>>& layer_mask) {
    require(std::isfinite(strength), "EditComposer::apply: strength must be finite");
    require_same_shape(base_.s, direction.delta_s, "EditComposer::apply");
    const int n = static_cast<int>(base_.s.n_layers());
    std::vector<int> mask;
    if (layer_mask) {
        for (int i : *layer_mask) require(i >= 0 && i < n, "EditComposer::apply: layer index out of range");
        std::set<int> unique(layer_mask->begin(), layer_mask->end());
        mask.assign(unique.begin(), unique.end());
    } else {
        for (int i = 0; i < n; ++i) mask.push_back(i);
    }
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.direction == direction; });
    if (it == entries_.end()) {
        entries_.push_back({direction, std::vector<float>(static_cast<std::size_t>(n), 0.0f)});
        it = std::prev(entries_.end());
    }
    for (int i : mask) it->strength[i] += strength;
}

Latents EditComposer::current() const {
    Latents out = base_;
    for (const auto& e : entries_)
        for (std::size_t i = 0; i < out.s.layers.size(); ++i)
            if (e.strength[i] != 0.0f)
                out.s.layers[i] = add_scaled(out.s.layers[i], e.direction.delta_s.layers[i], e.strength[i]);
    return out;
}

} // namespace csla
