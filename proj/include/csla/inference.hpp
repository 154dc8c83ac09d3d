#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csla/centers.hpp"
#include "csla/encoder.hpp"
#include "csla/generator.hpp"
#include "csla/mappers.hpp"
#include "csla/spaces.hpp"

namespace csla {

struct TrainState;

enum class EditSpace { w, s };

std::string to_string(EditSpace space);
EditSpace edit_space_from_string(std::string_view name);

struct Latents {
    WLatent w;
    SBundle s;

    bool operator==(const Latents&) const = default;
};

struct EditRequest {
    std::string src_text;
    std::string trg_text;
    float strength = 1.0f;
    std::optional<std::vector<int>> layer_mask;  // nullopt: all layers
    EditSpace space = EditSpace::s;
};

struct InferenceOptions {
    // Apply style mixing inside each branch before the direction difference.
    bool asm_in_directions = true;
};

/// Frozen, read-only model: adapters, trained mappers and centers. All
/// methods are const and safe to call concurrently.
class Model {
public:
    Model(std::shared_ptr<const GeneratorAdapter> gen, std::shared_ptr<const EncoderAdapter> enc,
          std::shared_ptr<const MapperStack> mappers, CenterSet centers, InferenceOptions options = {});

    // Rebuilds toy adapters from the state's configs.
    static Model from_state(const TrainState& state, InferenceOptions options = {});
    static Model from_checkpoint(const std::filesystem::path& path, InferenceOptions options = {});

    Latents invert(const Image& image) const;
    Image generate(std::string_view text) const;
    Direction direction_from_texts(std::string_view src_text, std::string_view trg_text) const;

    // s-space: s_i + strength * delta_s_i for masked layers.
    // w-space: w + strength * delta_w; masked layers take the styles of the
    // edited w, the rest the styles of the original w. At strength 0 this is
    // the w-space reconstruction, decode(latents, EditSpace::w).
    Latents apply_direction(const Latents& latents, const Direction& direction, float strength,
                            const std::optional<std::vector<int>>& layer_mask, EditSpace space) const;
    Image decode(const Latents& latents, EditSpace space) const;
    Image reconstruct(const Latents& latents, EditSpace space = EditSpace::s) const { return decode(latents, space); }
    Image apply_edit(const Image& source, const EditRequest& request) const;

    const GeneratorAdapter& generator() const { return *gen_; }
    const EncoderAdapter& encoder() const { return *enc_; }
    const MapperStack& mappers() const { return *mappers_; }
    const CenterSet& centers() const { return centers_; }
    std::shared_ptr<const GeneratorAdapter> generator_ptr() const { return gen_; }
    std::shared_ptr<const EncoderAdapter> encoder_ptr() const { return enc_; }
    int n_layers() const { return generator().config().n_layers; }
    std::string model_id() const;

private:
    SBundle map_residual(const Embedding& delta_f, bool use_asm, WLatent* delta_w_out) const;
    std::vector<int> resolve_mask(const std::optional<std::vector<int>>& layer_mask) const;

    std::shared_ptr<const GeneratorAdapter> gen_;
    std::shared_ptr<const EncoderAdapter> enc_;
    std::shared_ptr<const MapperStack> mappers_;
    CenterSet centers_;
    InferenceOptions options_;
};

// Accumulates s-space edits on one inverted latent. Repeated applications of
// the same direction merge their per-layer strengths, so an edit followed by
// its negation restores the starting latent exactly.
class EditComposer {
public:
    EditComposer(const Model& model, Latents base) : model_(model), base_(std::move(base)) {}

    void apply(const Direction& direction, float strength, const std::optional<std::vector<int>>& layer_mask);
    Latents current() const;
    Image decode() const { return model_.decode(current(), EditSpace::s); }

private:
    struct Entry {
        Direction direction;
        std::vector<float> strength;  // per layer
    };
    const Model& model_;
    Latents base_;
    std::vector<Entry> entries_;
};

} // namespace csla
