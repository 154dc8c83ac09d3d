#include "csla/centers.hpp"

#include <cmath>

namespace csla {

std::string to_string(CenterMode mode) {
    switch (mode) {
        case CenterMode::average: return "average";
        case CenterMode::text: return "text";
        case CenterMode::ema: return "ema";
        case CenterMode::learnable: return "learnable";
    }
    return "average";
}

CenterMode center_mode_from_string(std::string_view name) {
    if (name == "average") return CenterMode::average;
    if (name == "text") return CenterMode::text;
    if (name == "ema") return CenterMode::ema;
    if (name == "learnable") return CenterMode::learnable;
    throw ContractViolation("unknown center mode '" + std::string(name) + "'");
}

CenterSet compute_average_center(const GeneratorAdapter& gen, const EncoderAdapter& enc, int num_samples) {
    require(num_samples >= 1, "compute_average_center: num_samples must be >= 1");
    CenterSet c;
    c.w_base = gen.average_w(num_samples);
    c.s_base = gen.styles_of(c.w_base);
    c.f_base = enc.encode_image(gen.synthesize_from_s(c.s_base));
    require(static_cast<int>(c.f_base.size()) == enc.d_clip(), "compute_average_center: encoder output size");
    return c;
}

Embedding compute_text_center(const EncoderAdapter& enc, std::string_view class_name) {
    require(!class_name.empty(), "compute_text_center: class name must be non-empty");
    return enc.encode_text("a picture of " + std::string(class_name));
}

Embedding ema_update(const Embedding& center, const Embedding& new_f, double decay) {
    require(decay > 0.0 && decay <= 1.0, "ema_update: decay must lie in (0, 1]");
    require(center.size() == new_f.size(), "ema_update: shape mismatch " + shape_string(center.view()) + " vs " +
                                               shape_string(new_f.view()));
    const float a = static_cast<float>(decay);
    const float b = static_cast<float>(1.0 - decay);
    Embedding out(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) out[i] = a * center[i] + b * new_f[i];
    return out;
}

CenterBank::CenterBank(std::size_t capacity) : capacity_(capacity) {
    require(capacity >= 1, "CenterBank: capacity must be >= 1");
}

void CenterBank::push(const Embedding& f, const WLatent& w) {
    if (!queue_f_.empty()) {
        require(f.size() == queue_f_.front().size() && w.size() == queue_w_.front().size(),
                "CenterBank::push: shape mismatch with queued entries");
    }
    require(all_finite(f.view()) && all_finite(w.view()), "CenterBank::push: non-finite entry");
    if (queue_f_.size() == capacity_) {
        queue_f_.pop_front();
        queue_w_.pop_front();
    }
    queue_f_.push_back(f);
    queue_w_.push_back(w);
}

std::vector<std::size_t> CenterBank::sample_indices(std::size_t k, Rng& rng) const {
    require(!empty(), "CenterBank::sample: bank is empty");
    require(k >= 1, "CenterBank::sample: k must be >= 1");
    std::vector<std::size_t> idx(k);
    for (auto& i : idx) i = rng.index(size());
    return idx;
}

std::vector<CenterPair> CenterBank::sample(std::size_t k, Rng& rng) const {
    std::vector<CenterPair> out;
    for (std::size_t i : sample_indices(k, rng)) out.push_back({queue_f_[i], queue_w_[i]});
    return out;
}

void CenterBank::clear() {
    queue_f_.clear();
    queue_w_.clear();
}

} // namespace csla
