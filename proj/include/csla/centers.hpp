#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "csla/encoder.hpp"
#include "csla/generator.hpp"
#include "csla/rng.hpp"
#include "csla/spaces.hpp"

namespace csla {

enum class CenterMode { average, text, ema, learnable };

std::string to_string(CenterMode mode);
CenterMode center_mode_from_string(std::string_view name);

// Manipulation centers against which residuals are taken in each space.
struct CenterSet {
    Embedding f_base;
    WLatent w_base;
    SBundle s_base;

    bool operator==(const CenterSet&) const = default;
};

inline constexpr int kDefaultAverageSamples = 100000;

// w_base is the mean latent, s_base its styles, f_base the embedding of
// the image decoded from s_base.
CenterSet compute_average_center(const GeneratorAdapter& gen, const EncoderAdapter& enc,
                                 int num_samples = kDefaultAverageSamples);

// Embedding of "a picture of <class_name>". Replaces f_base only.
Embedding compute_text_center(const EncoderAdapter& enc, std::string_view class_name);

Embedding ema_update(const Embedding& center, const Embedding& new_f, double decay);

struct CenterPair {
    Embedding f;
    WLatent w;
};

// Paired FIFO queues of recently sampled (f, w). Entry k of both queues
// always comes from the same push.
class CenterBank {
public:
    static constexpr std::size_t kDefaultCapacity = 4096;

    explicit CenterBank(std::size_t capacity = kDefaultCapacity);

    void push(const Embedding& f, const WLatent& w);
    // k pairs drawn uniformly with replacement.
    std::vector<CenterPair> sample(std::size_t k, Rng& rng) const;
    // Same draw as sample() but returns bank positions.
    std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const;

    std::size_t size() const { return queue_f_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return queue_f_.empty(); }
    const Embedding& f_at(std::size_t i) const { return queue_f_.at(i); }
    const WLatent& w_at(std::size_t i) const { return queue_w_.at(i); }
    void clear();

    bool operator==(const CenterBank&) const = default;

private:
    std::size_t capacity_;
    std::deque<Embedding> queue_f_;
    std::deque<WLatent> queue_w_;
};

} // namespace csla
