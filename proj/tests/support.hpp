#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "csla/centers.hpp"
#include "csla/encoder.hpp"
#include "csla/generator.hpp"
#include "csla/mappers.hpp"
#include "csla/objective.hpp"
#include "csla/rng.hpp"
#include "csla/trainer.hpp"

namespace csla::support {

inline bool fd_close(double analytic, double numeric, double rel = 1e-4) {
    return std::abs(analytic - numeric) <= rel * std::max(std::abs(analytic), std::abs(numeric)) + 1e-9;
}

inline MatT<double> random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    MatT<double> m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
    return m;
}

// Random stack with non-trivial biases so every parameter has a gradient.
inline MapperStackT<double> random_stack(std::uint64_t seed, MapperConfig cfg = {}, int d_clip = 64, int d_w = 32,
                                         std::vector<int> dim_s = {32, 32, 16, 16}) {
    cfg.seed = seed;
    auto stack = MapperStack::build(cfg, d_clip, d_w, dim_s).cast<double>();
    Rng rng(seed + 1000);
    for (auto& p : stack.parameters())
        if (p.is_vector)
            for (Eigen::Index i = 0; i < p.size(); ++i) p.data[i] = 0.1 * rng.normal();
    // Lift the small-output FC_s layers so the s loss is not negligible.
    for (auto& m : stack.fc_s()) m.layers.back().weight *= 30.0;
    return stack;
}

// Mixed batch: two samples, the first with two extra TRC columns.
inline ObjectiveBatch<double> random_batch(const MapperStackT<double>& stack, std::uint64_t seed) {
    Rng rng(seed);
    ObjectiveBatch<double> b;
    b.delta_f = random_matrix(rng, stack.d_clip(), 4, 0.5);
    b.delta_w_trg = random_matrix(rng, stack.d_w(), 4, 0.5);
    b.column_weight = {0.25, 0.125, 0.125, 0.5};
    b.main_col = {0, 3};
    for (int d : stack.dim_s()) b.delta_s_trg.push_back(random_matrix(rng, d, 2, 0.05));
    return b;
}

// Everything whose sign flip would put a central difference across a kink:
// hidden pre-activations and loss residual signs.
inline std::vector<bool> kink_signature(const MapperStackT<double>& stack, const ObjectiveBatch<double>& batch) {
    std::vector<bool> sig;
    auto add_hidden = [&](const Mlp<double>::Tape& t) {
        for (std::size_t j = 0; j + 1 < t.pre.size(); ++j)
            for (Eigen::Index k = 0; k < t.pre[j].size(); ++k) sig.push_back(t.pre[j].data()[k] > 0);
    };
    MapperStackT<double>::WTape wt;
    const MatT<double> dw = stack.map_w(batch.delta_f, &wt);
    add_hidden(wt.fc);
    const MatT<double> rw = dw - batch.delta_w_trg;
    for (Eigen::Index k = 0; k < rw.size(); ++k) sig.push_back(rw.data()[k] > 0);
    MatT<double> main(dw.rows(), static_cast<Eigen::Index>(batch.main_col.size()));
    for (std::size_t b = 0; b < batch.main_col.size(); ++b) main.col(static_cast<Eigen::Index>(b)) = dw.col(batch.main_col[b]);
    MapperStackT<double>::STape st;
    const auto ds = stack.map_s(main, &st);
    for (const auto& t : st.fc_s) add_hidden(t);
    add_hidden(st.asm_net);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const MatT<double> r = ds[i] - batch.delta_s_trg[i];
        for (Eigen::Index k = 0; k < r.size(); ++k) sig.push_back(r.data()[k] > 0);
    }
    return sig;
}

struct GradientProbe {
    std::string name;
    double analytic = 0;
    double numeric = 0;
    bool excluded = false;
    bool ok = false;
};

struct GradientSuiteResult {
    std::vector<GradientProbe> probes;
    int checked() const {
        return static_cast<int>(std::count_if(probes.begin(), probes.end(), [](const auto& p) { return !p.excluded; }));
    }
    int failures() const {
        return static_cast<int>(
            std::count_if(probes.begin(), probes.end(), [](const auto& p) { return !p.excluded && !p.ok; }));
    }
};

// Central differences of the full objective against the analytic backward
// pass, over random parameter entries of every tensor and random inputs.
inline GradientSuiteResult mapper_gradient_suite(std::uint64_t seed, int probes_per_case, double h = 1e-3) {
    GradientSuiteResult result;
    const struct {
        const char* label;
        bool asm_enabled;
        bool learnable;
        AsmActivation act;
    } cases[] = {{"asm", true, false, AsmActivation::sigmoid},
                 {"noasm", false, false, AsmActivation::sigmoid},
                 {"learnable", true, true, AsmActivation::sigmoid},
                 {"tanh", true, false, AsmActivation::tanh}};
    std::uint64_t case_seed = seed;
    for (const auto& c : cases) {
        MapperConfig cfg;
        cfg.asm_enabled = c.asm_enabled;
        cfg.learnable_center = c.learnable;
        cfg.asm_activation = c.act;
        auto stack = random_stack(++case_seed, cfg);
        if (c.learnable) {
            Rng r(case_seed);
            for (Eigen::Index i = 0; i < stack.center_bias().size(); ++i) stack.center_bias()(i) = 0.1 * r.normal();
        }
        auto batch = random_batch(stack, case_seed + 7);
        const LossWeights weights;
        auto grad = stack.zeros_like();
        MatT<double> d_f = MatT<double>::Zero(batch.delta_f.rows(), batch.delta_f.cols());
        mapper_objective<double>(stack, batch, weights, &grad, &d_f);

        Rng pick(case_seed + 99);
        const auto params = stack.parameters();
        const auto grads = grad.parameters();
        for (int k = 0; k < probes_per_case; ++k) {
            GradientProbe probe;
            double* slot = nullptr;
            if (k % 5 == 4) {
                const auto idx = static_cast<Eigen::Index>(pick.index(static_cast<std::uint64_t>(d_f.size())));
                slot = batch.delta_f.data() + idx;
                probe.analytic = d_f.data()[idx];
                probe.name = std::string(c.label) + ":delta_f[" + std::to_string(idx) + "]";
            } else {
                const auto t = pick.index(params.size());
                const auto idx = static_cast<Eigen::Index>(pick.index(static_cast<std::uint64_t>(params[t].size())));
                slot = params[t].data + idx;
                probe.analytic = grads[t].data[idx];
                probe.name = std::string(c.label) + ":" + params[t].name + "[" + std::to_string(idx) + "]";
            }
            const double orig = *slot;
            *slot = orig + h;
            const auto sig_p = kink_signature(stack, batch);
            const LossReport rp = mapper_objective<double>(stack, batch, weights);
            *slot = orig - h;
            const auto sig_m = kink_signature(stack, batch);
            const LossReport rm = mapper_objective<double>(stack, batch, weights);
            *slot = orig;
            probe.numeric = (rp.total - rm.total) / (2 * h);
            probe.excluded = sig_p != sig_m || rp.degenerate_norms != 0 || rm.degenerate_norms != 0;
            probe.ok = fd_close(probe.analytic, probe.numeric);
            result.probes.push_back(probe);
        }
    }
    return result;
}

inline std::shared_ptr<ToyGenerator> toy_generator() { return std::make_shared<ToyGenerator>(); }
inline std::shared_ptr<ToyEncoder> toy_encoder() { return std::make_shared<ToyEncoder>(); }

// Small, fast training configuration for mechanics tests.
inline TrainConfig quick_train_config(std::int64_t iterations) {
    TrainConfig c;
    c.iterations = iterations;
    c.average_samples = 2000;
    c.trc_min_fill = 8;
    c.trc_max_pairs = 16;
    c.log_every = 0;
    return c;
}

inline std::filesystem::path temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "csla_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace csla::support

namespace csla::support {

// A lightly trained toy model shared by inference-level tests.
inline const TrainState& small_trained_state() {
    static const TrainState state = [] {
        auto gen = toy_generator();
        auto enc = toy_encoder();
        Trainer t(gen, enc, initialize_training(*gen, *enc, quick_train_config(300)));
        t.run();
        return t.state();
    }();
    return state;
}

} // namespace csla::support
