#include "csla/trainer.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "csla/checkpoint.hpp"
#include "csla/config_json.hpp"

namespace csla {

namespace {

constexpr std::uint64_t kTrcSalt = 0xd1b54a32d192ed03ULL;

Eigen::Map<const VecT<float>> vec_of(const std::vector<float>& v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

} // namespace

TrainConfig TrainConfig::full_scale() {
    TrainConfig c;
    c.iterations = 5'000'000;
    c.trc_max_pairs = 4096;
    return c;
}

void TrainConfig::validate() const {
    require(iterations >= 1, "train config: iterations must be >= 1");
    require(lr_init > 0.0 && std::isfinite(lr_init), "train config: lr_init must be positive");
    require(poly_power >= 0.0, "train config: poly power must be >= 0");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            "train config: Adam betas must lie in [0, 1)");
    require(adam_eps > 0.0, "train config: Adam eps must be positive");
    require(batch_size >= 1, "train config: batch_size must be >= 1");
    require(trc_capacity >= 1 && trc_min_fill >= 1 && trc_max_pairs >= 1, "train config: TRC sizes must be >= 1");
    require(ema_decay > 0.0 && ema_decay <= 1.0, "train config: ema_decay must lie in (0, 1]");
    require(average_samples >= 1, "train config: average_samples must be >= 1");
    require(log_every >= 0 && checkpoint_every >= 0, "train config: intervals must be >= 0");
    if (center_mode == CenterMode::text) require(!text_class.empty(), "train config: text_class must be non-empty");
}

double lr_at(std::int64_t iteration, const TrainConfig& config) {
    require(iteration >= 0 && iteration <= config.iterations,
            "lr_at: iteration " + std::to_string(iteration) + " outside [0, " + std::to_string(config.iterations) +
                "]");
    const double progress = static_cast<double>(iteration) / static_cast<double>(config.iterations);
    return config.lr_init * std::pow(1.0 - progress, config.poly_power);
}

TrainState initialize_training(const GeneratorAdapter& gen, const EncoderAdapter& enc, const TrainConfig& train,
                               MapperConfig mapper_config, LossWeights weights) {
    train.validate();
    TrainState st;
    st.generator = gen.config();
    if (const auto* toy = dynamic_cast<const ToyEncoder*>(&enc)) st.encoder = toy->config();
    st.encoder.d_clip = enc.d_clip();
    if (train.center_mode == CenterMode::learnable) mapper_config.learnable_center = true;
    st.mapper_config = mapper_config;
    st.train = train;
    st.weights = weights;
    st.mappers = MapperStack::build(mapper_config, enc.d_clip(), gen.config().d_w, gen.config().dim_s);
    for (const auto& p : st.mappers.parameters()) {
        st.adam.m.emplace_back(static_cast<std::size_t>(p.size()), 0.0f);
        st.adam.v.emplace_back(static_cast<std::size_t>(p.size()), 0.0f);
    }
    st.centers = compute_average_center(gen, enc, train.average_samples);
    if (train.center_mode == CenterMode::text) st.centers.f_base = compute_text_center(enc, train.text_class);
    st.bank = CenterBank(static_cast<std::size_t>(train.trc_capacity));
    st.z_rng = Rng(train.seed);
    st.trc_rng = Rng(train.seed ^ kTrcSalt);
    return st;
}

Trainer::Trainer(std::shared_ptr<const GeneratorAdapter> gen, std::shared_ptr<const EncoderAdapter> enc,
                 TrainState state)
    : gen_(std::move(gen)), enc_(std::move(enc)), state_(std::move(state)) {
    require(gen_ && enc_, "Trainer: adapters must be provided");
    require(gen_->config().d_w == state_.mappers.d_w() && gen_->config().dim_s == state_.mappers.dim_s(),
            "Trainer: generator does not match mapper shapes");
    require(enc_->d_clip() == state_.mappers.d_clip(), "Trainer: encoder does not match mapper input size");
    require(state_.adam.m.size() == state_.mappers.parameters().size(), "Trainer: optimizer state mismatch");
}

LossReport Trainer::step() {
    TrainState& st = state_;
    const TrainConfig& cfg = st.train;
    require(st.iteration < cfg.iterations, "Trainer::step: training already complete");
    const double lr = lr_at(st.iteration, cfg);
    const int batch = cfg.batch_size;
    const int d_clip = st.mappers.d_clip();
    const int d_w = st.mappers.d_w();
    const int n = st.mappers.n_layers();

    struct Drawn {
        Embedding f;
        WLatent w;
        SBundle s;
    };
    std::vector<Drawn> drawn;
    drawn.reserve(batch);
    for (int b = 0; b < batch; ++b) {
        const auto z = st.z_rng.normal_vector(static_cast<std::size_t>(gen_->config().d_z));
        auto sample = gen_->sample(z);
        Embedding f = enc_->encode_image(sample.image);
        drawn.push_back({std::move(f), std::move(sample.w), std::move(sample.s)});
    }

    const auto warm_fill = std::min<std::size_t>(static_cast<std::size_t>(cfg.trc_min_fill), st.bank.capacity());
    const bool multi_center = cfg.trc_enabled && st.bank.size() >= warm_fill;

    // Column layout for FC_w: per sample, one main column against the major
    // center (it also feeds the s path), followed by the sampled TRC centers.
    // A sampled pair equal to the major center is folded into the main column.
    std::vector<VecT<float>> cols_f;
    std::vector<VecT<float>> cols_w;
    std::vector<float> col_weight;
    std::vector<Eigen::Index> main_col;
    const float inv_batch = 1.0f / static_cast<float>(batch);
    for (const auto& d : drawn) {
        const Eigen::Index main = static_cast<Eigen::Index>(cols_f.size());
        main_col.push_back(main);
        cols_f.push_back(vec_of(d.f.values) - vec_of(st.centers.f_base.values));
        cols_w.push_back(vec_of(d.w.values) - vec_of(st.centers.w_base.values));
        if (!multi_center) {
            col_weight.push_back(inv_batch);
            continue;
        }
        const std::size_t k = std::min<std::size_t>(st.bank.size(), static_cast<std::size_t>(cfg.trc_max_pairs));
        const auto picks = st.bank.sample_indices(k, st.trc_rng);
        col_weight.push_back(0.0f);
        std::size_t folded = 0;
        for (std::size_t idx : picks) {
            const Embedding& fc = st.bank.f_at(idx);
            const WLatent& wc = st.bank.w_at(idx);
            if (fc == st.centers.f_base && wc == st.centers.w_base) {
                ++folded;
                continue;
            }
            cols_f.push_back(vec_of(d.f.values) - vec_of(fc.values));
            cols_w.push_back(vec_of(d.w.values) - vec_of(wc.values));
            col_weight.push_back(1.0f / static_cast<float>(k) * inv_batch);
        }
        col_weight[static_cast<std::size_t>(main)] =
            static_cast<float>(folded) / static_cast<float>(k) * inv_batch;
    }

    const Eigen::Index ncols = static_cast<Eigen::Index>(cols_f.size());
    ObjectiveBatch<float> ob;
    ob.delta_f.resize(d_clip, ncols);
    ob.delta_w_trg.resize(d_w, ncols);
    for (Eigen::Index c = 0; c < ncols; ++c) {
        ob.delta_f.col(c) = cols_f[static_cast<std::size_t>(c)];
        ob.delta_w_trg.col(c) = cols_w[static_cast<std::size_t>(c)];
    }
    ob.column_weight = std::move(col_weight);
    ob.main_col = std::move(main_col);
    ob.delta_s_trg.resize(n);
    for (int i = 0; i < n; ++i) {
        ob.delta_s_trg[i].resize(st.mappers.dim_s()[i], batch);
        for (int b = 0; b < batch; ++b)
            ob.delta_s_trg[i].col(b) = vec_of(drawn[b].s.layers[i]) - vec_of(st.centers.s_base.layers[i]);
    }

    MapperStack grad = st.mappers.zeros_like();
    const LossReport report = mapper_objective<float>(st.mappers, ob, st.weights, &grad);
    if (!std::isfinite(report.total))
        throw TrainingAborted("non-finite loss at iteration " + std::to_string(st.iteration), st.iteration, report);

    adam_update(grad, lr);

    for (const auto& d : drawn) {
        if (cfg.center_mode == CenterMode::ema) st.centers.f_base = ema_update(st.centers.f_base, d.f, cfg.ema_decay);
        if (cfg.trc_enabled && !cfg.trc_freeze_bank) st.bank.push(d.f, d.w);
    }
    st.degenerate_norms += report.degenerate_norms;
    ++st.iteration;
    return report;
}

void Trainer::adam_update(const MapperStack& grad, double lr) {
    auto& adam = state_.adam;
    const auto& cfg = state_.train;
    ++adam.step;
    const double t = static_cast<double>(adam.step);
    const float b1 = static_cast<float>(cfg.adam_beta1);
    const float b2 = static_cast<float>(cfg.adam_beta2);
    const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(cfg.adam_beta1, t)));
    const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(cfg.adam_beta2, t)));
    const float eps = static_cast<float>(cfg.adam_eps);
    const float step = static_cast<float>(lr);
    auto params = state_.mappers.parameters();
    const auto grads = grad.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
        float* w = params[p].data;
        const float* g = grads[p].data;
        auto& m = adam.m[p];
        auto& v = adam.v[p];
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = b1 * m[i] + (1.0f - b1) * g[i];
            v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
            w[i] -= step * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
        }
    }
}

void Trainer::run(std::int64_t until, const StepCallback& on_step) {
    const std::int64_t end = until < 0 ? state_.train.iterations : until;
    require(end <= state_.train.iterations, "Trainer::run: target beyond configured iterations");
    while (state_.iteration < end) {
        const LossReport r = step();
        if (on_step) on_step(state_, r);
    }
}

void TrainingLog::record(std::int64_t iteration, double lr, const LossReport& report, std::int64_t degenerate_total) {
    nlohmann::json j = report;
    j["iteration"] = iteration;
    j["lr"] = lr;
    j["degenerate_norms_total"] = degenerate_total;
    j["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    out_ << j.dump() << '\n';
    out_.flush();
}

TrainState run_training(std::shared_ptr<const GeneratorAdapter> gen, std::shared_ptr<const EncoderAdapter> enc,
                        TrainState state, const RunOptions& options) {
    Trainer trainer(std::move(gen), std::move(enc), std::move(state));
    std::ofstream log_file;
    std::unique_ptr<TrainingLog> log;
    if (!options.log_path.empty()) {
        log_file.open(options.log_path, std::ios::app);
        if (!log_file) throw std::runtime_error("cannot open training log " + options.log_path.string());
        log = std::make_unique<TrainingLog>(log_file);
    }
    const auto& cfg = trainer.state().train;
    try {
        trainer.run(-1, [&](const TrainState& st, const LossReport& r) {
            const std::int64_t done = st.iteration;
            if (cfg.log_every > 0 && (done % cfg.log_every == 0 || done == cfg.iterations)) {
                const double lr = lr_at(done - 1, cfg);
                if (log) log->record(done, lr, r, st.degenerate_norms);
                if (options.progress)
                    *options.progress << "iter " << done << " total " << r.total << " l_w " << r.l_w << " l_s "
                                      << r.l_s << '\n';
            }
            if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && done != cfg.iterations &&
                !options.checkpoint_path.empty())
                save_checkpoint(options.checkpoint_path, st);
        });
    } catch (const TrainingAborted&) {
        if (!options.checkpoint_path.empty()) {
            auto abort_path = options.checkpoint_path;
            abort_path += ".abort";
            save_checkpoint(abort_path, trainer.state());
        }
        throw;
    }
    if (!options.checkpoint_path.empty()) save_checkpoint(options.checkpoint_path, trainer.state());
    return trainer.state();
}

} // namespace csla
