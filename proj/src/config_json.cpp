#include "csla/config_json.hpp"

#include <fstream>
#include <set>

namespace csla {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
    require(j.is_object(), std::string(what) + " must be a JSON object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : j.items())
        require(allowed.count(key) > 0, std::string(what) + ": unknown key '" + key + "'");
}

template <typename V>
void read(const json& j, const char* key, V& out) {
    if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

std::string asm_name(AsmActivation a) { return a == AsmActivation::sigmoid ? "sigmoid" : "tanh"; }

AsmActivation asm_from(const std::string& s) {
    if (s == "sigmoid") return AsmActivation::sigmoid;
    if (s == "tanh") return AsmActivation::tanh;
    throw ContractViolation("unknown ASM activation '" + s + "'");
}

} // namespace

void to_json(json& j, const GeneratorConfig& c) {
    j = json{{"d_z", c.d_z},   {"d_w", c.d_w},       {"n_layers", c.n_layers}, {"dim_s", c.dim_s},
             {"height", c.height}, {"width", c.width}, {"seed", c.seed}};
}

void from_json(const json& j, GeneratorConfig& c) {
    reject_unknown(j, {"d_z", "d_w", "n_layers", "dim_s", "height", "width", "seed"}, "generator config");
    read(j, "d_z", c.d_z);
    read(j, "d_w", c.d_w);
    read(j, "dim_s", c.dim_s);
    c.n_layers = static_cast<int>(c.dim_s.size());
    read(j, "n_layers", c.n_layers);
    read(j, "height", c.height);
    read(j, "width", c.width);
    read(j, "seed", c.seed);
    c.validate();
}

void to_json(json& j, const EncoderConfig& c) {
    j = json{{"d_clip", c.d_clip}, {"vocab", c.vocab},   {"height", c.height},       {"width", c.width},
             {"pool", c.pool},     {"resize", c.resize}, {"normalize", c.normalize}, {"seed", c.seed}};
}

void from_json(const json& j, EncoderConfig& c) {
    reject_unknown(j, {"d_clip", "vocab", "height", "width", "pool", "resize", "normalize", "seed"},
                   "encoder config");
    read(j, "d_clip", c.d_clip);
    read(j, "vocab", c.vocab);
    read(j, "height", c.height);
    read(j, "width", c.width);
    read(j, "pool", c.pool);
    read(j, "resize", c.resize);
    read(j, "normalize", c.normalize);
    read(j, "seed", c.seed);
    c.validate();
}

void to_json(json& j, const MapperConfig& c) {
    j = json{{"fc_w_layers", c.fc_w_layers},
             {"fc_w_hidden", c.fc_w_hidden},
             {"fc_s_layers", c.fc_s_layers},
             {"fc_s_hidden", c.fc_s_hidden},
             {"asm_hidden", c.asm_hidden},
             {"lrelu_slope", c.lrelu_slope},
             {"pixel_norm", c.pixel_norm},
             {"asm_enabled", c.asm_enabled},
             {"asm_activation", asm_name(c.asm_activation)},
             {"learnable_center", c.learnable_center},
             {"fc_s_output_scale", c.fc_s_output_scale},
             {"seed", c.seed}};
}

void from_json(const json& j, MapperConfig& c) {
    reject_unknown(j,
                   {"fc_w_layers", "fc_w_hidden", "fc_s_layers", "fc_s_hidden", "asm_hidden", "lrelu_slope",
                    "pixel_norm", "asm_enabled", "asm_activation", "learnable_center", "fc_s_output_scale", "seed"},
                   "mapper config");
    read(j, "fc_w_layers", c.fc_w_layers);
    read(j, "fc_w_hidden", c.fc_w_hidden);
    read(j, "fc_s_layers", c.fc_s_layers);
    read(j, "fc_s_hidden", c.fc_s_hidden);
    read(j, "asm_hidden", c.asm_hidden);
    read(j, "lrelu_slope", c.lrelu_slope);
    read(j, "pixel_norm", c.pixel_norm);
    read(j, "asm_enabled", c.asm_enabled);
    if (auto it = j.find("asm_activation"); it != j.end()) c.asm_activation = asm_from(it->get<std::string>());
    read(j, "learnable_center", c.learnable_center);
    read(j, "fc_s_output_scale", c.fc_s_output_scale);
    read(j, "seed", c.seed);
    c.validate();
}

void to_json(json& j, const LossWeights& c) {
    j = json{{"lambda_s", c.lambda_s}, {"lambda_w_dir", c.lambda_w_dir}, {"lambda_s_dir", c.lambda_s_dir}};
}

void from_json(const json& j, LossWeights& c) {
    reject_unknown(j, {"lambda_s", "lambda_w_dir", "lambda_s_dir"}, "loss weights");
    read(j, "lambda_s", c.lambda_s);
    read(j, "lambda_w_dir", c.lambda_w_dir);
    read(j, "lambda_s_dir", c.lambda_s_dir);
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"iterations", c.iterations},
             {"lr_init", c.lr_init},
             {"poly_power", c.poly_power},
             {"adam_beta1", c.adam_beta1},
             {"adam_beta2", c.adam_beta2},
             {"adam_eps", c.adam_eps},
             {"batch_size", c.batch_size},
             {"trc_enabled", c.trc_enabled},
             {"trc_capacity", c.trc_capacity},
             {"trc_min_fill", c.trc_min_fill},
             {"trc_max_pairs", c.trc_max_pairs},
             {"trc_freeze_bank", c.trc_freeze_bank},
             {"center_mode", to_string(c.center_mode)},
             {"text_class", c.text_class},
             {"ema_decay", c.ema_decay},
             {"average_samples", c.average_samples},
             {"seed", c.seed},
             {"log_every", c.log_every},
             {"checkpoint_every", c.checkpoint_every}};
}

void from_json(const json& j, TrainConfig& c) {
    reject_unknown(j,
                   {"iterations", "lr_init", "poly_power", "adam_beta1", "adam_beta2", "adam_eps", "batch_size",
                    "trc_enabled", "trc_capacity", "trc_min_fill", "trc_max_pairs", "trc_freeze_bank", "center_mode",
                    "text_class", "ema_decay", "average_samples", "seed", "log_every", "checkpoint_every"},
                   "train config");
    if (auto it = j.find("iterations"); it != j.end())
        c.iterations = it->is_number_float() ? static_cast<std::int64_t>(it->get<double>()) : it->get<std::int64_t>();
    read(j, "lr_init", c.lr_init);
    read(j, "poly_power", c.poly_power);
    read(j, "adam_beta1", c.adam_beta1);
    read(j, "adam_beta2", c.adam_beta2);
    read(j, "adam_eps", c.adam_eps);
    read(j, "batch_size", c.batch_size);
    read(j, "trc_enabled", c.trc_enabled);
    read(j, "trc_capacity", c.trc_capacity);
    read(j, "trc_min_fill", c.trc_min_fill);
    read(j, "trc_max_pairs", c.trc_max_pairs);
    read(j, "trc_freeze_bank", c.trc_freeze_bank);
    if (auto it = j.find("center_mode"); it != j.end()) c.center_mode = center_mode_from_string(it->get<std::string>());
    read(j, "text_class", c.text_class);
    read(j, "ema_decay", c.ema_decay);
    read(j, "average_samples", c.average_samples);
    read(j, "seed", c.seed);
    read(j, "log_every", c.log_every);
    read(j, "checkpoint_every", c.checkpoint_every);
    c.validate();
}

void to_json(json& j, const LossReport& r) {
    j = json{{"total", r.total},     {"l_w", r.l_w},         {"l_s", r.l_s},
             {"l_w_dir", r.l_w_dir}, {"l_s_dir", r.l_s_dir}, {"l_w_abs", r.l_w_abs},
             {"l_s_abs", r.l_s_abs}, {"degenerate_norms", r.degenerate_norms}};
}

TrainJob parse_train_job(const json& j) {
    require(j.is_object(), "config must be a JSON object");
    TrainJob job;
    for (const auto& [key, value] : j.items()) {
        if (key == "generator") value.get_to(job.generator);
        else if (key == "encoder") value.get_to(job.encoder);
        else if (key == "mapper") value.get_to(job.mapper);
        else if (key == "train") value.get_to(job.train);
        else if (key == "loss_weights") value.get_to(job.weights);
        else if (key == "checkpoint") job.checkpoint = value.get<std::string>();
        else if (key == "log") job.log = value.get<std::string>();
        else throw ContractViolation("config: unknown key '" + key + "'");
    }
    return job;
}

TrainJob load_train_job(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }
    return parse_train_job(j);
}

} // namespace csla
