#include "csla/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "csla/checkpoint.hpp"
#include "csla/config_json.hpp"
#include "csla/evalkit.hpp"
#include "csla/imaging.hpp"
#include "csla/inference.hpp"
#include "csla/service.hpp"
#include "csla/trainer.hpp"

namespace csla {

using nlohmann::json;

namespace {

json latents_json(const Latents& l) { return {{"w", l.w.values}, {"s", l.s.layers}}; }

json centers_json(const CenterSet& c) {
    return {{"f_base", c.f_base.values}, {"w_base", c.w_base.values}, {"s_base", c.s_base.layers}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::optional<std::vector<int>> parse_layers(const std::string& spec) {
    if (spec.empty()) return std::nullopt;
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--layers", "bad layer index '" + item + "'");
        }
    }
    return out;
}

void print_error(const char* kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

} // namespace

int cli_dispatch(int argc, char** argv) {
    CLI::App app{"Text-driven latent editing: train mappers, invert, generate, edit and evaluate.", "csla"};
    app.require_subcommand(1);

    std::filesystem::path config_path, resume_path, model_path, image_path, out_path, recon_path, pairs_path,
        export_path;
    std::string text, src, trg, layers, space = "s", host = "127.0.0.1", adapter = "toy";
    float strength = 1.0f;
    int n = 100, port = 8080, max_concurrent = 4, timeout = 30;
    std::uint64_t seed = 1234;
    std::size_t cache = 256;
    bool quiet = false;

    auto* train = app.add_subcommand("train", "Train the mappers from a JSON config");
    train->add_option("--config", config_path, "Training config (generator/encoder/mapper/train/loss_weights, "
                                               "checkpoint, log)")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--resume", resume_path, "Continue from this checkpoint instead of starting fresh")
        ->check(CLI::ExistingFile);
    train->add_flag("--quiet", quiet, "No progress output");

    auto* invert = app.add_subcommand("invert", "Invert an image into (w, s) latents");
    invert->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
    invert->add_option("--image", image_path, "Input PNG")->required()->check(CLI::ExistingFile);
    invert->add_option("--out", out_path, "Output latent JSON")->required();
    invert->add_option("--recon", recon_path, "Also write the reconstruction PNG");

    auto* generate = app.add_subcommand("generate", "Generate an image from text");
    generate->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
    generate->add_option("--text", text, "Prompt")->required();
    generate->add_option("--out", out_path, "Output PNG")->required();

    auto* edit = app.add_subcommand("edit", "Edit an image along a text direction");
    edit->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
    edit->add_option("--image", image_path, "Input PNG")->required()->check(CLI::ExistingFile);
    edit->add_option("--src", src, "Source prompt")->required();
    edit->add_option("--trg", trg, "Target prompt")->required();
    edit->add_option("--strength", strength, "Edit strength")->capture_default_str();
    edit->add_option("--layers", layers, "Comma-separated layer indices (default: all)");
    edit->add_option("--space", space, "Edit space")->check(CLI::IsMember({"w", "s"}))->capture_default_str();
    edit->add_option("--out", out_path, "Output PNG")->required();

    auto* eval = app.add_subcommand("eval", "Identity score and text-pair accuracy per mode");
    eval->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
    eval->add_option("--pairs", pairs_path, "Text pair JSONL (mode, positive, negative)")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--n", n, "Population size")->check(CLI::PositiveNumber)->capture_default_str();
    eval->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    eval->add_option("--strength", strength, "Edit strength")->capture_default_str();
    eval->add_option("--space", space, "Edit space")->check(CLI::IsMember({"w", "s"}))->capture_default_str();

    auto* center = app.add_subcommand("center", "Export the model's centers as JSON");
    center->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
    center->add_option("--export", export_path, "Output JSON")->required();

    auto* serve = app.add_subcommand("serve", "Run the HTTP service (CSLA_BIND, CSLA_CHECKPOINT override)");
    serve->add_option("--model", model_path, "Checkpoint");
    serve->add_option("--host", host, "Bind host")->capture_default_str();
    serve->add_option("--port", port, "Bind port")->capture_default_str();
    serve->add_option("--adapter", adapter, "Backbone adapters")->capture_default_str();
    serve->add_option("--max-concurrent", max_concurrent, "Concurrent requests before 429")->capture_default_str();
    serve->add_option("--timeout", timeout, "Request timeout in seconds")->capture_default_str();
    serve->add_option("--cache", cache, "Latent and direction handle cache size")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (*train) {
            TrainJob job = load_train_job(config_path);
            auto gen = std::make_shared<ToyGenerator>(job.generator);
            auto enc = std::make_shared<ToyEncoder>(job.encoder);
            TrainState state = resume_path.empty()
                                   ? initialize_training(*gen, *enc, job.train, job.mapper, job.weights)
                                   : load_checkpoint(resume_path);
            RunOptions options{job.checkpoint, job.log, quiet ? nullptr : &std::cerr};
            const TrainState done = run_training(gen, enc, std::move(state), options);
            const auto a = alignment_report(*gen, *enc, done.mappers, done.centers, 256, 0x5eed);
            std::cout << json{{"checkpoint", job.checkpoint.string()},
                              {"iterations", done.iteration},
                              {"heldout_w_cosine", a.w_cosine},
                              {"heldout_s_cosine", a.s_cosine}}
                             .dump()
                      << std::endl;
        } else if (*invert) {
            const Model model = Model::from_checkpoint(model_path);
            const Latents lat = model.invert(read_png(image_path));
            write_text(out_path, latents_json(lat).dump() + "\n");
            if (!recon_path.empty()) write_png(recon_path, model.decode(lat, EditSpace::s));
        } else if (*generate) {
            write_png(out_path, Model::from_checkpoint(model_path).generate(text));
        } else if (*edit) {
            const Model model = Model::from_checkpoint(model_path);
            EditRequest req{src, trg, strength, parse_layers(layers), edit_space_from_string(space)};
            write_png(out_path, model.apply_edit(read_png(image_path), req));
        } else if (*eval) {
            const Model model = Model::from_checkpoint(model_path);
            const auto pairs = load_text_pairs(pairs_path);
            const EvalReport report =
                evaluate(model, pairs, ToyIdentityEmbedder(), {n, seed, strength, edit_space_from_string(space)});
            print_report(std::cout, report);
        } else if (*center) {
            write_text(export_path, centers_json(Model::from_checkpoint(model_path).centers()).dump() + "\n");
        } else if (*serve) {
            ServiceConfig cfg;
            cfg.host = host;
            cfg.port = port;
            cfg.checkpoint = model_path;
            cfg.adapter = adapter;
            cfg.max_concurrent = max_concurrent;
            cfg.timeout_s = timeout;
            cfg.latent_cache = cfg.direction_cache = cache;
            return run_service(cfg);
        }
    } catch (const CLI::ValidationError& e) {
        print_error("usage", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return 1;
    }
    return 0;
}

} // namespace csla
