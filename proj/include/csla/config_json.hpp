#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "csla/encoder.hpp"
#include "csla/generator.hpp"
#include "csla/mappers.hpp"
#include "csla/objective.hpp"
#include "csla/trainer.hpp"

// JSON mapping for every configuration struct. Missing keys keep their
// defaults; unknown keys are rejected so typos in config files surface.
namespace csla {

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const MapperConfig& c);
void from_json(const nlohmann::json& j, MapperConfig& c);
void to_json(nlohmann::json& j, const LossWeights& c);
void from_json(const nlohmann::json& j, LossWeights& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const LossReport& r);

/// Everything `csla train --config` reads from one file.
struct TrainJob {
    GeneratorConfig generator;
    EncoderConfig encoder;
    MapperConfig mapper;
    TrainConfig train;
    LossWeights weights;
    std::filesystem::path checkpoint = "csla.ckpt";
    std::filesystem::path log;
};

TrainJob parse_train_job(const nlohmann::json& j);
TrainJob load_train_job(const std::filesystem::path& path);

} // namespace csla
