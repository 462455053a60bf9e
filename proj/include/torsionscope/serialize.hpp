#pragma once

#include <string>

#include <json.hpp>

#include "torsionscope/neuralnet.hpp"
#include "torsionscope/ph_field.hpp"
#include "torsionscope/ph_torsion.hpp"

namespace torsionscope {

using Json = nlohmann::ordered_json;

/// {coefficients, pairs: [{birth, death|"inf", dim, birth_index, death_index|null}]}
Json diagram_to_json(const PersistenceDiagram& diagram);
PersistenceDiagram diagram_from_json(const Json& j);

Json report_to_json(const TorsionReport& report);
TorsionReport report_from_json(const Json& j);
std::string method_name(TorsionMethod m);

Json homology_to_json(const IntegralHomologySummary& h);

Json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& j);

/// Layer specs, parameters and running statistics, plus the seed and,
/// optionally, the training config.
Json model_to_json(const AutoencoderModel& model, const TrainConfig* config = nullptr);
AutoencoderModel model_from_json(const Json& j);

/// Finite doubles as numbers, infinities as "inf"/"-inf".
Json number_or_inf(double v);
double number_from_json(const Json& j);

Json read_json_file(const std::string& path);
/// Two-space indented dump with a trailing newline.
void write_json_file(const std::string& path, const Json& j);

}  // namespace torsionscope
