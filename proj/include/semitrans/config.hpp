#pragma once

#include <json.hpp>
#include <string>

#include "semitrans/core_model.hpp"
#include "semitrans/direction.hpp"
#include "semitrans/estimate.hpp"
#include "semitrans/score.hpp"
#include "semitrans/simulate.hpp"

namespace semitrans {

using Json = nlohmann::json;

// parse JSON text; syntax errors report line and column
Json parse_json_text(const std::string& text, const std::string& source);
Json read_json_file(const std::string& path);

// JSON with every number written to 17 significant digits; non-finite numbers
// become the strings "inf", "-inf", "nan"
std::string dump_json(const Json& j);

CoreModel parse_model(const Json& j);
Json model_to_json(const CoreModel& m);

TransformSpec parse_transform(const Json& j);
Json transform_to_json(const TransformSpec& t);

CovariateLaw parse_covariates(const Json& j, std::size_t default_dim);
Json covariates_to_json(const CovariateLaw& law);

CensoringSpec parse_censoring(const Json& j);
Json censoring_to_json(const CensoringSpec& c);

SimConfig parse_sim_config(const Json& sim, const CoreModel& model);
Json sim_config_to_json(const SimConfig& c);

Direction parse_direction(const Json& j);
Json direction_to_json(const Direction& d);

EstimateOptions parse_estimate_options(const Json& j, std::size_t dim_theta);

// "cut" may be a number or the string "median" (median of observed times)
NuisanceDirection parse_nuisance(const Json& j, double median_time);

std::vector<double> parse_vector(const Json& j, const std::string& what);

}  // namespace semitrans
