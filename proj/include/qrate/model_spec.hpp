#pragma once

#include <fstream>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qrate/errors.hpp"
#include "qrate/process.hpp"

namespace qrate {

// Model-spec JSON schema, version 1.
//
//   {"model": "iid",            "marginal": "std_normal" | "uniform01" |
//                               "heavy_tail", ["tail_exponent": nu]}
//   {"model": "gaussian_ma",    "marginal": ..., "theta": [t0, ..., tm]}
//   {"model": "doeblin_copula", "marginal": ..., "retain": r, "latent_corr": a}
//   {"model": "finite_markov",  "transition": [[...], ...], "values": [...]}
//
// "version" is optional and must equal 1 when present. Unknown fields are
// rejected.

namespace detail {

inline void require_fields(const nlohmann::json& j, const std::set<std::string>& allowed,
                           const std::set<std::string>& required) {
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      throw config_error("model spec: unknown field \"" + item.key() + "\"");
    }
  }
  for (const auto& key : required) {
    if (!j.contains(key)) throw config_error("model spec: missing field \"" + key + "\"");
  }
}

inline MarginalLaw parse_marginal(const nlohmann::json& j) {
  const std::string name = j.at("marginal").get<std::string>();
  if (name == "std_normal") return MarginalLaw::std_normal();
  if (name == "uniform01") return MarginalLaw::uniform01();
  if (name == "heavy_tail") {
    if (!j.contains("tail_exponent")) {
      throw config_error("model spec: heavy_tail marginal requires tail_exponent");
    }
    const double nu = j.at("tail_exponent").get<double>();
    if (!(nu > 0.0)) throw config_error("model spec: tail_exponent must be > 0");
    return MarginalLaw::heavy_tail(nu);
  }
  throw config_error("model spec: unknown marginal \"" + name + "\"");
}

}  // namespace detail

inline ProcessModel parse_model_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("model spec: document must be a JSON object");
  if (j.contains("version") && j.at("version").get<int>() != 1) {
    throw config_error("model spec: unsupported schema version");
  }
  if (!j.contains("model")) throw config_error("model spec: missing field \"model\"");
  const std::string kind = j.at("model").get<std::string>();

  try {
    if (kind == "iid") {
      detail::require_fields(j, {"version", "model", "marginal", "tail_exponent"},
                             {"marginal"});
      return IidModel{detail::parse_marginal(j)};
    }
    if (kind == "gaussian_ma") {
      detail::require_fields(j, {"version", "model", "marginal", "tail_exponent", "theta"},
                             {"marginal", "theta"});
      return GaussianMaModel(j.at("theta").get<std::vector<double>>(),
                             detail::parse_marginal(j));
    }
    if (kind == "doeblin_copula") {
      detail::require_fields(
          j, {"version", "model", "marginal", "tail_exponent", "retain", "latent_corr"},
          {"marginal", "retain", "latent_corr"});
      return DoeblinCopulaModel(detail::parse_marginal(j), j.at("retain").get<double>(),
                                j.at("latent_corr").get<double>());
    }
    if (kind == "finite_markov") {
      detail::require_fields(j, {"version", "model", "transition", "values"},
                             {"transition", "values"});
      return FiniteMarkov(j.at("transition").get<StochasticMatrix>(),
                          j.at("values").get<std::vector<double>>());
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("model spec: ") + e.what());
  }
  throw config_error("model spec: unknown model \"" + kind + "\"");
}

inline nlohmann::json model_spec_json(const ProcessModel& model) {
  nlohmann::json j;
  j["version"] = 1;
  const auto marginal_fields = [&j](const MarginalLaw& law) {
    switch (law.family()) {
      case MarginalFamily::std_normal:
        j["marginal"] = "std_normal";
        break;
      case MarginalFamily::uniform01:
        j["marginal"] = "uniform01";
        break;
      case MarginalFamily::heavy_tail:
        j["marginal"] = "heavy_tail";
        j["tail_exponent"] = law.tail_exponent();
        break;
    }
  };
  if (const auto* iid = std::get_if<IidModel>(&model)) {
    j["model"] = "iid";
    marginal_fields(iid->marginal);
  } else if (const auto* ma = std::get_if<GaussianMaModel>(&model)) {
    j["model"] = "gaussian_ma";
    marginal_fields(ma->marginal);
    j["theta"] = ma->theta;
  } else if (const auto* dc = std::get_if<DoeblinCopulaModel>(&model)) {
    j["model"] = "doeblin_copula";
    marginal_fields(dc->marginal);
    j["retain"] = dc->retain;
    j["latent_corr"] = dc->latent_corr;
  } else if (const auto* mk = std::get_if<FiniteMarkov>(&model)) {
    j["model"] = "finite_markov";
    j["transition"] = mk->transition;
    j["values"] = mk->values;
  }
  return j;
}

inline ProcessModel load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("model spec: cannot open \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error(std::string("model spec: invalid JSON: ") + e.what());
  }
  try {
    return parse_model_spec(j);
  } catch (const std::domain_error& e) {
    // Parameter-range violations surface as schema errors when loading files.
    throw config_error(std::string("model spec: ") + e.what());
  }
}

}  // namespace qrate
