#pragma once

// JSON and fixed-layout text renderings of analysis results. Nothing here
// depends on time, thread count or memory addresses, so identical inputs give
// identical bytes.

#include <string>

#include "json.hpp"

#include "invman/persistence.hpp"
#include "invman/scenarios.hpp"

namespace invman {

inline constexpr int kSchemaVersion = 1;

nlohmann::ordered_json config_json(const PersistenceConfig& config);
nlohmann::ordered_json monodromy_json(const MonodromyResult& m);
nlohmann::ordered_json hypotheses_json(const HypothesisReport& h);
nlohmann::ordered_json persistence_json(const PersistenceReport& r);
nlohmann::ordered_json appendix_json(const AppendixReport& r);

/// Top-level document: schema_version, command, scenario, config, result.
nlohmann::ordered_json report_document(const std::string& command, const std::string& scenario,
                                       const PersistenceConfig& config,
                                       nlohmann::ordered_json result);

std::string monodromy_text(const MonodromyResult& m);
std::string hypotheses_text(const HypothesisReport& h);
std::string persistence_text(const PersistenceReport& r, const PersistenceConfig& config);
std::string appendix_text(const AppendixReport& r);

}  // namespace invman
