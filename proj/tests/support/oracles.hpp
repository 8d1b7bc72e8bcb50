#pragma once

#include <random>

#include "toolplan/catalog.hpp"
#include "toolplan/plan.hpp"

namespace toolplan::testing {

struct OracleScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Brute-force references written without the library's set/map helpers:
// every distinct item is enumerated from a flat universe and membership is
// checked by linear scan.
OracleScore oracle_at_f1(const Plan& gold, const Plan& candidate);
OracleScore oracle_argkey_f1(const Plan& gold, const Plan& candidate);

// Random plan over the catalog with up to `max_actionable` actionable steps.
// Server names randomly carry or drop the "Agent" suffix, pairs may repeat
// and a few steps are non-actionable.
Plan random_plan(std::mt19937_64& rng, const ToolCatalog& catalog, int max_actionable);

// A candidate derived from `gold` by dropping, swapping and re-keying steps,
// so gold/candidate pairs overlap partially more often than not.
Plan mutate_plan(std::mt19937_64& rng, const Plan& gold, const ToolCatalog& catalog, int max_actionable);

ToolCatalog fixture_catalog();
std::string fixture_path(const std::string& relative);

}  // namespace toolplan::testing
