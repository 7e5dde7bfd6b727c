#pragma once

// Recipe (de)serialization.  A recipe document is a JSON object with a
// single "recipe" key:
//
//   { "recipe": {
//       "kind": "contextual_product",
//       "id": "demo_eq3",
//       "lambda_spaces": { "lambda1": 5, "lambda2": 5,
//                          "alice_x": 2, "alice_xp": 2, "bob_y": 2, "bob_yp": 2 },
//       "weights": { "source": [[...], ...],          // n1 x n2
//                    "alice_x": [...], ... },          // per-setting, or
//                                                      // "context_xy": [[...]]
//                                                      // for correlated kind
//       "outcome_tables": { "alice": [ per-setting tables ], "bob": [...] },
//       "outcome_probs":  { ... },                     // stochastic_local
//       "delays": { "alice": [[...],[...]], "bob": [[...],[...]] },  // time_tag
//       "base": { ... },                               // coupled_joint
//       "angles": { "alice": [a, ap], "bob": [b, bp] } // optional
//   } }
//
// Probabilities may be JSON numbers (converted exactly as the dyadic
// rationals they are) or strings like "9/40".  Outcome tables are nested
// [setting][label] for deterministic models and [setting][label][instrument]
// otherwise.  Serialization writes rationals as "p/q" strings, so a
// save/load round trip reproduces the model exactly.

#include "bell/model.hpp"

#include <json.hpp>

#include <filesystem>

namespace bell {

nlohmann::json recipe_to_json(const Model& m);
Model model_from_recipe_json(const nlohmann::json& doc);

Model load_recipe_file(const std::filesystem::path& path);
void save_recipe_file(const Model& m, const std::filesystem::path& path);

}  // namespace bell
