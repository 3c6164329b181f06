/**
 * @file scripted.h
 * @brief Deterministic stand-in models for tests, demos and harness checks.
 */

#ifndef M2L_SCRIPTED_H
#define M2L_SCRIPTED_H

#include <string_view>

#include "m2l/llm_client.h"

namespace m2l {

/// Built-in programs:
///   echo           returns the user message
///   cooperative    fills blank grids exactly, honors "N Chinese characters"
///                  requests (fenced when the prompt asks for fences), scores
///                  consistency 4, selects the candidate with fewest mismatches
///   fixed:<text>   always returns <text>
///   random-length  answers with a random number (1-25) of characters
///   adversarial    wrong lengths, unfenced scores, REGENERATE or nonsense verdicts
///   stubborn-judge cooperative, but the Judger always asks to regenerate
///   garbled-judge  cooperative, but the Judger never answers parseably
///
/// Output depends only on the request and `seed`. Throws ConfigError for
/// unknown names.
ScriptProgram scripted_program(std::string_view name, unsigned seed = 0);

}  // namespace m2l

#endif  // M2L_SCRIPTED_H
