#pragma once

#include <json.hpp>

#include <string>

#include "nsdpcq/model.hpp"

namespace nsdpcq {

/// Parses the problem-file JSON schema. Unknown keys, type errors and size
/// violations throw ParseError with the byte offset of the offending token
/// when one can be located.
NsdpProblem parse_problem(const std::string& text);
NsdpProblem load_problem_file(const std::string& path);

nlohmann::json problem_to_json(const NsdpProblem& p);
std::string serialize_problem(const NsdpProblem& p);

nlohmann::json poly_to_json(const Poly& p);
Poly poly_from_json(const nlohmann::json& j, int n);

/// Comma-separated coordinates, e.g. "0,0.5,-1".
Vector parse_point(const std::string& text, int n);

/// Structural equality: same sizes, same canonical polynomials, same blocks.
bool structurally_equal(const NsdpProblem& a, const NsdpProblem& b);

}  // namespace nsdpcq
