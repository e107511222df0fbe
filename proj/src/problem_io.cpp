#include "nsdpcq/problem_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nsdpcq/errors.hpp"

namespace nsdpcq {

using nlohmann::json;

namespace {

// Offset of the first occurrence of a quoted key, for diagnostics only.
std::size_t key_offset(const std::string& text, const std::string& key) {
  const std::size_t pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 0 : pos;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                    const std::string& text) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParseError("unknown key \"" + it.key() + "\" in " + where, key_offset(text, it.key()));
}

int as_int(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ParseError(what + " must be an integer");
  return j.get<int>();
}

}  // namespace

Poly poly_from_json(const json& j, int n) {
  if (!j.is_array()) throw ParseError("polynomial must be an array of terms");
  std::vector<Term> terms;
  for (const json& t : j) {
    if (!t.is_object()) throw ParseError("term must be an object {\"c\", \"e\"}");
    for (auto it = t.begin(); it != t.end(); ++it)
      if (it.key() != "c" && it.key() != "e") throw ParseError("unknown key \"" + it.key() + "\" in term");
    if (!t.contains("c") || !t["c"].is_number()) throw ParseError("term coefficient \"c\" must be a number");
    if (!t.contains("e") || !t["e"].is_array()) throw ParseError("term exponents \"e\" must be an array");
    Term term;
    term.coef = t["c"].get<double>();
    if (static_cast<int>(t["e"].size()) != n) throw ParseError("term exponent vector must have length n");
    for (const json& e : t["e"]) {
      const int v = as_int(e, "exponent");
      if (v < 0) throw ParseError("exponents must be non-negative");
      term.exps.push_back(v);
    }
    terms.push_back(std::move(term));
  }
  return Poly(n, std::move(terms));
}

json poly_to_json(const Poly& p) {
  json arr = json::array();
  for (const Term& t : p.terms()) arr.push_back({{"c", t.coef}, {"e", t.exps}});
  return arr;
}

NsdpProblem parse_problem(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
  if (!root.is_object()) throw ParseError("problem file must contain a JSON object");
  reject_unknown(root, {"name", "n", "m", "objective", "constraint", "equalities", "blocks"},
                 "problem", text);
  for (const char* key : {"n", "m", "constraint"})
    if (!root.contains(key)) throw ParseError(std::string("missing required key \"") + key + "\"");

  NsdpProblem p;
  try {
    p.name = root.value("name", std::string("unnamed"));
    p.n = as_int(root["n"], "n");
    const int m = as_int(root["m"], "m");
    if (p.n < 1 || p.n > kMaxVars) throw ParseError("n must lie in [1, 64]", key_offset(text, "n"));
    if (m < 1 || m > kMaxDim) throw ParseError("m must lie in [1, 50]", key_offset(text, "m"));
    p.objective = root.contains("objective") ? poly_from_json(root["objective"], p.n) : Poly(p.n);
    p.constraint = MatrixPoly(m, p.n);

    const json& cons = root["constraint"];
    if (!cons.is_array()) throw ParseError("\"constraint\" must be an array");
    std::set<std::pair<int, int>> seen;
    for (const json& e : cons) {
      if (!e.is_object()) throw ParseError("constraint entry must be an object");
      reject_unknown(e, {"i", "j", "poly"}, "constraint entry", text);
      const int i = as_int(e.at("i"), "i"), j = as_int(e.at("j"), "j");
      if (i < 0 || j >= m || i > j) throw ParseError("constraint entry needs 0 <= i <= j < m");
      if (!seen.insert({i, j}).second) throw ParseError("duplicate constraint entry");
      p.constraint.set(i, j, poly_from_json(e.at("poly"), p.n));
    }
    if (root.contains("equalities")) {
      if (!root["equalities"].is_array()) throw ParseError("\"equalities\" must be an array");
      for (const json& h : root["equalities"]) p.equalities.push_back(poly_from_json(h, p.n));
    }
    if (root.contains("blocks")) {
      std::vector<int> sizes;
      for (const json& b : root["blocks"]) sizes.push_back(as_int(b, "block size"));
      try {
        p.constraint.set_blocks(std::move(sizes));
      } catch (const DimensionError& e) {
        throw ParseError(e.what(), key_offset(text, "blocks"));
      }
    }
    p.validate();
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid problem file: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(e.what());
  }
  return p;
}

NsdpProblem load_problem_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open problem file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

json problem_to_json(const NsdpProblem& p) {
  json j;
  j["name"] = p.name;
  j["n"] = p.n;
  j["m"] = p.m();
  j["objective"] = poly_to_json(p.objective);
  json cons = json::array();
  for (const auto& [ij, poly] : p.constraint.entries())
    cons.push_back({{"i", ij.first}, {"j", ij.second}, {"poly", poly_to_json(poly)}});
  j["constraint"] = cons;
  if (!p.equalities.empty()) {
    json eq = json::array();
    for (const Poly& h : p.equalities) eq.push_back(poly_to_json(h));
    j["equalities"] = eq;
  }
  if (p.constraint.blocks()) j["blocks"] = *p.constraint.blocks();
  return j;
}

std::string serialize_problem(const NsdpProblem& p) { return problem_to_json(p).dump(2) + "\n"; }

Vector parse_point(const std::string& text, int n) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("invalid coordinate \"" + item + "\" in point");
    }
  }
  if (static_cast<int>(vals.size()) != n) {
    std::ostringstream os;
    os << "point has " << vals.size() << " coordinates, expected " << n;
    throw ParseError(os.str());
  }
  return Eigen::Map<Vector>(vals.data(), n);
}

bool structurally_equal(const NsdpProblem& a, const NsdpProblem& b) {
  if (a.name != b.name || a.n != b.n || a.m() != b.m()) return false;
  if (!(a.objective == b.objective)) return false;
  if (a.constraint.entries() != b.constraint.entries()) return false;
  if (a.constraint.blocks() != b.constraint.blocks()) return false;
  return a.equalities == b.equalities;
}

}  // namespace nsdpcq
