#pragma once

// JSON readers and writers for the command-line front end. Every reader takes a
// context string (a JSON-pointer-like path) that ends up in the error message.

#include "varigeo/graphcone.hpp"
#include "varigeo/param.hpp"
#include "varigeo/stationarity.hpp"
#include "varigeo/structured.hpp"
#include "varigeo/tensor.hpp"

#include "json.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace varigeo::cli {

// Insertion-ordered so reports come out in a fixed, readable key order.
using json = nlohmann::ordered_json;

// Anything wrong with user input; maps to exit code 3.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

const json& need(const json& j, const std::string& key, const std::string& ctx);
const json* maybe(const json& j, const std::string& key);
int int_from(const json& j, const std::string& ctx);
double num_from(const json& j, const std::string& ctx);
std::string str_from(const json& j, const std::string& ctx);

// {"rows": m, "cols": n, "data": [[...], ...]}; a bare array of rows is accepted on input.
Mat mat_from(const json& j, const std::string& ctx);
json to_json(const Mat& M);
Vec vec_from(const json& j, const std::string& ctx);
json vec_json(const Vec& v);
std::vector<int> ints_from(const json& j, const std::string& ctx);

Graph graph_from(const json& j);
json to_json(const Graph& G);

// {"kind": "quadratic", "Q", "C"} | {"kind": "least_squares", "target", "mask"?} | {"kind": "linear", "C"}
Objective objective_from(const json& j, const std::string& ctx);
json objective_json(const Mat& Q, const Mat& C);

// {"kind": "ambient"|"affine"|"sphere"|"oblique"|"hyperbolic", "A": [...], "b": [...]}
ConstraintH constraint_from(const json& j, const std::string& ctx);
json to_json(const ConstraintH& H);

// {"dims": [...], "data": [flat, last index fastest]}
Tensor tensor_from(const json& j, const std::string& ctx);
json to_json(const Tensor& T);
// {"preset": "tucker"|"tt", "ranks": [...]} or {"nodes": [[modes, 0-based]...], "ranks": [...]}
DimensionTree tree_from(const json& j, const std::vector<int>& dims, const std::string& ctx);
json tree_json(const std::string& preset, const std::vector<int>& ranks);

LiftedPoint lifted_from(const json& j);
json to_json(const LiftedPoint& Y);

// {"rl", "rh"} builds the bases; explicit "Ut", "Ub", "UYt", "Vt", "Vb", "VYt" override.
Stratification stratification_from(const json* j, const GraphPoint& G, const std::string& ctx);
json to_json(const Stratification& S);
// Missing blocks default to zero.
MordukhovichParams mordukhovich_params_from(const json& j, const GraphPoint& G, const Stratification& S,
                                            const std::string& ctx);
json to_json(const MordukhovichParams& p);
FrechetParams frechet_params_from(const json& j, const std::string& ctx);
json to_json(const FrechetParams& p);
ThetaGenerator generator_from(const json& j, const std::string& ctx);
json to_json(const ThetaGenerator& g);
ThetaCandidate theta_from(const json& j, const std::string& ctx);

BilevelInstance bilevel_from(const json& j, const std::string& ctx);
json to_json(const BilevelInstance& inst);

json violations_json(const std::vector<ConeViolation>& v);

}  // namespace varigeo::cli
