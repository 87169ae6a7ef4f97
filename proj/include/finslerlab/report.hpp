#pragma once

#include <string>

#include <json.hpp>

#include "finslerlab/catalog.hpp"
#include "finslerlab/classify.hpp"
#include "finslerlab/scfield.hpp"

namespace finslerlab {

using Json = nlohmann::json;

/// Indented JSON with sorted keys, doubles printed with 17 significant digits and
/// non-finite numbers written as null.
std::string dump_json(const Json& value);

/// Flattened "path: value" listing of a JSON document.
std::string dump_text(const Json& value);

/// Nested arrays in index order; a rank-0 tensor becomes a number.
Json to_json(const Tensor& t);
Json to_json(const std::vector<double>& v);

Json to_json(const ClassificationReport& r);
Json to_json(const SCFieldReport& r);
Json to_json(const ConditionReport& r);
Json to_json(const InvariantsReport& r);
Json to_json(const VerificationReport& r);
Json to_json(const CatalogEntry& e);

}  // namespace finslerlab
