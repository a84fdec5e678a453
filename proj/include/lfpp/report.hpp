#pragma once

#include <filesystem>

#include <json.hpp>

#include "lfpp/bounds.hpp"
#include "lfpp/exponent.hpp"

namespace lfpp {

using Json = nlohmann::json;

Json to_json(const ExponentEstimate& e, bool include_bootstrap = false);
Json to_json(const DerivativeEstimate& d);
Json to_json(const InequalityReport& r);
Json to_json(const PairCheck& p);
Json to_json(const LipschitzReport& r);
Json to_json(const MonotoneReport& r);
Json to_json(const XiMonotoneReport& r);
Json to_json(const BracketReport& r);
Json to_json(const QuantileRobustnessReport& r);
Json to_json(const ThickPointReport& r);
Json to_json(const BoundReport& r);
Json to_json(const HighDimBound& b);
Json to_json(const DimensionSolution& s);
Json to_json(const DGammaDerivativeReport& r);
Json to_json(const JobFailure& f);

/// Pretty-printed with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& value);

/// File-name friendly rendering of a parameter value, e.g. 0.25 -> "0.25".
std::string value_label(double value);

}  // namespace lfpp
