#pragma once

#include <span>
#include <string>
#include <vector>

#include "fitolab/functional.hpp"

namespace fitolab {

/// Evaluation guard for "inverse-bessel": inside this ball around -x0 the
/// functional refuses to evaluate (NumericError) instead of clamping.
/// Localization is the sanctioned way to keep experiments away from the pole.
inline constexpr double kSingularRadius = 1e-6;

struct CatalogEntryInfo {
    std::string id;
    std::size_t dim = 1;
    std::string formula;
    std::string params_doc;
    FunctionalClaims claims;
    bool has_oracles = false;
};

/// Ids of the built-in functionals, in catalog order.
std::vector<std::string> catalog_ids();

CatalogEntryInfo catalog_info(const std::string& id);

/// Build a catalog functional. Params are entry-specific (only
/// "inverse-bessel" takes any: the anchor x0, default (1, 0, 0)); unknown
/// ids and malformed params throw std::invalid_argument.
FunctionalSpec make_functional(const std::string& id, std::span<const double> params = {});

/// Same functional with a constant subtracted from every value. Derivative
/// oracles are unchanged; used to realize processes started at zero.
FunctionalSpec shifted(FunctionalSpec f, double offset);

}  // namespace fitolab
