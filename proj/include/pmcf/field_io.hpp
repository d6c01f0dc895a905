#pragma once

#include <optional>
#include <string>

#include "pmcf/grid.hpp"

namespace pmcf {

// File layout: one text line "PMCF1 d n_0 .. n_{d-1} L_0 .. L_{d-1}\n" followed by
// the node values as little-endian float64, row-major with axis 0 fastest.
void save_field(const ScalarField& u, const std::string& path);

// Throws a format error on a bad magic, short data, or (when `expected` is
// given) a grid that differs from the expected one.
auto load_field(const std::string& path, const std::optional<TorusGrid>& expected = std::nullopt) -> ScalarField;

auto describe_grid(const TorusGrid& grid) -> std::string;

}  // namespace pmcf
