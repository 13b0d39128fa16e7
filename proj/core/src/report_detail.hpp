#pragma once

#include <cstddef>

#include "talp/scaling.hpp"

namespace talp::detail {

bool is_openmp_row(std::size_t row);
bool is_scalability_row(std::size_t row);
double table_cell(const TableColumn& column, std::size_t row);

}  // namespace talp::detail
