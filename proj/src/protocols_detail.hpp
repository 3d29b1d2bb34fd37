#pragma once

#include <vector>

#include "qmap/protocols.hpp"

namespace qmap::detail {

Labels join(const Labels& a, const Labels& b);
// Distinct labels, all present in the layout.
void check_labels(const SystemLayout& layout, const Labels& labels, const char* what);
void check_families(const DensityMatrix& rho, const Labels& senders, std::size_t n,
                    const std::vector<UnitaryFamily>& families);
std::vector<Matrix> blocks_of(const UnitaryFamily& family);
// Re Tr[a b]
double trace_product(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& m);

}  // namespace qmap::detail
