#pragma once

#include <iosfwd>
#include <string>

#include "choicenet/core/types.hpp"

namespace choicenet {

// Transaction CSV: header `chosen,assortment[,cf_0..]`, the assortment being a
// '0'/'1' string over the universe. The universe size is taken from the first
// row; `has_no_purchase` says whether its last index is the no-purchase option.
ChoiceDataset read_transactions(std::istream& in, bool has_no_purchase = true);
ChoiceDataset read_transactions_file(const std::string& path, bool has_no_purchase = true);
void write_transactions(std::ostream& out, const ChoiceDataset& data);

// Product-feature CSV: `product,pf_0..pf_{d-1}`, one row per product.
Mat read_product_features(std::istream& in, int n);
void write_product_features(std::ostream& out, const Mat& features);

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace choicenet
