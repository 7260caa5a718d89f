#include "citerate/types.hpp"

#include <algorithm>

#include "citerate/errors.hpp"

namespace citerate {

void Dataset::finalize() {
  for (std::size_t i = 0; i < papers.size(); ++i) {
    auto& rec = papers[i];
    rec.index = static_cast<int>(i);
    if (variant == Variant::Science) {
      auto it = std::find(group_names.begin(), group_names.end(), rec.field);
      if (it == group_names.end())
        throw data_error("dataset: unknown field label '" + rec.field + "' for paper '" +
                         rec.id + "'");
      rec.group_index = static_cast<int>(it - group_names.begin());
    } else if (rec.features.size() != group_names.size()) {
      throw data_error("dataset: feature vector length mismatch for paper '" + rec.id + "'");
    }
  }
}

}  // namespace citerate
