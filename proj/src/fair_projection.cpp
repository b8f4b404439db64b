#include "fairmix/fair_projection.hpp"

namespace fairmix {

Matrix build_sensitive_matrix(const EncodedDataset& dataset, const std::vector<std::string>& attributes,
                              bool include_intercept) {
  if (attributes.empty()) throw ConfigError("no sensitive attributes selected");
  Index width = 0;
  for (const auto& name : attributes) width += dataset.levels.sensitive_block(name).width;
  Matrix s(dataset.n(), width);
  Index col = 0;
  for (const auto& name : attributes) {
    const SensitiveBlock& block = dataset.levels.sensitive_block(name);
    s.middleCols(col, block.width) = dataset.s.middleCols(block.offset, block.width);
    col += block.width;
  }
  Matrix out = augment_sensitive(s, include_intercept);
  ColumnSpace<double> check(out);  // throws on rank deficiency
  return out;
}

std::vector<std::string> sensitive_column_names(const LevelMap& levels, const std::vector<std::string>& attributes,
                                                bool include_intercept) {
  std::vector<std::string> names;
  for (const auto& name : attributes) {
    for (auto& c : levels.sensitive_block(name).column_names()) names.push_back(std::move(c));
  }
  if (include_intercept) names.emplace_back("intercept");
  return names;
}

}  // namespace fairmix
