// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_DESIGN_HPP
#define DIRREG_DESIGN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dirreg/data.hpp"
#include "dirreg/errors.hpp"

namespace dirreg {

// Numeric design matrix with an explicit intercept column.  Categorical
// covariates are dummy-coded against their first level in sorted order, so a
// factor with L observed levels contributes L-1 columns.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  // factor name -> observed levels (sorted; first one is the reference)
  std::map<std::string, std::vector<std::string>> encodings;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
};

inline DesignMatrix build_design_matrix(const std::vector<std::string>& terms,
                                        const DataTable& data) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.n_rows);

  std::vector<std::string> names{"(Intercept)"};
  std::vector<Eigen::VectorXd> cols{Eigen::VectorXd::Ones(n)};
  std::map<std::string, std::vector<std::string>> encodings;

  for (const auto& term : terms) {
    const Column& col = data.at(term);
    for (std::size_t i = 0; i < col.size(); ++i)
      require(!col.missing[i], "MissingValue",
              "missing value in column '" + term + "' at row " + std::to_string(i + 1));
    if (col.numeric) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = col.num[static_cast<std::size_t>(i)];
      names.push_back(term);
      cols.push_back(std::move(v));
      continue;
    }
    std::set<std::string> level_set(col.str.begin(), col.str.end());
    std::vector<std::string> levels(level_set.begin(), level_set.end());
    require(levels.size() >= 2, "SingleLevelFactor",
            "factor '" + term + "' has a single observed level");
    encodings[term] = levels;
    for (std::size_t l = 1; l < levels.size(); ++l) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i)
        v[i] = (col.str[static_cast<std::size_t>(i)] == levels[l]) ? 1.0 : 0.0;
      names.push_back(term + levels[l]);
      cols.push_back(std::move(v));
    }
  }

  DesignMatrix design;
  design.values.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    design.values.col(static_cast<Eigen::Index>(j)) = cols[j];
  design.column_names = std::move(names);
  design.encodings = std::move(encodings);
  return design;
}

}  // namespace dirreg

#endif  // DIRREG_DESIGN_HPP
