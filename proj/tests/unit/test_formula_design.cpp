// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include "dirreg/design.hpp"
#include "dirreg/formula.hpp"

using Catch::Approx;

TEST_CASE("formula with precision bar", "[formula]") {
  const auto spec = dirreg::parse_formula("Smp ~ Disease | 1");
  REQUIRE(spec.response == "Smp");
  REQUIRE(spec.mean_terms == std::vector<std::string>{"Disease"});
  REQUIRE(spec.constant_precision());
}

TEST_CASE("intercept-only formula", "[formula]") {
  const auto spec = dirreg::parse_formula("Y ~ 1");
  REQUIRE(spec.response == "Y");
  REQUIRE(spec.mean_terms.empty());
  REQUIRE(spec.constant_precision());
}

TEST_CASE("two-sided formula", "[formula]") {
  const auto spec = dirreg::parse_formula("Y ~ a + b | a");
  REQUIRE(spec.mean_terms == std::vector<std::string>{"a", "b"});
  REQUIRE(spec.precision_terms == std::vector<std::string>{"a"});
  REQUIRE_FALSE(spec.constant_precision());
}

TEST_CASE("whitespace insensitivity and dotted names", "[formula]") {
  const auto a = dirreg::parse_formula("Smp~Dis.|1");
  const auto b = dirreg::parse_formula("  Smp  ~  Dis.  |  1  ");
  REQUIRE(a.response == b.response);
  REQUIRE(a.mean_terms == b.mean_terms);
  REQUIRE(a.mean_terms == std::vector<std::string>{"Dis."});
}

TEST_CASE("formula syntax errors carry a position", "[formula]") {
  for (const std::string bad : {"Y Disease", "~ x", "Y ~", "Y ~ x +", "Y ~ x | ", "Y ~ x y"}) {
    INFO("formula: " << bad);
    try {
      dirreg::parse_formula(bad);
      FAIL("expected a SyntaxError");
    } catch (const dirreg::Error& e) {
      REQUIRE(e.code() == "SyntaxError");
      REQUIRE(std::string(e.what()).find("position") != std::string::npos);
    }
  }
  REQUIRE_THROWS_AS(dirreg::parse_formula("Y ~ a + a"), dirreg::Error);
}

namespace {

dirreg::DataTable two_group_table(int n) {
  dirreg::DataTable t;
  dirreg::Column disease;
  disease.name = "Disease";
  disease.numeric = false;
  dirreg::Column x;
  x.name = "x";
  x.numeric = true;
  for (int i = 0; i < n; ++i) {
    disease.str.push_back(i < n / 2 ? "A" : "B");
    disease.missing.push_back(false);
    x.num.push_back(0.1 * i);
    x.missing.push_back(false);
  }
  t.columns = {disease, x};
  t.n_rows = n;
  return t;
}

}  // namespace

TEST_CASE("dummy coding against the first sorted level", "[design]") {
  const auto data = two_group_table(30);
  const auto design = dirreg::build_design_matrix({"Disease"}, data);
  REQUIRE(design.n() == 30);
  REQUIRE(design.p() == 2);
  REQUIRE(design.column_names[0] == "(Intercept)");
  REQUIRE(design.column_names[1] == "DiseaseB");
  for (int i = 0; i < 30; ++i) {
    REQUIRE(design.values(i, 0) == 1.0);
    REQUIRE(design.values(i, 1) == (i < 15 ? 0.0 : 1.0));
  }
  // dummy plus the implicit reference indicator covers every row once
  Eigen::VectorXd reference = Eigen::VectorXd::Ones(30) - design.values.col(1);
  REQUIRE(((design.values.col(1) + reference).array() == 1.0).all());
}

TEST_CASE("intercept-only and numeric passthrough designs", "[design]") {
  const auto data = two_group_table(5);
  const auto ones = dirreg::build_design_matrix({}, data);
  REQUIRE(ones.p() == 1);
  REQUIRE(ones.values.col(0).sum() == 5.0);

  const auto with_x = dirreg::build_design_matrix({"x"}, data);
  REQUIRE(with_x.p() == 2);
  for (int i = 0; i < 5; ++i) REQUIRE(with_x.values(i, 1) == Approx(0.1 * i));
}

TEST_CASE("design matrix error paths", "[design]") {
  auto data = two_group_table(6);
  REQUIRE_THROWS_AS(dirreg::build_design_matrix({"nope"}, data), dirreg::Error);

  for (auto& s : data.columns[0].str) s = "A";  // collapse to a single level
  try {
    dirreg::build_design_matrix({"Disease"}, data);
    FAIL("expected SingleLevelFactor");
  } catch (const dirreg::Error& e) {
    REQUIRE(e.code() == "SingleLevelFactor");
  }

  auto with_missing = two_group_table(6);
  with_missing.columns[1].missing[2] = true;
  try {
    dirreg::build_design_matrix({"x"}, with_missing);
    FAIL("expected MissingValue");
  } catch (const dirreg::Error& e) {
    REQUIRE(e.code() == "MissingValue");
  }
}
