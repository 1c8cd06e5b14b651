// Standalone randomized property suite (fixed seed).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "properties.hpp"

using namespace detlab::testing;

namespace {
void require(const PropertyResult& r) {
  INFO(r.name << ": worst measured/allowed = " << r.worst_ratio << " over " << r.samples << " samples");
  CHECK(r.passed());
}
}  // namespace

TEST_CASE("cofactor identity") { require(prop_cofactor_identity()); }
TEST_CASE("characteristic polynomial matches elementary symmetric functions") { require(prop_char_poly()); }
TEST_CASE("determinant difference bound with c = n") { require(prop_determinant_difference()); }
TEST_CASE("determinant is monotone on the PSD cone") { require(prop_determinant_monotone()); }
TEST_CASE("elementary symmetric functions are homogeneous") { require(prop_homogeneity()); }
TEST_CASE("spectral integration by parts") { require(prop_integration_by_parts()); }
TEST_CASE("null Lagrangian at n = 2") { require(prop_null_lagrangian()); }
TEST_CASE("mollification contracts L^p") { require(prop_mollify_contraction()); }
