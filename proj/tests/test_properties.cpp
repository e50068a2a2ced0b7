#include <doctest.h>

#include "memflow/properties.hpp"

using namespace memflow;

TEST_CASE("property suite passes with the acceptance thresholds") {
  const auto results = property_suite();
  CHECK(results.size() >= 10);
  for (const auto& r : results) {
    INFO(r.name << ": " << r.value << ' ' << r.relation << ' ' << r.threshold);
    CHECK(r.pass);
  }
}

TEST_CASE("upwind form matches its jump representation") {
  PropertyOptions opt;
  opt.samples = 20;
  for (int k : {0, 1}) {
    const UpwindCheck u = check_upwind_positivity(k, opt);
    CHECK(u.min_energy >= -1e-12);
    CHECK(u.max_identity_defect < 1e-10);
  }
}

TEST_CASE("coercivity constant is positive for every scheme and shrinks with the penalty") {
  const double strong = coercivity_constant(Scheme::DivConformingDG, 0, 20.0, 3);
  const double weak = coercivity_constant(Scheme::DivConformingDG, 0, 2.0, 3);
  CHECK(strong > 0.0);
  CHECK(weak < strong);
  CHECK(coercivity_constant(Scheme::CrouzeixRaviart, 0, 20.0, 3) > 0.0);
}

TEST_CASE("Jacobian blocks agree with central differences") {
  CHECK(jacobian_fd_defect({0, 20.0, 0, Scheme::DivConformingDG, -1}, 1) < 1e-6);
  CHECK(jacobian_fd_defect({1, 0.1, 1, Scheme::ConformingStabilized, 1}, 2) < 1e-6);
}
