#include "semtrans/exactness.hpp"

#include <gtest/gtest.h>

#include "semtrans/demos.hpp"
#include "semtrans/errors.hpp"
#include "test_support.hpp"

namespace semtrans {
namespace {

Intervention make(std::map<std::string, double> targets) {
  Intervention i;
  i.targets = std::move(targets);
  return i;
}

CheckConfig fast_config(std::uint64_t seed) {
  CheckConfig config;
  config.samples = 12000;
  config.compare.max_points_per_side = 512;
  config.with_seed(seed);
  return config;
}

TEST(CheckExact, Wrong1FailsOnlyOrderPreservation) {
  const auto s = demos::wrong1();
  const auto report =
      check_exact(s.source, s.target, s.tau, s.omega, fast_config(3));
  EXPECT_EQ(report.comparison, "closed-form");
  EXPECT_TRUE(report.all_probe_equalities_hold());
  EXPECT_TRUE(report.omega.surjective);
  EXPECT_FALSE(report.omega.order_preserving);
  EXPECT_FALSE(report.exact);
  ASSERT_TRUE(report.omega.counterexample.has_value());
  const auto& ce = *report.omega.counterexample;
  EXPECT_EQ(ce[0], Intervention::null());
  EXPECT_EQ(ce[1], make({{"X2", 0.0}}));
  // omega(null) = do(Y1=0) is recorded for diagnostics.
  EXPECT_EQ(report.omega.omega_of_null, make({{"Y1", 0.0}}));
}

TEST(CheckExact, Wrong2FailsOnTheUpperPair) {
  const auto s = demos::wrong2();
  const auto report =
      check_exact(s.source, s.target, s.tau, s.omega, fast_config(4));
  EXPECT_TRUE(report.all_probe_equalities_hold());
  EXPECT_TRUE(report.omega.surjective);
  EXPECT_FALSE(report.omega.order_preserving);
  ASSERT_TRUE(report.omega.counterexample.has_value());
  const auto& ce = *report.omega.counterexample;
  EXPECT_EQ(ce[0], make({{"X2", 0.0}}));
  EXPECT_EQ(ce[1], make({{"X1", 0.0}, {"X2", 0.0}}));
  EXPECT_EQ(report.omega.omega_of_null, Intervention::null());
}

TEST(CheckOmega, OrderFailuresAreMonotoneInProbes) {
  const auto s = demos::wrong2();
  const ProbeSet full = probe_catalog(s.source.catalog, {3, 5, 9});
  const auto full_check =
      check_omega(s.omega, s.source.catalog, s.target.catalog, full);
  EXPECT_FALSE(full_check.order_preserving);

  // Removing the probes of the failing pair flips the verdict back; adding
  // them again can only break it.
  ProbeSet reduced = full;
  reduced.probes.erase(
      std::remove_if(reduced.probes.begin(), reduced.probes.end(),
                     [](const Probe& p) {
                       return p.intervention ==
                              Intervention{{{"X1", 0.0}, {"X2", 0.0}}};
                     }),
      reduced.probes.end());
  reduced.comparable_pairs.clear();
  for (std::size_t a = 0; a < reduced.probes.size(); ++a) {
    for (std::size_t b = 0; b < reduced.probes.size(); ++b) {
      if (a != b &&
          !(reduced.probes[a].intervention == reduced.probes[b].intervention) &&
          leq(reduced.probes[a].intervention, reduced.probes[b].intervention))
        reduced.comparable_pairs.emplace_back(a, b);
    }
  }
  const auto reduced_check =
      check_omega(s.omega, s.source.catalog, s.target.catalog, reduced);
  EXPECT_TRUE(reduced_check.order_preserving);
}

TEST(CheckOmega, SurjectivityFailureNamesFamily) {
  const auto s = demos::wrong2();
  // Rewire the x2-0 rule onto y1-0, leaving y1-1 uncovered.
  InterventionMap omega = s.omega;
  for (auto& rule : omega.rules) {
    if (rule.from_family == "x2-0") rule.to_family = "y1-0";
  }
  const ProbeSet probes = probe_catalog(s.source.catalog, {3, 5, 9});
  const auto check =
      check_omega(omega, s.source.catalog, s.target.catalog, probes);
  EXPECT_FALSE(check.surjective);
  EXPECT_EQ(check.uncovered_family, "y1-1");
}

TEST(CheckOmega, RuleOutputOutsideTargetDomainIsStructuralError) {
  const auto s = demos::wrong2();
  InterventionMap omega = s.omega;
  // Send do(X2=0) to do(Y1=7), which lies in no declared target family.
  for (auto& rule : omega.rules) {
    if (rule.from_family == "x2-0") rule.offset(0) = 7.0;
  }
  const ProbeSet probes = probe_catalog(s.source.catalog, {3, 5, 9});
  EXPECT_THROW(
      check_omega(omega, s.source.catalog, s.target.catalog, probes),
      ValidationError);
}

TEST(CheckOmega, ContinuousFamiliesUseAffineOntoArgument) {
  const Sem sem = demos::micro_macro();
  const auto triple = aggregate_micro_macro(sem);
  const ProbeSet probes = probe_catalog(sem.catalog, {2, 2, 5});
  const auto check = check_omega(triple.omega, sem.catalog,
                                 triple.model.catalog, probes);
  EXPECT_TRUE(check.surjective);
  EXPECT_TRUE(check.order_preserving);
  EXPECT_EQ(check.surjectivity_mode, "affine-interval");
}

TEST(CheckDiagram, ReflexivePairCommutes) {
  const auto s = demos::wrong1();
  const auto i = make({{"X2", 0.0}});
  const auto check =
      check_diagram(s.source, s.target, s.tau, s.omega, i, i, fast_config(5));
  EXPECT_TRUE(check.commutes);
}

TEST(CheckDiagram, Wrong2RightSquareFails) {
  const auto s = demos::wrong2();
  const auto check = check_diagram(s.source, s.target, s.tau, s.omega,
                                   make({{"X2", 0.0}}),
                                   make({{"X1", 0.0}, {"X2", 0.0}}),
                                   fast_config(6));
  EXPECT_FALSE(check.image_ordered);
  EXPECT_TRUE(check.left_equality.equal);
  EXPECT_TRUE(check.right_equality.equal);
  EXPECT_FALSE(check.commutes);
}

TEST(CheckDiagram, RequiresComparablePair) {
  const auto s = demos::wrong1();
  EXPECT_THROW(check_diagram(s.source, s.target, s.tau, s.omega,
                             make({{"X1", 0.0}}), make({{"X2", 0.0}}),
                             fast_config(7)),
               PreconditionError);
}

TEST(Permutation, SwapIsExact) {
  const Sem sem = demos::lightbulbs();
  const auto triple = permutation_transformation(
      sem, {{"B1", "B2"}, {"B2", "B1"}, {"L", "L"}});
  const auto report = check_exact(sem, triple.model, triple.tau, triple.omega,
                                  fast_config(8));
  EXPECT_TRUE(report.exact);
}

TEST(Permutation, IdentityReturnsSameModel) {
  const Sem sem = demos::wrong1().source;
  std::map<std::string, std::string> id;
  for (const auto& v : sem.variables) id[v] = v;
  const auto triple = permutation_transformation(sem, id);
  EXPECT_EQ(triple.model, sem);
  EXPECT_EQ(triple.tau.kind(), Transformation::Kind::kProjection);
  EXPECT_EQ(triple.tau.projected_coordinates(), sem.variables);
}

TEST(Permutation, InverseComposesToIdentity) {
  const Sem sem = demos::wrong1().source;
  const std::map<std::string, std::string> pi = {
      {"X1", "A"}, {"X2", "B"}, {"X3", "C"}};
  const std::map<std::string, std::string> inverse = {
      {"A", "X1"}, {"B", "X2"}, {"C", "X3"}};
  const auto forward = permutation_transformation(sem, pi);
  const auto backward = permutation_transformation(forward.model, inverse);
  EXPECT_EQ(backward.model, sem);
  const auto [tau, omega] = compose_transformations(
      forward.tau, forward.omega, backward.tau, backward.omega,
      forward.model.catalog, backward.model.catalog);
  // The composite tau is the identity map on the original coordinates.
  EXPECT_EQ(tau.target_labels(), sem.variables);
  Eigen::VectorXd x(3);
  x << 1.5, -2.0, 0.25;
  EXPECT_EQ(tau.apply(x), x);
  const auto report =
      check_exact(sem, sem, tau, omega, fast_config(9));
  EXPECT_TRUE(report.exact);
}

TEST(Permutation, RejectsNonBijections) {
  const Sem sem = demos::wrong1().source;
  EXPECT_THROW(permutation_transformation(
                   sem, {{"X1", "A"}, {"X2", "A"}, {"X3", "C"}}),
               ValidationError);
  EXPECT_THROW(permutation_transformation(sem, {{"X1", "A"}}),
               ValidationError);
}

TEST(Compose, AffineComposition) {
  const Transformation inner = Transformation::affine(
      {"X1", "X2"}, {"M"}, (Eigen::MatrixXd(1, 2) << 1, 1).finished(),
      (Eigen::VectorXd(1) << 0.5).finished());
  const Transformation outer = Transformation::affine(
      {"M"}, {"O"}, (Eigen::MatrixXd(1, 1) << 2).finished(),
      (Eigen::VectorXd(1) << -1).finished());
  const Transformation composite = compose(outer, inner);
  const auto view = composite.affine_view();
  ASSERT_TRUE(view.has_value());
  EXPECT_DOUBLE_EQ(view->first(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(view->first(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(view->second(0), 0.0);  // 2*0.5 - 1
}

TEST(Compose, IdentityIsNeutral) {
  const auto s = demos::wrong1();
  const Transformation id_x = Transformation::identity(s.source.variables);
  const Transformation composed = compose(s.tau, id_x);
  Eigen::VectorXd x(3);
  x << 0.5, 1.5, -2.0;
  EXPECT_EQ(composed.apply(x), s.tau.apply(x));
}

TEST(Compose, ExpressionSubstitution) {
  const Transformation inner = Transformation::expressions(
      {"X1", "X2"}, {"S", "D"},
      {Expr::sum({Expr::var("X1"), Expr::var("X2")}),
       Expr::sum({Expr::var("X1"), Expr::neg(Expr::var("X2"))})});
  const Transformation outer = Transformation::expressions(
      {"S", "D"}, {"P"}, {Expr::product({Expr::var("S"), Expr::var("D")})});
  const Transformation composite = compose(outer, inner);
  Eigen::VectorXd x(2);
  x << 3.0, 2.0;
  EXPECT_DOUBLE_EQ(composite.apply(x)(0), 5.0);  // (3+2)*(3-2)
}

TEST(CheckExact, ValidatesArities) {
  const auto s = demos::wrong1();
  const Transformation bad = Transformation::projection(
      {"X1", "X2", "X3"}, {"X1"}, {"Y1"});
  EXPECT_THROW(
      check_exact(s.source, s.target, bad, s.omega, fast_config(10)),
      ValidationError);
}

}  // namespace
}  // namespace semtrans
