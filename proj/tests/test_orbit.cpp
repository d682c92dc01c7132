#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace fsofic;

namespace {

const FreeGroup kG(2);

Automorphism make(const char* a, const char* b) { return Automorphism(kG, {kG.parse(a), kG.parse(b)}); }

}  // namespace

TEST(Automorphism, InverseAndDisplacement) {
  const Automorphism nielsen = make("ab", "b");
  EXPECT_EQ(nielsen.inverse(kG.parse("a")), kG.parse("aB"));
  EXPECT_EQ(nielsen.displacement(), 2);
  EXPECT_EQ(make("b", "a").displacement(), 1);
  for (const auto& g : kG.ball(3).words) EXPECT_EQ(nielsen.inverse(nielsen(g)), g);
  EXPECT_THROW(make("aa", "b"), InputError);
  EXPECT_THROW(Automorphism(kG, {GroupWord{}, kG.parse("b")}), InputError);
}

TEST(Automorphism, ThetaAndMhoFixTheTable) {
  for (const auto& [name, theta] : support::named_automorphisms()) {
    const LocalBijection phi = theta.table(5);
    for (const auto& h : kG.ball(1).words) {
      const LocalBijection t = theta_action(h, phi);
      const LocalBijection u = upsilon_action(h, phi);
      EXPECT_EQ(t, theta.table(t.window())) << name;
      EXPECT_EQ(u, theta.table(u.window())) << name;
    }
  }
}

TEST(Encoding, AutomorphismGivesConstantPatterns) {
  const Automorphism theta = make("ab", "b");
  const OrbitAlphabet a2(kG, 2);
  const LocalBijection phi = theta.table(4);
  for (const auto& [g, s] : encode_E(phi, a2)) EXPECT_EQ(s, theta.symbol(a2));
  for (const auto& [g, s] : encode_F(phi, a2)) EXPECT_EQ(s, theta.symbol(a2));
  EXPECT_EQ(decode_E(encode_E(phi, a2), a2), phi);
}

TEST(Encoding, RoundTripOnSampledPullbacks) {
  const OrbitAlphabet a1(kG, 1);
  for (const auto& inst : support::sampled_instances(8, 17)) {
    for (Vertex v = 0; v < inst.sigma.size(); ++v) {
      const Pattern p = pullback_name(kG, inst.sigma, inst.x, v, 3);
      const LocalBijection phi = decode_E(p, a1);
      EXPECT_EQ(phi.window(), 4);
      EXPECT_EQ(encode_E(phi, a1), p);
      for (const auto& g : kG.ball(3).words) {
        EXPECT_EQ(phi(inverse_eval(phi, g)), g);
        EXPECT_EQ(phi.preimage(g), inverse_eval(phi, g));
      }
    }
  }
}

TEST(Encoding, DecodeRejectsCollapsingPatterns) {
  const OrbitAlphabet a1(kG, 1);
  Pattern p;
  const Symbol collapse = a1.encode({GroupWord{}, GroupWord{}, GroupWord{}, GroupWord{}});
  for (const auto& g : kG.ball(1).words) p.emplace(g, collapse);
  EXPECT_THROW(decode_E(p, a1), VerificationError);
  p.erase(kG.parse("a"));
  EXPECT_THROW(decode_E(p, a1), InputError);
}

TEST(LocalBijection, ChecksDisplacementAndInjectivity) {
  const auto shifted = [](const GroupWord& g) { return g.is_identity() ? g : mul(kG.parse("ab"), g); };
  EXPECT_THROW(LocalBijection::from_function(kG, 2, 1, shifted), InputError);
  EXPECT_THROW(LocalBijection(kG, 1, 1, std::vector<GroupWord>(5, GroupWord{})), InputError);
  const LocalBijection id = LocalBijection::identity(kG, 3);
  EXPECT_EQ(truncated_distance(id, id), 0.0);
  EXPECT_GT(truncated_distance(id, make("b", "a").table(3)), 0.0);
  EXPECT_THROW(id(kG.parse("abab")), WindowError);
  EXPECT_EQ(restrict(id, 1), LocalBijection::identity(kG, 1));
}

TEST(Tau, IdentityConfigurationGivesSigma) {
  const OrbitAlphabet a1(kG, 1);
  const FiniteAction sigma = sample_action(9, 2, 3);
  const Labeling x(9, a1.identity_symbol());
  EXPECT_EQ(tau_construct(sigma, x, a1), sigma);
}

TEST(Tau, AutomorphismConfigurationsComposeWithTheInverse) {
  // tau(s) = sigma(theta^-1(s)); for the swap tau(a) = sigma(b).
  const FiniteAction sigma = sample_action(8, 2, 4);
  for (const auto& [name, theta] : support::named_automorphisms()) {
    const OrbitAlphabet alphabet(kG, theta.displacement());
    const FiniteAction tau = tau_construct(sigma, theta.constant_configuration(alphabet, 8), alphabet);
    for (int i = 0; i < 2; ++i) {
      for (Vertex v = 0; v < 8; ++v) EXPECT_EQ(tau.act(support::gen(i), v), sigma.act(theta.inverse(support::gen(i)), v)) << name;
    }
  }
  const Automorphism swap = make("b", "a");
  const OrbitAlphabet a1(kG, 1);
  const FiniteAction tau = tau_construct(sigma, swap.constant_configuration(a1, 8), a1);
  EXPECT_EQ(tau.generator(0), sigma.generator(1));
  EXPECT_EQ(tau.generator(1), sigma.generator(0));
}

TEST(Tau, ReconstructionAndLabelPassThrough) {
  const OrbitAlphabet a1(kG, 1);
  Engine rng(5);
  for (const auto& inst : support::sampled_instances(6, 23)) {
    const Labeling y = support::random_labels(rng, inst.sigma.size(), 4);
    const Rearranged r = upsilon(inst.sigma, inst.x, y, a1);
    EXPECT_EQ(r.x, inst.x);
    EXPECT_EQ(r.y, y);
    EXPECT_EQ(reconstruct_sigma(r.tau, r.x, a1), inst.sigma);
  }
}

TEST(Tau, RejectsConfigurationsOutsideZRho) {
  const OrbitAlphabet a1(kG, 1);
  const FiniteAction sigma = sample_action(5, 2, 6);
  Labeling x(5, a1.identity_symbol());
  x[2] = a1.encode({kG.parse("a"), kG.parse("B"), kG.parse("b"), kG.parse("B")});
  EXPECT_THROW(tau_construct(sigma, x, a1), VerificationError);
}
