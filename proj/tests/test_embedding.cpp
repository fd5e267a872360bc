#include <gtest/gtest.h>

#include <cmath>

#include "declab/embedding.hpp"
#include "declab/instances.hpp"

using namespace declab;

TEST(Embedding, IdentitiesHoldOnGeneratedFamilies) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BilinearEmbedding occ(EmbeddingKind::low_occupancy, low_occupancy_family(seed), 2);
    EXPECT_LE(occ.identity_residual(), 1e-9);
    const BilinearEmbedding rank(EmbeddingKind::low_rank, low_rank_family(seed), 2);
    EXPECT_LE(rank.identity_residual(), 1e-9);
  }
}

TEST(Embedding, TrueFunctionHasZeroResidualAndDivergence) {
  const HybridFamily fam = alg3_toy_family();
  const BilinearEmbedding emb(EmbeddingKind::low_occupancy, fam, 2);
  for (std::size_t phi = 0; phi < emb.num_phi(); ++phi) {
    const HybridFunction& f = emb.functions()[phi];
    const Transition& P = fam.transitions[f.transition];
    for (const Reward& R : fam.rewards) {
      for (double r : emb.residual(phi, P, R)) EXPECT_NEAR(r, 0.0, 1e-12);
      for (const StagePolicy& pi : fam.policies) {
        EXPECT_EQ(bilinear_divergence(emb, pi, phi, P, R), 0.0);
      }
    }
  }
}

TEST(Embedding, WrongTransitionIsDetected) {
  const HybridFamily fam = alg3_toy_family();
  const BilinearEmbedding emb(EmbeddingKind::low_occupancy, fam, 2);
  double largest = 0.0;
  for (std::size_t phi = 0; phi < emb.num_phi(); ++phi) {
    if (emb.functions()[phi].transition == 0) continue;
    for (const Reward& R : fam.rewards) {
      for (const StagePolicy& pi : fam.policies) {
        largest = std::max(largest, bilinear_divergence(emb, pi, phi, fam.transitions[0], R));
      }
    }
  }
  EXPECT_GT(largest, 1e-3);
}

TEST(Embedding, PredictedValueIsPolicyValue) {
  const HybridFamily fam = low_occupancy_family(2);
  const BilinearEmbedding emb(EmbeddingKind::low_occupancy, fam, 2);
  for (std::size_t phi = 0; phi < emb.num_phi(); ++phi) {
    const HybridFunction& f = emb.functions()[phi];
    for (const Reward& R : fam.rewards) {
      EXPECT_NEAR(emb.predicted_value(phi, R),
                  dp_eval(fam.transitions[f.transition], R, fam.policies[f.policy]).value, 1e-12);
    }
  }
}

TEST(Embedding, DivergenceIsSquaredExpectedLoss) {
  const HybridFamily fam = low_occupancy_family(3);
  const BilinearEmbedding emb(EmbeddingKind::low_occupancy, fam, 2);
  const Transition& P = fam.transitions[1];
  const Reward& R = fam.rewards[0];
  const StagePolicy& pi = fam.policies[2];
  const std::size_t S = P.S, A = P.A;
  for (std::size_t phi = 0; phi < emb.num_phi(); ++phi) {
    const Vec d = occupancy(P, pi);
    const Vec el = emb.expected_loss(phi, P, R);
    double expected = 0.0;
    for (std::size_t h = 0; h < P.H; ++h) {
      double m = 0.0;
      for (std::size_t i = 0; i < S * A; ++i) m += d[h * S * A + i] * el[h * S * A + i];
      expected += m * m;
    }
    EXPECT_NEAR(bilinear_divergence(emb, pi, phi, P, R), expected, 1e-12);
  }
}
