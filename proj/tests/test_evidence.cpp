#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "evret/evidence.hpp"
#include "evret/rng.hpp"

using namespace evret;
using Catch::Matchers::WithinAbs;

TEST_CASE("digamma matches high-precision reference values") {
  struct Case {
    double x, psi;
  };
  const Case cases[] = {
      {0.001, -1000.57557193181030047147261447},
      {0.1, -10.423754940411076795168216219},
      {0.5, -1.963510026021423479440976333},
      {1.0, -0.577215664901532860606512090082},
      {2.0, 0.422784335098467139393487909918},
      {5.5, 1.6110931485817511237336268416},
      {10.5, 2.30300103429768637527259355085},
      {100.0, 4.60016185273808740019860558558},
      {1e6, 13.8155100579641907707746154031},
  };
  for (const auto& c : cases) CHECK_THAT(digamma(c.x), WithinAbs(c.psi, 1e-10));
}

TEST_CASE("digamma satisfies the recurrence psi(x+1) = psi(x) + 1/x") {
  for (double x = 1e-3; x < 1e6; x *= 3.7)
    CHECK_THAT(digamma(x + 1.0) - digamma(x) - 1.0 / x, WithinAbs(0.0, 1e-9));
}

TEST_CASE("digamma rejects the invalid domain") {
  CHECK_THROWS_AS(digamma(0.0), input_error);
  CHECK_THROWS_AS(digamma(-1.5), input_error);
  CHECK_THROWS_AS(digamma(std::nan("")), input_error);
}

TEST_CASE("evidence map: frozen values, bounds, monotonicity") {
  std::vector<double> s = {0.8, 0.2, 0.0};
  auto e = similarities_to_evidence(s, 0.1);
  CHECK_THAT(e[0], WithinAbs(2.71828121665454193076464021703, 1e-12));
  CHECK_THAT(e[1], WithinAbs(2.62223650125878140244388560425, 1e-12));
  CHECK(e[2] == 1.0);

  // tanh saturates to exactly +-1.0 in double precision, so the open
  // mathematical bounds close up at the representable endpoints
  auto extreme = similarities_to_evidence(std::vector<double>{1e9, -1e9}, 0.1);
  CHECK(extreme[0] <= std::exp(1.0));
  CHECK(extreme[0] > std::exp(1.0) - 1e-9);
  CHECK(extreme[1] >= std::exp(-1.0));
  CHECK(extreme[1] < std::exp(-1.0) + 1e-9);
  auto moderate = similarities_to_evidence(std::vector<double>{0.9, -0.9}, 0.1);
  CHECK(moderate[0] < std::exp(1.0));
  CHECK(moderate[1] > std::exp(-1.0));

  double prev = 0.0;
  for (double x : {-2.0, -0.1, 0.0, 0.05, 0.4, 3.0}) {
    double v = similarities_to_evidence(std::vector<double>{x}, 0.1)[0];
    CHECK(v > prev);
    prev = v;
  }

  CHECK_THROWS_AS(similarities_to_evidence(s, 0.0), config_error);
  CHECK_THROWS_AS(similarities_to_evidence(s, -1.0), config_error);
  CHECK_THROWS_AS(similarities_to_evidence(std::vector<double>{}, 0.1), input_error);
  CHECK_THROWS_AS(similarities_to_evidence(std::vector<double>{std::nan("")}, 0.1), input_error);
}

TEST_CASE("dirichlet construction validates parameters") {
  auto d = dirichlet_from_evidence(std::vector<double>{1.0, 3.0});
  CHECK(d.alpha == std::vector<double>{2.0, 4.0});
  CHECK(d.strength == 6.0);
  CHECK_THROWS_AS(dirichlet_from_evidence(std::vector<double>{-0.1}), input_error);
  CHECK_THROWS_AS(dirichlet_from_alpha({0.5, 2.0}), input_error);
  CHECK_THROWS_AS(dirichlet_from_alpha({}), input_error);
}

TEST_CASE("opinion: zero scores give the symmetric half-uncertain opinion") {
  auto st = evidence_to_opinion(similarities_to_evidence(std::vector<double>(4, 0.0), 0.1));
  CHECK(st.opinion.uncertainty == 0.5);
  for (double b : st.opinion.belief) CHECK(b == 0.125);
}

TEST_CASE("opinion normalization holds to 1e-12 on random rows") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t K = 2 + rng.below(63);
    std::vector<double> scores(K);
    for (auto& v : scores) v = rng.uniform(-1.0, 1.0);
    auto st = evidence_to_opinion(similarities_to_evidence(scores, 0.1));
    double total = st.opinion.uncertainty + neumaier_sum(st.opinion.belief);
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("more similarity never increases epistemic uncertainty") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(6);
    for (auto& v : scores) v = rng.uniform(-1.0, 1.0);
    auto before = evidence_to_opinion(similarities_to_evidence(scores, 0.1));
    scores[rng.below(6)] += rng.uniform(0.0, 0.5);
    auto after = evidence_to_opinion(similarities_to_evidence(scores, 0.1));
    CHECK(after.opinion.uncertainty <= before.opinion.uncertainty + 1e-15);
  }
}

TEST_CASE("label consistency clamps at zero") {
  std::vector<double> s = {0.3, -0.4, 0.9};
  CHECK(label_consistency(s, 2) == 0.9);
  CHECK(label_consistency(s, 1) == 0.0);
  CHECK_THROWS_AS(label_consistency(s, 3), input_error);
}

TEST_CASE("aleatoric dispersion: exact small cases via the recurrence") {
  CHECK_THAT(aleatoric_uncertainty(dirichlet_from_alpha({2.0, 2.0})),
             WithinAbs(7.0 / 12.0, 1e-12));
  CHECK_THAT(aleatoric_uncertainty(dirichlet_from_alpha({1.0, 1.0})), WithinAbs(0.5, 1e-12));
}

TEST_CASE("aleatoric dispersion stays inside [0, ln K]") {
  Rng rng(5150);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t K = 2 + rng.below(15);
    std::vector<double> alpha(K);
    for (auto& a : alpha) a = 1.0 + rng.uniform(0.0, 50.0);
    double xi = aleatoric_uncertainty(dirichlet_from_alpha(std::move(alpha)));
    CHECK(xi >= 0.0);
    CHECK(xi <= std::log(static_cast<double>(K)) + 1e-12);
  }
}

TEST_CASE("aleatoric dispersion is maximal for the symmetric Dirichlet") {
  for (std::size_t K : {2u, 3u, 5u}) {
    const double S = 1e7;
    std::vector<double> uniform(K, S / static_cast<double>(K));
    double xi_uniform = aleatoric_uncertainty(dirichlet_from_alpha(uniform));
    CHECK_THAT(xi_uniform, WithinAbs(std::log(static_cast<double>(K)), 1e-6));

    Rng rng(900 + K);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> w(K);
      double tot = 0.0;
      for (auto& v : w) {
        v = rng.uniform(0.05, 1.0);
        tot += v;
      }
      std::vector<double> alpha(K);
      for (std::size_t k = 0; k < K; ++k) alpha[k] = w[k] / tot * S;
      CHECK(aleatoric_uncertainty(dirichlet_from_alpha(std::move(alpha))) <=
            xi_uniform + 1e-12);
    }
  }
}

TEST_CASE("aleatoric dispersion matches the Monte-Carlo expected entropy") {
  std::mt19937_64 gen(4242);
  std::vector<double> alpha = {1.4, 3.0, 1.1, 6.5};
  auto d = dirichlet_from_alpha(alpha);
  double xi = aleatoric_uncertainty(d);

  const int draws = 200000;
  double sum = 0.0, sum_sq = 0.0;
  std::vector<std::gamma_distribution<double>> gammas;
  for (double a : alpha) gammas.emplace_back(a, 1.0);
  for (int t = 0; t < draws; ++t) {
    double g[4], tot = 0.0;
    for (int k = 0; k < 4; ++k) {
      g[k] = gammas[k](gen);
      tot += g[k];
    }
    double h = 0.0;
    for (double v : g) {
      double p = v / tot;
      if (p > 0.0) h -= p * std::log(p);
    }
    sum += h;
    sum_sq += h * h;
  }
  double mean = sum / draws;
  double var = (sum_sq - sum * sum / draws) / (draws - 1);
  double stderr_mc = std::sqrt(var / draws);
  CHECK(std::abs(mean - xi) <= 3.0 * stderr_mc);
}

TEST_CASE("low epistemic uncertainty does not certify the prediction") {
  // Concentrated evidence on a wrong candidate drives u below any floor while
  // the top belief stays wrong.
  for (std::size_t K = 2; K <= 10; ++K) {
    std::size_t t = 0, k = 1;
    double lambda = 10.0 * static_cast<double>(K);
    std::vector<double> evidence(K, 0.0);
    evidence[k] = lambda;
    auto st = evidence_to_opinion(evidence);
    CHECK(st.opinion.uncertainty < 0.1);
    std::size_t argmax =
        std::max_element(st.opinion.belief.begin(), st.opinion.belief.end()) -
        st.opinion.belief.begin();
    CHECK(argmax == k);
    CHECK(argmax != t);
  }

  double prev_u = 1.0;
  for (double lambda : {10.0, 100.0, 1000.0, 1e6}) {
    std::vector<double> evidence(4, 0.0);
    evidence[2] = lambda;
    auto st = evidence_to_opinion(evidence);
    CHECK(st.opinion.uncertainty < prev_u);
    prev_u = st.opinion.uncertainty;
    std::size_t argmax =
        std::max_element(st.opinion.belief.begin(), st.opinion.belief.end()) -
        st.opinion.belief.begin();
    CHECK(argmax == 2);
  }
  CHECK(prev_u < 1e-5);
}
