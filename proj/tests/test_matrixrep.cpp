#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nvmdp/dp.hpp"
#include "nvmdp/envs.hpp"
#include "nvmdp/matrixrep.hpp"

using namespace nvmdp;

namespace {

TimePolicy random_policy(Rng& rng, int horizon, int S, int A) {
  std::vector<double> p(static_cast<size_t>(horizon + 1) * S * A);
  for (int t = 0; t <= horizon; ++t) {
    for (int s = 0; s < S; ++s) {
      double sum = 0.0;
      for (int a = 0; a < A; ++a) {
        double w = 0.05 + rng.uniform01();
        p[(static_cast<size_t>(t) * S + s) * A + a] = w;
        sum += w;
      }
      for (int a = 0; a < A; ++a) p[(static_cast<size_t>(t) * S + s) * A + a] /= sum;
    }
  }
  return TimePolicy(horizon, S, A, std::move(p));
}

TabularNvmdp scalar_model(double gamma, double reward, int horizon) {
  NvmdpDef def;
  def.num_states = 1;
  def.num_actions = 1;
  def.horizon = horizon;
  def.reward_bound = std::abs(reward);
  def.transition = [](int, int, int) { return std::vector<double>{1.0}; };
  def.mean_reward = [reward](int, int, int, int) { return reward; };
  def.discount = [gamma](int, int, int, int) { return gamma; };
  def.start_states = {1.0};
  return TabularNvmdp(def);
}

}  // namespace

TEST_CASE("scalar bundle") {
  TabularNvmdp m = scalar_model(0.5, -1.0, 3);
  TimePolicy pi = TimePolicy::uniform(3, 1, 1);
  MatrixBundle b = build_bundle(m, pi, 0);

  CHECK_EQ(b.P(0, 0), 1.0);
  CHECK_EQ(b.Pi(0, 0), 1.0);
  CHECK_EQ(b.U(0, 0), 1.0);
  CHECK_EQ(b.W(0, 0), 0.5);
  CHECK_EQ(b.M(0, 0), 0.5);
  CHECK_EQ(b.J(0, 0), 0.5);
  CHECK_EQ(b.K(0, 0), 0.5);
  CHECK_EQ(b.L(0, 0), 0.5);
  CHECK_EQ(b.r(0), -1.0);

  // last epoch: the embedding has already zeroed the outgoing discount
  MatrixBundle last = build_bundle(m, pi, 2);
  CHECK_EQ(last.J(0, 0), 0.0);
  CHECK_EQ(last.K(0, 0), 0.0);
  CHECK_EQ(last.r(0), -1.0);
}

TEST_CASE("bundle pieces rebuild from their definitions") {
  Rng rng(1001);
  for (int rep = 0; rep < 10; ++rep) {
    int S = 2 + rng.uniform_int(3);
    int A = 2 + rng.uniform_int(2);
    int H = 3 + rng.uniform_int(3);
    TabularNvmdp m = random_nvmdp(rng, S, A, H, 1.1);
    TimePolicy pi = random_policy(rng, H, S, A);
    int t = rng.uniform_int(H);
    MatrixBundle b = build_bundle(m, pi, t);

    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        Eigen::Index row = static_cast<Eigen::Index>(s) * A + a;
        for (int s2 = 0; s2 < S; ++s2) {
          CHECK_EQ(b.P(row, s2), m.transition(t, s, a, s2));
          CHECK_EQ(b.W(row, s2), m.discount(t + 1, s, a, s2));
          // the discounted kernel is the entrywise product
          CHECK_EQ(b.J(row, s2),
                   m.discount(t + 1, s, a, s2) * m.transition(t, s, a, s2));
          for (int a2 = 0; a2 < A; ++a2)
            CHECK_EQ(b.M(row, static_cast<Eigen::Index>(s2) * A + a2), b.W(row, s2));
        }
        // expected reward vector entry
        double r = 0.0;
        for (int s2 = 0; s2 < S; ++s2)
          r += m.transition(t, s, a, s2) * m.mean_reward(t, s, a, s2);
        CHECK_EQ(b.r(row), doctest::Approx(r).epsilon(1e-14));
      }
    }

    // policy matrix: one nonzero block per state row, entries are the policy
    for (int s = 0; s < S; ++s) {
      for (int s2 = 0; s2 < S; ++s2) {
        for (int a = 0; a < A; ++a) {
          double want = (s2 == s) ? pi.prob(t, s, a) : 0.0;
          CHECK_EQ(b.Pi(s, static_cast<Eigen::Index>(s2) * A + a), want);
        }
      }
    }
  }
}

TEST_CASE("k is j times the next policy block") {
  Rng rng(1002);
  TabularNvmdp m = random_nvmdp(rng, 3, 2, 5, 1.2);
  TimePolicy pi = random_policy(rng, 5, 3, 2);
  for (int t = 0; t < 4; ++t) {
    MatrixBundle here = build_bundle(m, pi, t);
    MatrixBundle next = build_bundle(m, pi, t + 1);
    Mat lhs = here.J * next.Pi;
    CHECK_LE((lhs - here.K).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_CASE("deterministic policies give one-hot policy rows") {
  Rng rng(1003);
  TabularNvmdp m = random_nvmdp(rng, 4, 3, 3, 0.9);
  TimePolicy pi = TimePolicy::deterministic(3, 4, 3, [](int t, int s) {
    return (t + 2 * s) % 3;
  });
  MatrixBundle b = build_bundle(m, pi, 1);
  for (int s = 0; s < 4; ++s) {
    int ones = 0;
    for (Eigen::Index c = 0; c < 12; ++c) {
      double x = b.Pi(s, c);
      CHECK((x == 0.0 || x == 1.0));
      if (x == 1.0) {
        ++ones;
        CHECK_EQ(c, static_cast<Eigen::Index>(s) * 3 + (1 + 2 * s) % 3);
      }
    }
    CHECK_EQ(ones, 1);
  }
}

TEST_CASE("pi times u is the identity for random shapes") {
  Rng rng(1004);
  for (int rep = 0; rep < 100; ++rep) {
    int S = 1 + rng.uniform_int(5);
    int A = 1 + rng.uniform_int(4);
    int H = 1 + rng.uniform_int(4);
    TabularNvmdp m = random_nvmdp(rng, S, A, H, 0.9);
    TimePolicy pi = random_policy(rng, H, S, A);
    MatrixBundle b = build_bundle(m, pi, rng.uniform_int(H));
    Mat eye = b.Pi * b.U;
    CHECK_LE((eye - Mat::Identity(S, S)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_CASE("discount kernels have bounded row mass") {
  Rng rng(1005);
  TabularNvmdp m = random_nvmdp(rng, 4, 2, 6, 1.3);
  TimePolicy pi = random_policy(rng, 6, 4, 2);
  for (int t = 0; t < 6; ++t) {
    MatrixBundle b = build_bundle(m, pi, t);
    double gmax = m.max_discount_at(t + 1);
    // infinity norms: P rows sum to one, Pi_{t+1} rows sum to one, so both
    // J and K inherit the per-epoch worst-case discount
    CHECK_LE(b.J.cwiseAbs().rowwise().sum().maxCoeff(), gmax + 1e-12);
    CHECK_LE(b.K.cwiseAbs().rowwise().sum().maxCoeff(), gmax + 1e-12);
  }
}

TEST_CASE("value recursions in matrix form") {
  SUBCASE("random models agree with the scalar sweep") {
    Rng rng(1006);
    for (int rep = 0; rep < 8; ++rep) {
      int S = 2 + rng.uniform_int(3);
      int A = 1 + rng.uniform_int(3);
      int H = 2 + rng.uniform_int(5);
      TabularNvmdp m = random_nvmdp(rng, S, A, H, 1.1);
      TimePolicy pi = random_policy(rng, H, S, A);
      DpResult res = policy_evaluation(m, pi);
      RecursionReport rep_out = value_recursion_check(m, pi, res.v, res.q);
      CHECK_LT(rep_out.max_residual(), 1e-9);
    }
  }

  SUBCASE("zero rewards give identically zero tables and residuals") {
    NvmdpDef def;
    def.num_states = 2;
    def.num_actions = 2;
    def.horizon = 4;
    def.reward_bound = 0.0;
    def.transition = [](int, int, int) { return std::vector<double>{0.5, 0.5}; };
    def.mean_reward = [](int, int, int, int) { return 0.0; };
    def.discount = [](int, int, int, int) { return 0.7; };
    def.start_states = {1.0, 0.0};
    TabularNvmdp m(def);
    TimePolicy pi = TimePolicy::uniform(4, 2, 2);
    DpResult res = policy_evaluation(m, pi);
    for (double x : res.v.data) CHECK_EQ(x, 0.0);
    for (double x : res.q.data) CHECK_EQ(x, 0.0);
    RecursionReport rep = value_recursion_check(m, pi, res.v, res.q);
    CHECK_EQ(rep.max_residual(), 0.0);
  }

  SUBCASE("horizon one closes the books immediately") {
    Rng rng(1007);
    TabularNvmdp m = random_nvmdp(rng, 3, 2, 1, 0.9);
    TimePolicy pi = random_policy(rng, 1, 3, 2);
    DpResult res = policy_evaluation(m, pi);
    MatrixBundle b = build_bundle(m, pi, 0);
    // q_0 = r_0 and v_0 = Pi_0 r_0, no future term survives
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a)
        CHECK_EQ(res.q.at(0, s, a),
                 doctest::Approx(b.r(static_cast<Eigen::Index>(s) * 2 + a)).epsilon(1e-14));
      Eigen::VectorXd v0 = b.Pi * b.r;
      CHECK_EQ(res.v.at(0, s), doctest::Approx(v0(s)).epsilon(1e-14));
    }
    CHECK_LT(value_recursion_check(m, pi, res.v, res.q).max_residual(), 1e-12);
  }

  SUBCASE("benchmark gridworld under a uniform policy") {
    TabularNvmdp m = build_tricky_gridworld(RewardScheme::deterministic,
                                            DiscountScheme::dr1);
    TimePolicy pi = TimePolicy::uniform(200, 24, 4);
    DpResult res = policy_evaluation(m, pi);
    RecursionReport rep = value_recursion_check(m, pi, res.v, res.q);
    CHECK_LT(rep.max_residual(), 1e-9);
  }

  SUBCASE("mismatched tables are rejected") {
    Rng rng(1008);
    TabularNvmdp m = random_nvmdp(rng, 2, 2, 3, 0.5);
    TimePolicy pi = TimePolicy::uniform(3, 2, 2);
    ValueTable v(3, 2);
    QTable q(3, 2, 3);  // wrong action count
    CHECK_THROWS_AS(value_recursion_check(m, pi, v, q), ValidationError);
  }
}

TEST_CASE("bundle guards") {
  SUBCASE("epoch out of range") {
    TabularNvmdp m = scalar_model(0.5, 0.0, 3);
    TimePolicy pi = TimePolicy::uniform(3, 1, 1);
    CHECK_THROWS_AS(build_bundle(m, pi, 3), ValidationError);
    CHECK_THROWS_AS(build_bundle(m, pi, -1), ValidationError);
  }

  SUBCASE("state-action count cap") {
    // 101 * 100 = 10100 rows is past the dense-view limit
    NvmdpDef def;
    def.num_states = 101;
    def.num_actions = 100;
    def.horizon = 1;
    def.reward_bound = 0.0;
    def.transition = [](int, int s, int) {
      std::vector<double> row(101, 0.0);
      row[static_cast<size_t>(s)] = 1.0;
      return row;
    };
    def.mean_reward = [](int, int, int, int) { return 0.0; };
    def.discount = [](int, int, int, int) { return 0.0; };
    def.start_states.assign(101, 0.0);
    def.start_states[0] = 1.0;
    TabularNvmdp big(def);
    TimePolicy pi = TimePolicy::uniform(1, 101, 100);
    try {
      build_bundle(big, pi, 0);
      FAIL("expected the dense-view refusal");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("refused") != std::string::npos);
    }
  }

  SUBCASE("policy must cover the model") {
    TabularNvmdp m = scalar_model(0.5, 0.0, 5);
    CHECK_THROWS_AS(build_bundle(m, TimePolicy::uniform(3, 1, 1), 0), ValidationError);
  }
}

TEST_CASE("csv dump") {
  Rng rng(1009);
  TabularNvmdp m = random_nvmdp(rng, 2, 2, 3, 0.8);
  TimePolicy pi = random_policy(rng, 3, 2, 2);
  MatrixBundle b = build_bundle(m, pi, 1);

  std::string dir = "test_matrixrep_dump";
  dump_bundle_csv(b, dir);

  for (const char* name : {"P", "Pi", "W", "M", "J", "K", "L", "U", "r"}) {
    CHECK(std::filesystem::exists(dir + "/" + std::string(name) + ".csv"));
  }

  std::ifstream p(dir + "/P.csv");
  std::string header, first;
  std::getline(p, header);
  std::getline(p, first);
  CHECK_EQ(header, "row,s0,s1");
  CHECK_EQ(first.substr(0, 5), "s0a0,");

  std::ifstream pic(dir + "/Pi.csv");
  std::getline(pic, header);
  CHECK_EQ(header, "row,s0a0,s0a1,s1a0,s1a1");

  // values round-trip through the %.17g formatting
  std::ifstream rf(dir + "/r.csv");
  std::getline(rf, header);
  CHECK_EQ(header, "row,value");
  std::getline(rf, first);
  auto comma = first.find(',');
  CHECK_EQ(std::stod(first.substr(comma + 1)), b.r(0));
}
