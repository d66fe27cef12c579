#include "nvmdp/matrixrep.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nvmdp/errors.hpp"

namespace nvmdp {

namespace {

Mat policy_matrix(const TimePolicy& policy, int t, int S, int A) {
  Mat pi = Mat::Zero(S, static_cast<Eigen::Index>(S) * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      pi(s, static_cast<Eigen::Index>(s) * A + a) = policy.prob(t, s, a);
    }
  }
  return pi;
}

Eigen::VectorXd reward_vector(const TabularNvmdp& model, int t) {
  const int S = model.num_states(), A = model.num_actions();
  Eigen::VectorXd r(static_cast<Eigen::Index>(S) * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double* p = model.transition_row(t, s, a);
      double acc = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        if (p[s2] != 0.0) acc += p[s2] * model.mean_reward(t, s, a, s2);
      }
      r(static_cast<Eigen::Index>(s) * A + a) = acc;
    }
  }
  return r;
}

}  // namespace

MatrixBundle build_bundle(const TabularNvmdp& model, const TimePolicy& policy, int t) {
  const int S = model.num_states(), A = model.num_actions();
  if (policy.num_states() != S || policy.num_actions() != A ||
      policy.horizon() < model.horizon()) {
    throw ValidationError("policy shape does not cover the model");
  }
  if (t < 0 || t >= model.horizon()) {
    throw ValidationError("bundle epoch must satisfy 0 <= t < horizon");
  }
  const long rows = static_cast<long>(S) * A;
  if (rows > 10000) {
    throw ValidationError("matrix view refused: state-action count exceeds 10^4 rows");
  }

  MatrixBundle b;
  b.t = t;
  b.S = S;
  b.A = A;
  b.P = Mat::Zero(rows, S);
  b.W = Mat::Zero(rows, S);
  b.U = Mat::Zero(rows, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const Eigen::Index m = static_cast<Eigen::Index>(s) * A + a;
      const double* p = model.transition_row(t, s, a);
      for (int s2 = 0; s2 < S; ++s2) {
        b.P(m, s2) = p[s2];
        b.W(m, s2) = model.discount(t + 1, s, a, s2);
      }
      b.U(m, s) = 1.0;
    }
  }
  b.Pi = policy_matrix(policy, t, S, A);
  b.M = Mat::Zero(rows, rows);
  for (Eigen::Index m = 0; m < rows; ++m) {
    for (int s2 = 0; s2 < S; ++s2) {
      for (int a2 = 0; a2 < A; ++a2) {
        b.M(m, static_cast<Eigen::Index>(s2) * A + a2) = b.W(m, s2);
      }
    }
  }
  b.J = b.W.cwiseProduct(b.P);
  Mat pi_next = policy_matrix(policy, t + 1, S, A);
  b.K = b.M.cwiseProduct(b.P * pi_next);
  b.L = b.Pi * b.J;
  b.r = reward_vector(model, t);
  return b;
}

double RecursionReport::max_residual() const {
  return std::max({v_from_q, q_onestep_j, v_onestep_l, q_onestep_k, k_from_j,
                   v_finite_sum, q_finite_sum});
}

RecursionReport value_recursion_check(const TabularNvmdp& model,
                                      const TimePolicy& policy,
                                      const ValueTable& v, const QTable& q) {
  const int H = model.horizon(), S = model.num_states(), A = model.num_actions();
  if (v.horizon != H || v.num_states != S || q.horizon != H || q.num_states != S ||
      q.num_actions != A) {
    throw ValidationError("value tables do not match the model shape");
  }
  const Eigen::Index SA = static_cast<Eigen::Index>(S) * A;

  auto v_at = [&](int t) {
    return Eigen::Map<const Eigen::VectorXd>(&v.data[static_cast<size_t>(t) * S], S);
  };
  auto q_at = [&](int t) {
    return Eigen::Map<const Eigen::VectorXd>(
        &q.data[static_cast<size_t>(t) * S * A], SA);
  };

  RecursionReport rep;
  // Running left products for the horizon sums at t = 0: v_0 expands to
  // sum_t (L_0 ... L_{t-1}) Pi_t r_t and q_0 to sum_t (K_0 ... K_{t-1}) r_t
  // (empty products are the identity), since v_H and q_H vanish. The epoch-t
  // term therefore uses the kernels of the PREVIOUS epochs only.
  Mat prod_l = Mat::Identity(S, S);
  Mat prod_k = Mat::Identity(SA, SA);
  Mat last_l, last_k;
  Eigen::VectorXd v_sum = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd q_sum = Eigen::VectorXd::Zero(SA);

  for (int t = 0; t < H; ++t) {
    MatrixBundle b = build_bundle(model, policy, t);
    Mat pi_next = policy_matrix(policy, t + 1, S, A);

    double r1 = (v_at(t) - b.Pi * q_at(t)).cwiseAbs().maxCoeff();
    double r2 = (q_at(t) - (b.r + b.J * v_at(t + 1))).cwiseAbs().maxCoeff();
    double r3 = (v_at(t) - (b.Pi * b.r + b.L * v_at(t + 1))).cwiseAbs().maxCoeff();
    double r4 = (q_at(t) - (b.r + b.K * q_at(t + 1))).cwiseAbs().maxCoeff();
    double r5 = (b.K - b.J * pi_next).cwiseAbs().maxCoeff();
    rep.v_from_q = std::max(rep.v_from_q, r1);
    rep.q_onestep_j = std::max(rep.q_onestep_j, r2);
    rep.v_onestep_l = std::max(rep.v_onestep_l, r3);
    rep.q_onestep_k = std::max(rep.q_onestep_k, r4);
    rep.k_from_j = std::max(rep.k_from_j, r5);

    if (t > 0) {
      prod_l = prod_l * last_l;
      prod_k = prod_k * last_k;
    }
    v_sum += prod_l * (b.Pi * b.r);
    q_sum += prod_k * b.r;
    last_l = b.L;
    last_k = b.K;
  }
  rep.v_finite_sum = (v_at(0) - v_sum).cwiseAbs().maxCoeff();
  rep.q_finite_sum = (q_at(0) - q_sum).cwiseAbs().maxCoeff();
  return rep;
}

namespace {

void write_matrix_csv(const std::string& path, const Mat& m,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "row";
  for (const auto& c : col_labels) out << "," << c;
  out << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << row_labels[static_cast<size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

void dump_bundle_csv(const MatrixBundle& b, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  std::vector<std::string> states, pairs;
  for (int s = 0; s < b.S; ++s) states.push_back("s" + std::to_string(s));
  for (int s = 0; s < b.S; ++s) {
    for (int a = 0; a < b.A; ++a) {
      pairs.push_back("s" + std::to_string(s) + "a" + std::to_string(a));
    }
  }
  const std::string base = dir + "/";
  write_matrix_csv(base + "P.csv", b.P, pairs, states);
  write_matrix_csv(base + "Pi.csv", b.Pi, states, pairs);
  write_matrix_csv(base + "W.csv", b.W, pairs, states);
  write_matrix_csv(base + "M.csv", b.M, pairs, pairs);
  write_matrix_csv(base + "J.csv", b.J, pairs, states);
  write_matrix_csv(base + "K.csv", b.K, pairs, pairs);
  write_matrix_csv(base + "L.csv", b.L, states, states);
  write_matrix_csv(base + "U.csv", b.U, pairs, states);
  write_matrix_csv(base + "r.csv", b.r, pairs, {"value"});
}

}  // namespace nvmdp
