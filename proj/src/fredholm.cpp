#include "semitrans/fredholm.hpp"

#include <cmath>

#include "semitrans/error.hpp"

namespace semitrans {

namespace {

void fill_psi(FredholmSystem& s) {
  const std::size_t m = s.size();
  s.c.resize(m);
  s.b.resize(m);
  s.kappa_curve.resize(m);
  double c = 0, b = 0, kap = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (!(s.dc[k] >= 0) || !(s.db[k] >= 0) || !std::isfinite(s.dc[k]) || !std::isfinite(s.db[k]))
      fail(ErrorCode::Overflow, "Fredholm measures must be finite and nonnegative");
    c += s.dc[k];
    b += s.db[k];
    kap += c * s.db[k];
    s.c[k] = c;
    s.b[k] = b;
    s.kappa_curve[k] = kap;
  }
  s.kappa = kap;
  s.psi1_from0.resize(m);
  double t1 = 0, t2 = 0;
  for (std::size_t k = 0; k < m; ++k) {
    double v = s.c[k] + s.c[k] * t1 - t2;
    s.psi1_from0[k] = v;
    t1 += v * s.db[k];
    t2 += v * s.db[k] * s.c[k];
  }
  s.psi0_to_end.resize(m);
  double u1 = 0, u2 = 0;  // sums over atoms after k of c db Psi0 and db Psi0
  for (std::size_t k = m; k-- > 0;) {
    double v = 1.0 + u1 - s.c[k] * u2;
    s.psi0_to_end[k] = v;
    u1 += s.c[k] * s.db[k] * v;
    u2 += s.db[k] * v;
  }
  s.psi0_total = 1.0 + u1;
  if (!std::isfinite(s.psi0_total) || !std::isfinite(s.kappa))
    fail(ErrorCode::Overflow, "Fredholm system overflow; kappa is not finite");
}

}  // namespace

FredholmSystem build_system(GridPtr grid, std::span<const double> dC, std::span<const double> dB,
                            std::span<const double> log_p0) {
  const std::size_t m = dC.size();
  if (dB.size() != m || log_p0.size() != m || (grid && grid->size() != m))
    fail(ErrorCode::GridMismatch, "build_system: inputs of different length");
  FredholmSystem s;
  s.grid = std::move(grid);
  s.dc.resize(m);
  s.db.resize(m);
  s.log_p0.assign(log_p0.begin(), log_p0.end());
  for (std::size_t k = 0; k < m; ++k) {
    if (!(std::abs(log_p0[k]) <= 300))
      fail(ErrorCode::Overflow, "log P(0,t) magnitude exceeds 300 at event " + std::to_string(k) +
                                    "; kernel blows up");
    s.dc[k] = std::exp(-2.0 * log_p0[k]) * dC[k];
    s.db[k] = std::exp(2.0 * log_p0[k]) * dB[k];
  }
  fill_psi(s);
  return s;
}

FredholmSystem build_system(const Functionals& fun) {
  return build_system(fun.grid, fun.dC, fun.dB, fun.log_p0);
}

FredholmSystem build_transformed(std::span<const double> dc, std::span<const double> db) {
  if (dc.size() != db.size()) fail(ErrorCode::GridMismatch, "dc and db differ in length");
  FredholmSystem s;
  s.dc.assign(dc.begin(), dc.end());
  s.db.assign(db.begin(), db.end());
  s.log_p0.assign(dc.size(), 0.0);
  fill_psi(s);
  return s;
}

double resolvent(const FredholmSystem& sys, std::size_t s, std::size_t t) {
  std::size_t lo = std::min(s, t), hi = std::max(s, t);
  if (hi >= sys.size()) fail(ErrorCode::InvalidArgument, "resolvent index outside grid");
  return sys.psi1_from0[lo] * sys.psi0_to_end[hi] / sys.psi0_total;
}

Eigen::MatrixXd resolvent_matrix(const FredholmSystem& sys) {
  const auto m = static_cast<Eigen::Index>(sys.size());
  Eigen::MatrixXd R(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      R(i, j) = resolvent(sys, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return R;
}

GridMatrix apply_resolvent(const FredholmSystem& sys, const GridMatrix& g) {
  const std::size_t m = sys.size();
  if (static_cast<std::size_t>(g.rows()) != m)
    fail(ErrorCode::GridMismatch, "apply_resolvent: wrong length");
  GridMatrix out(g.rows(), g.cols());
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    std::vector<double> tail(m + 1, 0.0);
    for (std::size_t k = m; k-- > 0;)
      tail[k] = tail[k + 1] + sys.psi0_to_end[k] * g(static_cast<Eigen::Index>(k), c);
    double head = 0;
    for (std::size_t k = 0; k < m; ++k) {
      head += sys.psi1_from0[k] * g(static_cast<Eigen::Index>(k), c);
      out(static_cast<Eigen::Index>(k), c) =
          (sys.psi0_to_end[k] * head + sys.psi1_from0[k] * tail[k + 1]) / sys.psi0_total;
    }
  }
  return out;
}

GridMatrix apply_kernel(const FredholmSystem& sys, const GridMatrix& g) {
  const std::size_t m = sys.size();
  if (static_cast<std::size_t>(g.rows()) != m)
    fail(ErrorCode::GridMismatch, "apply_kernel: wrong length");
  GridMatrix out(g.rows(), g.cols());
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    std::vector<double> tail(m + 1, 0.0);
    for (std::size_t k = m; k-- > 0;) tail[k] = tail[k + 1] + g(static_cast<Eigen::Index>(k), c);
    double head = 0;
    for (std::size_t k = 0; k < m; ++k) {
      head += sys.c[k] * g(static_cast<Eigen::Index>(k), c);
      out(static_cast<Eigen::Index>(k), c) = head + sys.c[k] * tail[k + 1];
    }
  }
  return out;
}

Eigen::MatrixXd dense_operator(const FredholmSystem& sys) {
  const auto m = static_cast<Eigen::Index>(sys.size());
  if (m > 2000) fail(ErrorCode::InvalidArgument, "dense oracle limited to 2000 grid points");
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      A(i, j) += sys.c[static_cast<std::size_t>(std::min(i, j))] * sys.db[static_cast<std::size_t>(j)];
  return A;
}

namespace {

Eigen::MatrixXd dense_kernel(const FredholmSystem& sys) {
  const auto m = static_cast<Eigen::Index>(sys.size());
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) K(i, j) = sys.c[static_cast<std::size_t>(std::min(i, j))];
  return K;
}

}  // namespace

GridMatrix solve_dense_oracle(const FredholmSystem& sys, const GridMatrix& rhs) {
  if (static_cast<std::size_t>(rhs.rows()) != sys.size())
    fail(ErrorCode::GridMismatch, "solve_dense_oracle: wrong length");
  Eigen::MatrixXd A = dense_operator(sys);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(std::abs(lu.determinant()) > 0))
    fail(ErrorCode::Internal, "dense Fredholm operator is singular");
  Eigen::MatrixXd x = lu.solve(Eigen::MatrixXd(rhs));
  return GridMatrix(x);
}

Eigen::MatrixXd resolvent_dense(const FredholmSystem& sys) {
  Eigen::MatrixXd A = dense_operator(sys);
  return A.partialPivLu().solve(dense_kernel(sys));
}

Eigen::VectorXd operator_eigenvalues(const FredholmSystem& sys) {
  const auto m = static_cast<Eigen::Index>(sys.size());
  if (m > 2000) fail(ErrorCode::InvalidArgument, "dense oracle limited to 2000 grid points");
  Eigen::MatrixXd S = dense_kernel(sys);
  Eigen::VectorXd r(m);
  for (Eigen::Index i = 0; i < m; ++i) r(i) = std::sqrt(sys.db[static_cast<std::size_t>(i)]);
  S = r.asDiagonal() * S * r.asDiagonal();
  S.diagonal().array() += 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

GridMatrix solve_tridiagonal(const FredholmSystem& sys, const GridMatrix& g) {
  const std::size_t m = sys.size();
  if (static_cast<std::size_t>(g.rows()) != m)
    fail(ErrorCode::GridMismatch, "solve_tridiagonal: wrong length");
  for (double v : sys.dc)
    if (!(v > 0)) fail(ErrorCode::SingularMatrix, "tridiagonal route needs dc > 0 on the grid");
  std::vector<double> diag(m), off(m > 0 ? m - 1 : 0);
  for (std::size_t i = 0; i < m; ++i) {
    diag[i] = 1.0 / sys.dc[i] + (i + 1 < m ? 1.0 / sys.dc[i + 1] : 0.0) + sys.db[i];
    if (i + 1 < m) off[i] = -1.0 / sys.dc[i + 1];
  }
  GridMatrix out(g.rows(), g.cols());
  std::vector<double> cp(m), dp(m);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      double a = i > 0 ? off[i - 1] : 0.0;
      double den = diag[i] - (i > 0 ? a * cp[i - 1] : 0.0);
      cp[i] = i + 1 < m ? off[i] / den : 0.0;
      dp[i] = (g(static_cast<Eigen::Index>(i), c) - (i > 0 ? a * dp[i - 1] : 0.0)) / den;
    }
    for (std::size_t i = m; i-- > 0;) {
      double v = dp[i] - (i + 1 < m ? cp[i] * out(static_cast<Eigen::Index>(i + 1), c) : 0.0);
      out(static_cast<Eigen::Index>(i), c) = v;
    }
  }
  return out;
}

double kernel_l2_surrogate(const FredholmSystem& sys) {
  double tail = 0, s = 0;
  for (std::size_t k = sys.size(); k-- > 0;) {
    s += sys.c[k] * sys.c[k] * sys.db[k] * (sys.db[k] + 2.0 * tail);
    tail += sys.db[k];
  }
  return s;
}

double fredholm_residual(const Functionals& fun, const FredholmSystem& sys, const GridMatrix& phi,
                         const GridMatrix& d_f) {
  const std::size_t m = sys.size();
  GridMatrix v(phi.rows(), phi.cols());
  for (std::size_t k = 0; k < m; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    double P = std::exp(fun.log_p0[k]);
    for (Eigen::Index c = 0; c < phi.cols(); ++c)
      v(K, c) = P * (phi(K, c) * fun.dB[k] - fun.cov_f_lp(K, c) * fun.dN[k]);
  }
  GridMatrix kv = apply_kernel(sys, v);
  double r = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    double P = std::exp(fun.log_p0[k]);
    for (Eigen::Index c = 0; c < phi.cols(); ++c)
      r = std::max(r, std::abs(phi(K, c) + d_f(K, c) + P * kv(K, c)));
  }
  return r;
}

PhiSolution solve_phi(const FredholmSystem& sys, const Functionals& fun, double tol) {
  const std::size_t m = fun.size();
  if (sys.size() != m) fail(ErrorCode::GridMismatch, "solve_phi: system and functionals differ");
  PhiSolution out;
  out.d_f = d_volterra(fun, fun.s_f);
  const auto P = static_cast<Eigen::Index>(fun.p);
  out.rho_tilde.resize(static_cast<Eigen::Index>(m), P);
  GridMatrix g(static_cast<Eigen::Index>(m), P);
  for (std::size_t k = 0; k < m; ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    double p0 = std::exp(fun.log_p0[k]);
    for (Eigen::Index c = 0; c < P; ++c) {
      double rho = fun.cov_f_lp(K, c) + fun.var_lp[k] * out.d_f(K, c);
      out.rho_tilde(K, c) = p0 * rho;
      g(K, c) = out.rho_tilde(K, c) * fun.dN[k];
    }
  }
  auto assemble = [&](const GridMatrix& psi) {
    out.phi.resize(static_cast<Eigen::Index>(m), P);
    for (std::size_t k = 0; k < m; ++k) {
      const auto K = static_cast<Eigen::Index>(k);
      double p0 = std::exp(fun.log_p0[k]);
      for (Eigen::Index c = 0; c < P; ++c) out.phi(K, c) = -out.d_f(K, c) + p0 * psi(K, c);
    }
    out.residual = fredholm_residual(fun, sys, out.phi, out.d_f);
    return out.residual <= tol;
  };
  out.route = "psi";
  if (assemble(apply_resolvent(sys, g))) return out;
  out.route = "tridiagonal";
  if (assemble(solve_tridiagonal(sys, g))) return out;
  if (m <= 2000) {
    out.route = "dense";
    if (assemble(solve_dense_oracle(sys, apply_kernel(sys, g)))) return out;
  }
  fail(ErrorCode::ResidualTooLarge,
       "solve_phi: Fredholm residual " + std::to_string(out.residual) + " exceeds tolerance");
}

IntervalTables interval_tables(const FredholmSystem& sys) {
  const std::size_t m = sys.size();
  const auto M = static_cast<Eigen::Index>(m + 1);
  IntervalTables t;
  t.psi0 = Eigen::MatrixXd::Zero(M, M);
  t.psi1 = Eigen::MatrixXd::Zero(M, M);
  t.psi2 = Eigen::MatrixXd::Zero(M, M);
  t.psi3 = Eigen::MatrixXd::Zero(M, M);
  std::vector<double> C(m + 1, 0.0), B(m + 1, 0.0);
  for (std::size_t q = 1; q <= m; ++q) {
    C[q] = sys.c[q - 1];
    B[q] = sys.b[q - 1];
  }
  for (std::size_t p = 0; p <= m; ++p) {
    const auto Pi = static_cast<Eigen::Index>(p);
    t.psi0(Pi, Pi) = 1.0;
    t.psi2(Pi, Pi) = 1.0;
    double s0a = 0, s0b = 0, s1a = 0, s1b = 0, s2a = 0, s2b = 0, s3a = 0, s3b = 0;
    for (std::size_t q = p + 1; q <= m; ++q) {
      const auto Q = static_cast<Eigen::Index>(q);
      double cu = sys.dc[q - 1], bu = sys.db[q - 1];
      double prev0 = t.psi0(Pi, Q - 1), prev3 = t.psi3(Pi, Q - 1);
      s0a += prev0 * cu;
      s0b += prev0 * cu * B[q - 1];
      s3a += prev3 * cu;
      s3b += prev3 * cu * B[q - 1];
      t.psi0(Pi, Q) = 1.0 + B[q] * s0a - s0b;
      t.psi3(Pi, Q) = (B[q] - B[p]) + B[q] * s3a - s3b;
      double v1 = (C[q] - C[p]) + C[q] * s1a - s1b;
      double v2 = 1.0 + C[q] * s2a - s2b;
      t.psi1(Pi, Q) = v1;
      t.psi2(Pi, Q) = v2;
      s1a += v1 * bu;
      s1b += v1 * bu * C[q];
      s2a += v2 * bu;
      s2b += v2 * bu * C[q];
    }
  }
  return t;
}

}  // namespace semitrans
