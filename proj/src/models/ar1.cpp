#include "cgfd/models/ar1.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace cgfd {

namespace {

struct CayleyState {
  Matrix inv_plus;  // L = (I + A)^{-1}
  Matrix c;         // (I - A) L
  Vector lambda;
};

CayleyState cayley_state(const Vector& theta, int n) {
  const CayleyParams p = ar1_unpack(theta, n);
  const Matrix id = Matrix::Identity(n, n);
  Eigen::PartialPivLU<Matrix> lu(id + p.a);
  if (!(lu.rcond() > 1e-12)) throw Error(ErrorKind::CayleySingular, "I + A is singular");
  CayleyState s;
  s.inv_plus = lu.inverse();
  s.c = (id - p.a) * s.inv_plus;
  s.lambda = p.lambda;
  return s;
}

// Sign-flip search over the columns of an orthogonal V (det +1 kept) for the
// Cayley preimage with the smallest max |A_qr|.
Matrix best_skew_preimage(Matrix v) {
  const int n = static_cast<int>(v.cols());
  if (v.determinant() < 0.0) v.col(0) *= -1.0;
  const Matrix id = Matrix::Identity(n, n);
  Matrix best;
  double best_norm = std::numeric_limits<double>::infinity();
  const unsigned combos = 1u << (n - 1);
  for (unsigned mask = 0; mask < combos; ++mask) {
    // Flip an even number of columns: pairs (j, n-1) for each set bit j.
    Matrix w = v;
    for (int j = 0; j + 1 < n; ++j) {
      if (mask & (1u << j)) {
        w.col(j) *= -1.0;
        w.col(n - 1) *= -1.0;
      }
    }
    Eigen::PartialPivLU<Matrix> lu(id + w);
    if (!(lu.rcond() > 1e-10)) continue;
    const Matrix a = lu.solve(id - w);  // (I + C)^{-1} (I - C)
    const double size = a.cwiseAbs().maxCoeff();
    if (size < best_norm) {
      best_norm = size;
      best = a;
    }
  }
  if (best.size() == 0) throw Error(ErrorKind::CayleySingular, "no Cayley preimage found");
  return 0.5 * (best - best.transpose());
}

}  // namespace

int ar1_param_dim(int n) { return n * (n - 1) / 2 + n; }

CayleyParams ar1_unpack(const Vector& theta, int n) {
  if (theta.size() != ar1_param_dim(n)) {
    throw Error(ErrorKind::BadShape, "AR(1) parameter has the wrong length");
  }
  CayleyParams p{Matrix::Zero(n, n), theta.tail(n)};
  int k = 0;
  for (int q = 0; q < n; ++q) {
    for (int r = q + 1; r < n; ++r, ++k) {
      p.a(q, r) = theta(k);
      p.a(r, q) = -theta(k);
    }
  }
  return p;
}

Vector ar1_pack(const Matrix& a, const Vector& lambda) {
  const int n = static_cast<int>(a.rows());
  Vector theta(ar1_param_dim(n));
  int k = 0;
  for (int q = 0; q < n; ++q) {
    for (int r = q + 1; r < n; ++r) theta(k++) = a(q, r);
  }
  theta.tail(n) = lambda;
  return theta;
}

Matrix cayley(const Matrix& a) {
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  Eigen::PartialPivLU<Matrix> lu(id + a);
  if (!(lu.rcond() > 1e-12)) throw Error(ErrorKind::CayleySingular, "I + A is singular");
  return (id - a) * lu.inverse();
}

Matrix ar1_covariance(const Vector& theta, int n) {
  const CayleyState s = cayley_state(theta, n);
  return s.c * s.lambda.array().square().matrix().asDiagonal() * s.c.transpose();
}

std::vector<Matrix> ar1_covariance_derivatives(const Vector& theta, int n) {
  const CayleyState s = cayley_state(theta, n);
  const Matrix& l = s.inv_plus;
  // dC/dA_qr = -2 L dA L, so dSigma = B + B^T with B = -2 L dA (L Lambda^2 C^T).
  const Matrix right = l * s.lambda.array().square().matrix().asDiagonal() * s.c.transpose();
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(ar1_param_dim(n)));
  for (int q = 0; q < n; ++q) {
    for (int r = q + 1; r < n; ++r) {
      const Matrix b = -2.0 * (l.col(q) * right.row(r) - l.col(r) * right.row(q));
      out.push_back(b + b.transpose());
    }
  }
  for (int k = 0; k < n; ++k) {
    out.push_back(2.0 * s.lambda(k) * s.c.col(k) * s.c.col(k).transpose());
  }
  return out;
}

Matrix ar1_stationary_covariance(double rho, double sigma, int n) {
  if (!(std::abs(rho) < 1.0 && sigma > 0.0)) {
    throw Error(ErrorKind::CovarianceNotSPD, "AR(1) covariance needs |rho| < 1 and sigma > 0");
  }
  Matrix cov(n, n);
  const double scale = sigma * sigma / (1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) cov(i, j) = scale * std::pow(rho, std::abs(i - j));
  }
  return cov;
}

double ar1_rho(const Matrix& sigma_matrix) { return sigma_matrix(0, 1) / sigma_matrix(0, 0); }

double ar1_sigma(const Matrix& sigma_matrix) {
  const double rho = ar1_rho(sigma_matrix);
  return std::sqrt(sigma_matrix(0, 0) * (1.0 - rho * rho));
}

Vector ar1_initial_point(double rho, double sigma, int n) {
  const Matrix cov = ar1_stationary_covariance(rho, sigma, n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorKind::CovarianceNotSPD, "AR(1) covariance is not positive definite");
  }
  const Matrix a = best_skew_preimage(eig.eigenvectors());
  // Re-derive Lambda from the chosen C so that Sigma is reproduced exactly.
  const Matrix c = cayley(a);
  const Vector lambda = (c.transpose() * cov * c).diagonal().cwiseSqrt();
  return ar1_pack(a, lambda);
}

Ar1Model::Ar1Model(std::vector<double> data) : data_(std::move(data)) {
  if (data_.size() < 3) throw Error(ErrorKind::EmptyData, "AR(1) model needs at least 3 values");
  x_ = Eigen::Map<const Vector>(data_.data(), static_cast<Eigen::Index>(data_.size()));
}

double Ar1Model::log_likelihood(const Vector& theta) const {
  const int n = series_length();
  const CayleyParams p = ar1_unpack(theta, n);
  if (!(p.lambda.minCoeff() > 0.0) || p.a.cwiseAbs().maxCoeff() > 1.0) {
    return -std::numeric_limits<double>::infinity();
  }
  const Matrix c = cayley(p.a);
  const Vector z = (c.transpose() * x_).cwiseQuotient(p.lambda);
  return -0.5 * z.squaredNorm() - p.lambda.array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Matrix Ar1Model::dga_gradient(const Vector& theta) const {
  const int n = series_length();
  const CayleyState s = cayley_state(theta, n);
  const Vector ct_x = s.c.transpose() * x_;  // Lambda Z
  const Vector z = ct_x.cwiseQuotient(s.lambda);
  const Vector w = s.inv_plus * ct_x;
  Matrix jac(n, ar1_param_dim(n));
  int k = 0;
  for (int q = 0; q < n; ++q) {
    for (int r = q + 1; r < n; ++r, ++k) {
      jac.col(k) = -2.0 * (s.inv_plus.col(q) * w(r) - s.inv_plus.col(r) * w(q));
    }
  }
  for (int j = 0; j < n; ++j) jac.col(k + j) = s.c.col(j) * z(j);
  return jac;
}

Ar1Constraint::Ar1Constraint(int n) : n_(n) {
  if (n < 3) throw Error(ErrorKind::BadShape, "AR(1) constraint needs n >= 3");
}

Vector Ar1Constraint::constraint(const Vector& theta) const {
  const Matrix cov = ar1_covariance(theta, n_);
  Vector g(codim());
  int row = 0;
  for (int i = 0; i + 1 < n_; ++i) {
    for (int j = i; j + 1 < n_; ++j) g(row++) = cov(i, j) - cov(i + 1, j + 1);
  }
  for (int k = 0; k + 2 < n_; ++k) {
    g(row++) = cov(0, k + 1) * cov(0, k + 1) - cov(0, k) * cov(0, k + 2);
  }
  return g;
}

Matrix Ar1Constraint::constraint_jacobian(const Vector& theta) const {
  const Matrix cov = ar1_covariance(theta, n_);
  const auto dcov = ar1_covariance_derivatives(theta, n_);
  Matrix jac(codim(), ambient_dim());
  for (int col = 0; col < ambient_dim(); ++col) {
    const Matrix& d = dcov[static_cast<std::size_t>(col)];
    int row = 0;
    for (int i = 0; i + 1 < n_; ++i) {
      for (int j = i; j + 1 < n_; ++j) jac(row++, col) = d(i, j) - d(i + 1, j + 1);
    }
    for (int k = 0; k + 2 < n_; ++k) {
      jac(row++, col) = 2.0 * cov(0, k + 1) * d(0, k + 1) - d(0, k) * cov(0, k + 2) -
                        cov(0, k) * d(0, k + 2);
    }
  }
  return jac;
}

ConstrainedModel ar1_model(const std::vector<double>& data) {
  return {std::make_shared<const Ar1Model>(data),
          std::make_shared<const Ar1Constraint>(static_cast<int>(data.size()))};
}

}  // namespace cgfd
