#include "cgfd/models/logspline.hpp"

#include <algorithm>
#include <cmath>

namespace cgfd {

namespace {

struct SegmentLine {
  double alpha;  // s at the segment start
  double beta;   // slope of s on the segment
};

std::vector<SegmentLine> segment_lines(const LinearBSplineBasis& basis, const Vector& theta) {
  std::vector<SegmentLine> lines;
  lines.reserve(basis.segments().size());
  for (const auto& seg : basis.segments()) {
    SegmentLine line{0.0, 0.0};
    for (const auto& p : seg.pieces) {
      line.alpha += theta(p.index) * p.c0;
      line.beta += theta(p.index) * p.c1;
    }
    lines.push_back(line);
  }
  return lines;
}

// int_0^len B_j exp(s) over one segment for every active j, added into out.
void add_first(const LinearBSplineBasis::Segment& seg, const SegmentLine& line, double len,
               Vector& out) {
  const auto e = exp_moments(line.beta, len);
  const double w = std::exp(line.alpha);
  for (const auto& p : seg.pieces) out(p.index) += w * (p.c0 * e[0] + p.c1 * e[1]);
}

void add_second(const LinearBSplineBasis::Segment& seg, const SegmentLine& line, double len,
                Matrix& out) {
  const auto e = exp_moments(line.beta, len);
  const double w = std::exp(line.alpha);
  for (const auto& p : seg.pieces) {
    for (const auto& q : seg.pieces) {
      out(p.index, q.index) +=
          w * (p.c0 * q.c0 * e[0] + (p.c0 * q.c1 + p.c1 * q.c0) * e[1] + p.c1 * q.c1 * e[2]);
    }
  }
}

void check_theta(const LinearBSplineBasis& basis, const Vector& theta) {
  if (theta.size() != basis.size()) {
    throw Error(ErrorKind::BadShape, "logspline parameter has the wrong length");
  }
  if (!theta.allFinite()) throw Error(ErrorKind::NonFinite, "logspline parameter is not finite");
}

}  // namespace

LogsplineIntegrals logspline_integrals(const LinearBSplineBasis& basis, const Vector& theta,
                                       bool with_second) {
  check_theta(basis, theta);
  const auto lines = segment_lines(basis, theta);
  LogsplineIntegrals out;
  out.first = Vector::Zero(basis.size());
  if (with_second) out.second = Matrix::Zero(basis.size(), basis.size());
  for (std::size_t s = 0; s < lines.size(); ++s) {
    const auto& seg = basis.segments()[s];
    out.normalizer += std::exp(lines[s].alpha) * exp_moments(lines[s].beta, seg.width)[0];
    add_first(seg, lines[s], seg.width, out.first);
    if (with_second) add_second(seg, lines[s], seg.width, out.second);
  }
  return out;
}

double logspline_pdf(const LinearBSplineBasis& basis, const Vector& theta, double t) {
  const double z = logspline_integrals(basis, theta).normalizer;
  return std::exp(theta.dot(basis.evaluate(t))) / z;
}

double logspline_quantile(const LinearBSplineBasis& basis, const Vector& theta, double u) {
  check_theta(basis, theta);
  const auto lines = segment_lines(basis, theta);
  const auto& segs = basis.segments();
  std::vector<double> mass(segs.size());
  double total = 0.0;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    mass[s] = std::exp(lines[s].alpha) * exp_moments(lines[s].beta, segs[s].width)[0];
    total += mass[s];
  }
  double remaining = std::clamp(u, 0.0, 1.0) * total;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (remaining > mass[s] && s + 1 < segs.size()) {
      remaining -= mass[s];
      continue;
    }
    // Solve exp(alpha) * expm1(beta tau) / beta = remaining for tau.
    const double r = remaining * std::exp(-lines[s].alpha);
    const double beta = lines[s].beta;
    double tau = std::abs(beta) < 1e-12 ? r : std::log1p(beta * r) / beta;
    if (!std::isfinite(tau)) tau = segs[s].width;
    return segs[s].start + std::clamp(tau, 0.0, segs[s].width);
  }
  return 1.0;
}

Vector logspline_knot_values(const LinearBSplineBasis& basis, const Vector& theta) {
  const auto knots = basis.knots_in_unit_interval();
  Vector values(static_cast<Eigen::Index>(knots.size()));
  for (std::size_t i = 0; i < knots.size(); ++i) {
    values(static_cast<Eigen::Index>(i)) = std::exp(theta.dot(basis.evaluate(knots[i])));
  }
  return values;
}

LogsplineModel::LogsplineModel(std::shared_ptr<const LinearBSplineBasis> basis,
                               std::vector<double> data)
    : basis_(std::move(basis)), data_(std::move(data)) {
  if (data_.empty()) throw Error(ErrorKind::EmptyData, "logspline model needs data");
  const int d = basis_->size();
  basis_at_data_.resize(static_cast<Eigen::Index>(data_.size()), d);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double y = data_[i];
    if (!(y > 0.0 && y < 1.0)) {
      throw Error(ErrorKind::DataOutOfRange, "logspline data must lie in (0, 1)");
    }
    const int s = basis_->segment_of(y);
    points_.push_back({s, y - basis_->segments()[s].start});
    basis_at_data_.row(static_cast<Eigen::Index>(i)) = basis_->evaluate(y).transpose();
  }
  basis_sum_ = basis_at_data_.colwise().sum().transpose();
}

double LogsplineModel::log_likelihood(const Vector& theta) const {
  const double z = logspline_integrals(*basis_, theta).normalizer;
  return theta.dot(basis_sum_) - static_cast<double>(data_.size()) * std::log(z);
}

Vector LogsplineModel::log_likelihood_gradient(const Vector& theta) const {
  const auto ints = logspline_integrals(*basis_, theta);
  return basis_sum_ - static_cast<double>(data_.size()) * ints.first / ints.normalizer;
}

Matrix LogsplineModel::dga_gradient(const Vector& theta) const {
  check_theta(*basis_, theta);
  const int d = basis_->size();
  const auto lines = segment_lines(*basis_, theta);
  const auto& segs = basis_->segments();

  // prefix[s] = int_0^{start_s} B exp(s)
  std::vector<Vector> prefix(segs.size() + 1, Vector::Zero(d));
  for (std::size_t s = 0; s < segs.size(); ++s) {
    prefix[s + 1] = prefix[s];
    add_first(segs[s], lines[s], segs[s].width, prefix[s + 1]);
  }

  Matrix jac(static_cast<Eigen::Index>(data_.size()), d);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& pt = points_[i];
    const auto& line = lines[pt.segment];
    Vector partial = prefix[pt.segment];
    add_first(segs[pt.segment], line, pt.offset, partial);
    const double density = std::exp(line.alpha + line.beta * pt.offset);
    jac.row(static_cast<Eigen::Index>(i)) = -partial.transpose() / density;
  }
  return jac;
}

Matrix LogsplineModel::dga_gradient_derivative(const Vector& theta, int k) const {
  check_theta(*basis_, theta);
  const int d = basis_->size();
  const auto lines = segment_lines(*basis_, theta);
  const auto& segs = basis_->segments();

  std::vector<Vector> prefix1(segs.size() + 1, Vector::Zero(d));
  std::vector<Matrix> prefix2(segs.size() + 1, Matrix::Zero(d, d));
  for (std::size_t s = 0; s < segs.size(); ++s) {
    prefix1[s + 1] = prefix1[s];
    prefix2[s + 1] = prefix2[s];
    add_first(segs[s], lines[s], segs[s].width, prefix1[s + 1]);
    add_second(segs[s], lines[s], segs[s].width, prefix2[s + 1]);
  }

  // d/dtheta_k of -I_j / exp(s(y)) = -(I_jk - B_k(y) I_j) / exp(s(y)).
  Matrix djac(static_cast<Eigen::Index>(data_.size()), d);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& pt = points_[i];
    const auto& line = lines[pt.segment];
    Vector first = prefix1[pt.segment];
    Matrix second = prefix2[pt.segment];
    add_first(segs[pt.segment], line, pt.offset, first);
    add_second(segs[pt.segment], line, pt.offset, second);
    const double density = std::exp(line.alpha + line.beta * pt.offset);
    const double bk = basis_at_data_(static_cast<Eigen::Index>(i), k);
    djac.row(static_cast<Eigen::Index>(i)) = -(second.col(k) - bk * first).transpose() / density;
  }
  return djac;
}

Vector LogsplineConstraint::constraint(const Vector& theta) const {
  return Vector::Constant(1, std::log(logspline_integrals(*basis_, theta).normalizer));
}

Matrix LogsplineConstraint::constraint_jacobian(const Vector& theta) const {
  const auto ints = logspline_integrals(*basis_, theta);
  return (ints.first / ints.normalizer).transpose();
}

Matrix LogsplineConstraint::jacobian_derivative(const Vector& theta, int i) const {
  const auto ints = logspline_integrals(*basis_, theta, true);
  const double z = ints.normalizer;
  const Vector row = ints.second.col(i) / z - ints.first * (ints.first(i) / (z * z));
  return row.transpose();
}

ConstrainedModel logspline_model(const std::vector<double>& data,
                                 const std::vector<double>& knots) {
  auto basis = std::make_shared<const LinearBSplineBasis>(knots);
  return {std::make_shared<const LogsplineModel>(basis, data),
          std::make_shared<const LogsplineConstraint>(basis)};
}

Vector fit_logspline(const LinearBSplineBasis& basis, const Vector& target,
                     const Tolerances& tol) {
  const auto basis_ptr = std::shared_ptr<const LinearBSplineBasis>(&basis, [](auto*) {});
  const LogsplineConstraint manifold(basis_ptr);
  const int d = basis.size();

  Vector theta = Vector::Zero(d);
  const Projection start = project_along(manifold, theta, Matrix::Identity(d, 1), tol);
  if (!start.ok()) throw Error(ErrorKind::InfeasibleInit, "could not find a feasible start");
  theta = start.point;

  for (int iter = 0; iter < 500; ++iter) {
    const TangentFrame frame = tangent_frame(manifold, theta, tol);
    const Vector grad = frame.tangent.transpose() * target;
    if (grad.norm() <= 1e-12 * (1.0 + target.norm())) break;

    const auto ints = logspline_integrals(basis, theta, true);
    const Vector grad_g = ints.first / ints.normalizer;
    const Matrix hess_g =
        ints.second / ints.normalizer - grad_g * grad_g.transpose();
    const double lambda = grad_g.dot(target) / grad_g.squaredNorm();
    const Matrix reduced = lambda * frame.tangent.transpose() * hess_g * frame.tangent;

    Vector step = grad;
    Eigen::LLT<Matrix> llt(reduced);
    if (lambda > 0.0 && llt.info() == Eigen::Success) step = llt.solve(grad);

    const double current = theta.dot(target);
    double scale = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
      const Vector y0 = theta + scale * frame.tangent * step;
      const Projection proj = project_to_manifold(manifold, y0, frame, tol);
      if (proj.ok() && proj.point.dot(target) > current) {
        theta = proj.point;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return theta;
}

Vector expected_basis(const LinearBSplineBasis& basis, const std::function<double(double)>& pdf,
                      const std::vector<double>& extra_breaks) {
  std::vector<double> breaks{0.0, 1.0};
  for (double k : basis.knots()) {
    if (k > 0.0 && k < 1.0) breaks.push_back(k);
  }
  for (double b : extra_breaks) {
    if (b > 0.0 && b < 1.0) breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // Three-point Gauss-Legendre is exact through degree 5.
  const double node = std::sqrt(0.6);
  const double nodes[3] = {-node, 0.0, node};
  const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  Vector out = Vector::Zero(basis.size());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
    const double half = 0.5 * (breaks[i + 1] - breaks[i]);
    for (int q = 0; q < 3; ++q) {
      const double t = mid + half * nodes[q];
      out += half * weights[q] * pdf(t) * basis.evaluate(t);
    }
  }
  return out;
}

double TriangularDistribution::pdf(double x) const {
  if (x < lower || x > upper) return 0.0;
  if (x < mode) return 2.0 * (x - lower) / ((upper - lower) * (mode - lower));
  return 2.0 * (upper - x) / ((upper - lower) * (upper - mode));
}

double TriangularDistribution::cdf(double x) const {
  if (x <= lower) return 0.0;
  if (x >= upper) return 1.0;
  if (x < mode) return (x - lower) * (x - lower) / ((upper - lower) * (mode - lower));
  return 1.0 - (upper - x) * (upper - x) / ((upper - lower) * (upper - mode));
}

double TriangularDistribution::quantile(double u) const {
  const double split = (mode - lower) / (upper - lower);
  if (u < split) return lower + std::sqrt(u * (upper - lower) * (mode - lower));
  return upper - std::sqrt((1.0 - u) * (upper - lower) * (upper - mode));
}

}  // namespace cgfd
